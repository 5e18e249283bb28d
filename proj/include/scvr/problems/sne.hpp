#pragma once

// Stochastic neighbor embedding written as a two-level composition.
//
// With data-side similarities p_{i|t} (row t of `p_matrix` sums to 1 over
// i != t) and embedding kernel d(y_t, y_k) = exp(-||y_t - y_k||^2):
//
//   G_k(y) = [ y ; n d(y_1, y_k) - 1, ..., n d(y_n, y_k) - 1 ],  k = 1..n
//   F_i(w) = n sum_t p_{i|t} ( ||w_t - w_i||^2 + log w_{n+t} ),  i = 1..n
//
// so that (1/n) sum_k G_k(y) = [ y ; sum_{k != t} d(y_t, y_k) ] and
// f(y) = sum_t sum_i p_{i|t} ( ||y_t - y_i||^2 + log sum_{k != t} d(y_t, y_k) ),
// the SNE cross-entropy. In w, block t (embed_dim coordinates) holds y_t and
// coordinate N + t holds the t-th normalizer.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "scvr/core.hpp"
#include "scvr/problems/dataset.hpp"

namespace scvr {

class SneProblem {
 public:
  /// Smallest normalizer value fed to log(); smaller arguments are clamped.
  static constexpr double kNormalizerFloor = 1e-12;

  SneProblem(Eigen::MatrixXd p_matrix, std::vector<double> sigma, std::size_t embed_dim)
      : p_(std::move(p_matrix)),
        sigma_(std::move(sigma)),
        embed_dim_(embed_dim),
        guard_events_(std::make_shared<std::atomic<std::size_t>>(0)) {
    if (p_.rows() < 2 || p_.rows() != p_.cols())
      throw ConstructionError("sne: p_matrix must be square with n >= 2");
    if (embed_dim_ == 0) throw ConstructionError("sne: embed_dim must be >= 1");
    for (Eigen::Index t = 0; t < p_.rows(); ++t) {
      if ((p_.row(t).array() < 0).any() || !p_.row(t).allFinite())
        throw ConstructionError("sne: p_matrix entries must be finite and non-negative");
      if (std::abs(p_.row(t).sum() - p_(t, t) - 1.0) > 1e-9)
        throw ConstructionError("sne: p_matrix row " + std::to_string(t + 1) + " does not sum to 1");
    }
    constants_ = SmoothnessConstants{};
    constants_.estimated = true;
  }

  std::size_t points() const { return static_cast<std::size_t>(p_.rows()); }
  std::size_t embed_dim() const { return embed_dim_; }
  std::size_t outer_count() const { return points(); }
  std::size_t inner_count() const { return points(); }
  std::size_t input_dim() const { return points() * embed_dim_; }
  std::size_t inner_dim() const { return input_dim() + points(); }

  const SmoothnessConstants& constants() const { return constants_; }
  void set_constants(const SmoothnessConstants& c) { constants_ = c; }

  const Eigen::MatrixXd& p_matrix() const { return p_; }
  const std::vector<double>& sigma() const { return sigma_; }

  /// Number of times a normalizer argument was clamped to kNormalizerFloor.
  std::size_t guard_events() const { return guard_events_->load(); }

  Eigen::VectorXd inner_component(std::size_t k, const Eigen::VectorXd& y) const {
    const std::size_t n = points();
    const auto big_n = static_cast<Eigen::Index>(input_dim());
    Eigen::VectorXd w(static_cast<Eigen::Index>(inner_dim()));
    w.head(big_n) = y;
    const double scale = static_cast<double>(n);
    for (std::size_t t = 0; t < n; ++t)
      w[big_n + static_cast<Eigen::Index>(t)] = scale * kernel(y, t, k) - 1.0;
    return w;
  }

  Eigen::MatrixXd inner_component_jacobian(std::size_t k, const Eigen::VectorXd& y) const {
    const std::size_t n = points();
    const auto big_n = static_cast<Eigen::Index>(input_dim());
    const auto d = static_cast<Eigen::Index>(embed_dim_);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(inner_dim()), big_n);
    jac.topRows(big_n).setIdentity();
    const double scale = static_cast<double>(n);
    const auto kk = static_cast<Eigen::Index>(k);
    for (std::size_t t = 0; t < n; ++t) {
      if (t == k) continue;
      const auto tt = static_cast<Eigen::Index>(t);
      const Eigen::VectorXd diff = y.segment(tt * d, d) - y.segment(kk * d, d);
      const double coef = -2.0 * scale * std::exp(-diff.squaredNorm());
      jac.block(big_n + tt, tt * d, 1, d) = coef * diff.transpose();
      jac.block(big_n + tt, kk * d, 1, d) = -coef * diff.transpose();
    }
    return jac;
  }

  double outer_component(std::size_t i, const Eigen::VectorXd& w) const {
    const std::size_t n = points();
    const auto big_n = static_cast<Eigen::Index>(input_dim());
    const auto d = static_cast<Eigen::Index>(embed_dim_);
    const auto ii = static_cast<Eigen::Index>(i);
    double sum = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const auto tt = static_cast<Eigen::Index>(t);
      const double p = p_(tt, ii);
      if (p == 0.0) continue;
      const double dist = (w.segment(tt * d, d) - w.segment(ii * d, d)).squaredNorm();
      sum += p * (dist + std::log(clamp_normalizer(w[big_n + tt])));
    }
    return static_cast<double>(n) * sum;
  }

  Eigen::VectorXd outer_component_gradient(std::size_t i, const Eigen::VectorXd& w) const {
    const std::size_t n = points();
    const auto big_n = static_cast<Eigen::Index>(input_dim());
    const auto d = static_cast<Eigen::Index>(embed_dim_);
    const auto ii = static_cast<Eigen::Index>(i);
    const double scale = static_cast<double>(n);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(w.size());
    for (std::size_t t = 0; t < n; ++t) {
      const auto tt = static_cast<Eigen::Index>(t);
      const double p = p_(tt, ii);
      if (p == 0.0) continue;
      const Eigen::VectorXd diff = w.segment(tt * d, d) - w.segment(ii * d, d);
      g.segment(tt * d, d) += 2.0 * scale * p * diff;
      g.segment(ii * d, d) -= 2.0 * scale * p * diff;
      g[big_n + tt] = scale * p / clamp_normalizer(w[big_n + tt]);
    }
    return g;
  }

  /// The SNE cross-entropy evaluated directly from y (test oracle).
  double direct_objective(const Eigen::VectorXd& y) const {
    const std::size_t n = points();
    double total = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      double normalizer = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        if (k != t) normalizer += kernel(y, t, k);
      double cross = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double p = p_(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i));
        if (p == 0.0) continue;
        cross += p * (-std::log(kernel(y, t, i)) + std::log(normalizer));
      }
      total += cross;
    }
    return total;
  }

  /// exp(-||y_t - y_k||^2)
  double kernel(const Eigen::VectorXd& y, std::size_t t, std::size_t k) const {
    const auto d = static_cast<Eigen::Index>(embed_dim_);
    return std::exp(-(y.segment(static_cast<Eigen::Index>(t) * d, d) -
                      y.segment(static_cast<Eigen::Index>(k) * d, d))
                         .squaredNorm());
  }

 private:
  double clamp_normalizer(double v) const {
    if (v < kNormalizerFloor) {
      guard_events_->fetch_add(1, std::memory_order_relaxed);
      return kNormalizerFloor;
    }
    return v;
  }

  Eigen::MatrixXd p_;  // p_(t, i) = p_{i|t}
  std::vector<double> sigma_;
  std::size_t embed_dim_;
  SmoothnessConstants constants_;
  std::shared_ptr<std::atomic<std::size_t>> guard_events_;
};

/// Conditional similarities p_{i|t} = exp(-||z_t - z_i||^2 / 2 sigma_t^2) /
/// sum_{j != t} exp(-||z_t - z_j||^2 / 2 sigma_t^2), zero diagonal.
inline Eigen::MatrixXd similarity_matrix(const Dataset& data, const std::vector<double>& sigma) {
  const Eigen::Index n = data.rows();
  if (n < 2) throw ConstructionError("sne: need at least 2 samples");
  if (sigma.size() != 1 && sigma.size() != static_cast<std::size_t>(n))
    throw ConstructionError("sne: sigma must be a scalar or one value per sample");
  if (!data.values.allFinite()) throw ConstructionError("sne: data contains non-finite values");
  for (double s : sigma)
    if (!(s > 0.0) || !std::isfinite(s)) throw ConstructionError("sne: sigma must be > 0");
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index t = 0; t < n; ++t) {
    const double s = sigma.size() == 1 ? sigma[0] : sigma[static_cast<std::size_t>(t)];
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == t) continue;
      p(t, i) = std::exp(-(data.values.row(t) - data.values.row(i)).squaredNorm() / (2.0 * s * s));
    }
    const double total = p.row(t).sum();
    if (!(total > 0.0) || !std::isfinite(total))
      throw ConstructionError("sne: similarity row " + std::to_string(t + 1) +
                              " is all zero (sample isolated at this sigma)");
    p.row(t) /= total;
  }
  return p;
}

/// Estimates the regularity constants by sampling embeddings around the
/// origin with coordinate scale `scale`. Estimates only: used for parameter
/// suggestions, never for correctness checks.
inline SmoothnessConstants estimate_sne_constants(const SneProblem& problem, std::uint64_t seed,
                                                  std::size_t samples = 3, double scale = 1.0) {
  SampleStream rng(seed);
  const auto big_n = static_cast<Eigen::Index>(problem.input_dim());
  const std::size_t probes = std::min<std::size_t>(problem.points(), 6);
  SmoothnessConstants c;
  c.b_g = c.l_g = c.b_f = c.l_f_outer = 1e-12;
  for (std::size_t s = 0; s < samples; ++s) {
    Eigen::VectorXd x(big_n), y(big_n);
    for (Eigen::Index k = 0; k < big_n; ++k) x[k] = scale * rng.normal();
    for (Eigen::Index k = 0; k < big_n; ++k) y[k] = x[k] + 0.1 * scale * rng.normal();
    const double dx = (x - y).norm();
    Eigen::VectorXd wx = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(problem.inner_dim()));
    Eigen::VectorXd wy = wx;
    for (std::size_t k = 0; k < problem.points(); ++k) {
      wx += problem.inner_component(k, x);
      wy += problem.inner_component(k, y);
    }
    wx /= static_cast<double>(problem.points());
    wy /= static_cast<double>(problem.points());
    for (std::size_t q = 0; q < probes; ++q) {
      const std::size_t k = rng.uniform_index(problem.points());
      const Eigen::MatrixXd jx = problem.inner_component_jacobian(k, x);
      c.b_g = std::max(c.b_g, spectral_norm(jx, 1e-6));
      c.l_g = std::max(c.l_g, (jx - problem.inner_component_jacobian(k, y)).norm() / dx);
      const Eigen::VectorXd gx = problem.outer_component_gradient(k, wx);
      c.b_f = std::max(c.b_f, gx.norm());
      c.l_f_outer = std::max(c.l_f_outer,
                             (gx - problem.outer_component_gradient(k, wy)).norm() /
                                 std::max((wx - wy).norm(), 1e-300));
    }
  }
  c.l_f = c.b_g * c.b_g * c.l_f_outer + c.b_f * c.l_g;
  c.estimated = true;
  return c;
}

/// Builds the SNE composition from raw samples.
inline SneProblem build_sne(const Dataset& data, const std::vector<double>& sigma,
                            std::size_t embed_dim) {
  return SneProblem(similarity_matrix(data, sigma), sigma, embed_dim);
}

inline SneProblem build_sne(const Dataset& data, double sigma, std::size_t embed_dim) {
  return build_sne(data, std::vector<double>{sigma}, embed_dim);
}

/// JSON form {n, embed_dim, sigma, p_matrix}; sigma is a number or an array.
inline nlohmann::json to_json(const SneProblem& problem) {
  nlohmann::json j;
  j["n"] = problem.points();
  j["embed_dim"] = problem.embed_dim();
  if (problem.sigma().size() == 1)
    j["sigma"] = problem.sigma()[0];
  else
    j["sigma"] = problem.sigma();
  nlohmann::json rows = nlohmann::json::array();
  const auto& p = problem.p_matrix();
  for (Eigen::Index t = 0; t < p.rows(); ++t) {
    std::vector<double> row(static_cast<std::size_t>(p.cols()));
    for (Eigen::Index i = 0; i < p.cols(); ++i) row[static_cast<std::size_t>(i)] = p(t, i);
    rows.push_back(row);
  }
  j["p_matrix"] = rows;
  return j;
}

inline SneProblem sne_from_json(const nlohmann::json& j) {
  const auto n = j.at("n").get<std::size_t>();
  const auto dim = j.at("embed_dim").get<std::size_t>();
  std::vector<double> sigma;
  if (j.at("sigma").is_array())
    sigma = j.at("sigma").get<std::vector<double>>();
  else
    sigma = {j.at("sigma").get<double>()};
  const auto& rows = j.at("p_matrix");
  if (rows.size() != n) throw ConstructionError("sne json: p_matrix must have n rows");
  Eigen::MatrixXd p(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t t = 0; t < n; ++t) {
    const auto row = rows[t].get<std::vector<double>>();
    if (row.size() != n) throw ConstructionError("sne json: p_matrix must be n x n");
    for (std::size_t i = 0; i < n; ++i)
      p(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i)) = row[i];
  }
  return SneProblem(std::move(p), std::move(sigma), dim);
}

}  // namespace scvr
