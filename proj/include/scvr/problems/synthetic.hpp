#pragma once

// Synthetic composition problems with exactly computable constants. All of
// them share an affine (or affine-plus-quadratic) inner map
//   G_j(x) = A_j x + b_j  [+ 0.5 * (x^T Q_{j,r} x)_r]
// and differ in the outer components.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "scvr/core.hpp"

namespace scvr {

namespace detail {

inline Eigen::MatrixXd random_matrix(SampleStream& rng, Eigen::Index rows, Eigen::Index cols,
                                     double scale) {
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) out(r, c) = scale * rng.normal();
  return out;
}

inline Eigen::VectorXd random_vector(SampleStream& rng, Eigen::Index size, double scale) {
  return random_matrix(rng, size, 1, scale);
}

template <typename T>
T mean_of(const std::vector<T>& items) {
  T acc = items.front();
  for (std::size_t k = 1; k < items.size(); ++k) acc += items[k];
  return acc / static_cast<double>(items.size());
}

}  // namespace detail

/// Shared affine inner map G_j(x) = A_j x + b_j.
class AffineInner {
 public:
  AffineInner(std::vector<Eigen::MatrixXd> a, std::vector<Eigen::VectorXd> b)
      : a_(std::move(a)), b_(std::move(b)) {
    if (a_.empty() || a_.size() != b_.size())
      throw ArgumentError("affine inner map needs m >= 1 matching (A_j, b_j)");
    for (std::size_t j = 0; j < a_.size(); ++j) {
      if (a_[j].rows() != a_.front().rows() || a_[j].cols() != a_.front().cols() ||
          b_[j].size() != a_.front().rows())
        throw ArgumentError("affine inner map: inconsistent component shapes");
    }
    b_g_ = 0.0;
    for (const auto& aj : a_) b_g_ = std::max(b_g_, spectral_norm(aj));
  }

  std::size_t inner_count() const { return a_.size(); }
  std::size_t input_dim() const { return static_cast<std::size_t>(a_.front().cols()); }
  std::size_t inner_dim() const { return static_cast<std::size_t>(a_.front().rows()); }

  Eigen::VectorXd inner_component(std::size_t j, const Eigen::VectorXd& x) const {
    return a_[j] * x + b_[j];
  }
  Eigen::MatrixXd inner_component_jacobian(std::size_t j, const Eigen::VectorXd&) const {
    return a_[j];
  }

  const std::vector<Eigen::MatrixXd>& matrices() const { return a_; }
  const std::vector<Eigen::VectorXd>& offsets() const { return b_; }
  Eigen::MatrixXd mean_matrix() const { return detail::mean_of(a_); }
  Eigen::VectorXd mean_offset() const { return detail::mean_of(b_); }

  /// max_j ||A_j||_2 by power iteration.
  double jacobian_bound() const { return b_g_; }

 private:
  std::vector<Eigen::MatrixXd> a_;
  std::vector<Eigen::VectorXd> b_;
  double b_g_ = 0.0;
};

/// Sizes and seed for the random synthetic generators.
struct SyntheticShape {
  std::size_t n = 10;      // outer components
  std::size_t m = 10;      // inner components
  std::size_t dim_x = 4;   // N
  std::size_t dim_w = 3;   // M
  std::uint64_t seed = 1;
  double target_scale = 1.0;
};

/// F_i(w) = 0.5 ||w - c_i||^2 over an affine inner map. f is a convex
/// quadratic with closed-form value, gradient and minimizer.
class AffineQuadraticProblem : public AffineInner {
 public:
  AffineQuadraticProblem(std::vector<Eigen::MatrixXd> a, std::vector<Eigen::VectorXd> b,
                         std::vector<Eigen::VectorXd> c)
      : AffineInner(std::move(a), std::move(b)), c_(std::move(c)) {
    if (c_.empty()) throw ArgumentError("affine quadratic problem needs n >= 1 targets");
    for (const auto& ci : c_)
      if (static_cast<std::size_t>(ci.size()) != inner_dim())
        throw ArgumentError("target has wrong dimension");
    c_bar_ = detail::mean_of(c_);
    double sq = 0.0;
    for (const auto& ci : c_) sq += ci.squaredNorm();
    offset_ = 0.5 * (sq / static_cast<double>(c_.size()) - c_bar_.squaredNorm());

    // The outer gradient w - c_i is unbounded; b_f is the bound at G(0).
    const Eigen::VectorXd w0 = mean_offset();
    double b_f = 0.0;
    for (const auto& ci : c_) b_f = std::max(b_f, (w0 - ci).norm());
    constants_.b_g = jacobian_bound();
    constants_.l_g = 0.0;
    constants_.l_f_outer = 1.0;
    constants_.b_f = std::max(b_f, 1e-12);
    constants_.l_f = constants_.b_g * constants_.b_g * constants_.l_f_outer;
  }

  static AffineQuadraticProblem random(const SyntheticShape& s) {
    SampleStream rng(s.seed);
    const auto dm = static_cast<Eigen::Index>(s.dim_w);
    const auto dn = static_cast<Eigen::Index>(s.dim_x);
    std::vector<Eigen::MatrixXd> a;
    std::vector<Eigen::VectorXd> b, c;
    const double a_scale = 1.0 / std::sqrt(static_cast<double>(s.dim_x));
    for (std::size_t j = 0; j < s.m; ++j) {
      a.push_back(detail::random_matrix(rng, dm, dn, a_scale));
      b.push_back(detail::random_vector(rng, dm, 0.5));
    }
    for (std::size_t i = 0; i < s.n; ++i) c.push_back(detail::random_vector(rng, dm, s.target_scale));
    return {std::move(a), std::move(b), std::move(c)};
  }

  std::size_t outer_count() const { return c_.size(); }
  const SmoothnessConstants& constants() const { return constants_; }

  double outer_component(std::size_t i, const Eigen::VectorXd& w) const {
    return 0.5 * (w - c_[i]).squaredNorm();
  }
  Eigen::VectorXd outer_component_gradient(std::size_t i, const Eigen::VectorXd& w) const {
    return w - c_[i];
  }

  const std::vector<Eigen::VectorXd>& targets() const { return c_; }

  /// 0.5 ||A x + b - c||^2 + const with barred means.
  double closed_form_objective(const Eigen::VectorXd& x) const {
    return 0.5 * (mean_matrix() * x + mean_offset() - c_bar_).squaredNorm() + offset_;
  }
  Eigen::VectorXd closed_form_gradient(const Eigen::VectorXd& x) const {
    const Eigen::MatrixXd a = mean_matrix();
    return a.transpose() * (a * x + mean_offset() - c_bar_);
  }
  /// Least-squares minimizer of the closed form.
  Eigen::VectorXd minimizer() const {
    return mean_matrix().completeOrthogonalDecomposition().solve(c_bar_ - mean_offset());
  }

 private:
  std::vector<Eigen::VectorXd> c_;
  Eigen::VectorXd c_bar_;
  double offset_ = 0.0;
  SmoothnessConstants constants_;
};

/// Smooth bounded nonconvex penalty rho(t) = t^2 / (1 + t^2).
struct RhoPenalty {
  static double value(double t) { return t * t / (1.0 + t * t); }
  static double derivative(double t) {
    const double d = 1.0 + t * t;
    return 2.0 * t / (d * d);
  }
  /// sup |rho'| = 3 sqrt(3) / 8, attained at t = 1/sqrt(3).
  static double derivative_bound() { return 3.0 * std::sqrt(3.0) / 8.0; }
  /// sup |rho''| = 2, attained at t = 0.
  static double curvature_bound() { return 2.0; }
};

/// F_i(w) = sum_l rho(w_l - c_{i,l}) over an affine inner map.
class NonconvexSyntheticProblem : public AffineInner {
 public:
  NonconvexSyntheticProblem(std::vector<Eigen::MatrixXd> a, std::vector<Eigen::VectorXd> b,
                            std::vector<Eigen::VectorXd> c)
      : AffineInner(std::move(a), std::move(b)), c_(std::move(c)) {
    if (c_.empty()) throw ArgumentError("nonconvex problem needs n >= 1 targets");
    for (const auto& ci : c_)
      if (static_cast<std::size_t>(ci.size()) != inner_dim())
        throw ArgumentError("target has wrong dimension");
    constants_.b_g = jacobian_bound();
    constants_.l_g = 0.0;
    constants_.b_f = std::sqrt(static_cast<double>(inner_dim())) * RhoPenalty::derivative_bound();
    constants_.l_f_outer = RhoPenalty::curvature_bound();
    constants_.l_f = constants_.b_g * constants_.b_g * constants_.l_f_outer;
  }

  static NonconvexSyntheticProblem random(const SyntheticShape& s) {
    SampleStream rng(s.seed);
    const auto dm = static_cast<Eigen::Index>(s.dim_w);
    const auto dn = static_cast<Eigen::Index>(s.dim_x);
    std::vector<Eigen::MatrixXd> a;
    std::vector<Eigen::VectorXd> b, c;
    const double a_scale = 1.0 / std::sqrt(static_cast<double>(s.dim_x));
    for (std::size_t j = 0; j < s.m; ++j) {
      a.push_back(detail::random_matrix(rng, dm, dn, a_scale));
      b.push_back(detail::random_vector(rng, dm, 0.5));
    }
    for (std::size_t i = 0; i < s.n; ++i) c.push_back(detail::random_vector(rng, dm, s.target_scale));
    return {std::move(a), std::move(b), std::move(c)};
  }

  /// Components sharing a common matrix: A_j = C + heterogeneity * E_j, where
  /// C has singular values log-spaced from 1 down to 1 / condition and E_j
  /// has i.i.d. N(0, 1 / N) entries.
  static NonconvexSyntheticProblem conditioned(const SyntheticShape& s, double condition,
                                               double heterogeneity) {
    if (!(condition >= 1.0)) throw ArgumentError("condition must be >= 1");
    SampleStream rng(s.seed);
    const auto dm = static_cast<Eigen::Index>(s.dim_w);
    const auto dn = static_cast<Eigen::Index>(s.dim_x);
    const double a_scale = 1.0 / std::sqrt(static_cast<double>(s.dim_x));
    Eigen::MatrixXd common = detail::random_matrix(rng, dm, dn, a_scale);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(common, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::Index rank = svd.singularValues().size();
    Eigen::VectorXd sv(rank);
    for (Eigen::Index k = 0; k < rank; ++k)
      sv[k] = rank == 1 ? 1.0 : std::pow(condition, -static_cast<double>(k) / static_cast<double>(rank - 1));
    common = svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
    std::vector<Eigen::MatrixXd> a;
    std::vector<Eigen::VectorXd> b, c;
    for (std::size_t j = 0; j < s.m; ++j) {
      a.push_back(common + heterogeneity * detail::random_matrix(rng, dm, dn, a_scale));
      b.push_back(detail::random_vector(rng, dm, 0.5));
    }
    for (std::size_t i = 0; i < s.n; ++i) c.push_back(detail::random_vector(rng, dm, s.target_scale));
    return {std::move(a), std::move(b), std::move(c)};
  }

  std::size_t outer_count() const { return c_.size(); }
  const SmoothnessConstants& constants() const { return constants_; }

  double outer_component(std::size_t i, const Eigen::VectorXd& w) const {
    double sum = 0.0;
    for (Eigen::Index l = 0; l < w.size(); ++l) sum += RhoPenalty::value(w[l] - c_[i][l]);
    return sum;
  }
  Eigen::VectorXd outer_component_gradient(std::size_t i, const Eigen::VectorXd& w) const {
    Eigen::VectorXd g(w.size());
    for (Eigen::Index l = 0; l < w.size(); ++l) g[l] = RhoPenalty::derivative(w[l] - c_[i][l]);
    return g;
  }

  const std::vector<Eigen::VectorXd>& targets() const { return c_; }

 private:
  std::vector<Eigen::VectorXd> c_;
  SmoothnessConstants constants_;
};

/// Inner map with a quadratic term, G_j(x)_r = (A_j x + b_j)_r + 0.5 x^T Q_{j,r} x
/// (Q symmetric), outer F_i(w) = 0.5 ||w - c_i||^2. The Jacobian is affine in
/// x, so L_G = max_j ||S_j||_2 with S_j the (M N) x N stack of the Q_{j,r}
/// is exact. The Jacobian itself is unbounded; b_g is the bound at x = 0.
class CurvedInnerProblem {
 public:
  CurvedInnerProblem(std::vector<Eigen::MatrixXd> a, std::vector<Eigen::VectorXd> b,
                     std::vector<std::vector<Eigen::MatrixXd>> q, std::vector<Eigen::VectorXd> c)
      : affine_(std::move(a), std::move(b)), q_(std::move(q)), c_(std::move(c)) {
    if (q_.size() != affine_.inner_count() || c_.empty())
      throw ArgumentError("curved inner problem: inconsistent component counts");
    const auto dn = static_cast<Eigen::Index>(input_dim());
    const auto dm = static_cast<Eigen::Index>(inner_dim());
    double l_g = 0.0;
    for (const auto& qj : q_) {
      if (static_cast<Eigen::Index>(qj.size()) != dm)
        throw ArgumentError("curved inner problem: need M quadratic forms per component");
      Eigen::MatrixXd stack(dm * dn, dn);
      for (Eigen::Index r = 0; r < dm; ++r) stack.middleRows(r * dn, dn) = qj[r];
      l_g = std::max(l_g, spectral_norm(stack));
    }
    const Eigen::VectorXd w0 = affine_.mean_offset();
    double b_f = 0.0;
    for (const auto& ci : c_) b_f = std::max(b_f, (w0 - ci).norm());
    constants_.b_g = affine_.jacobian_bound();
    constants_.l_g = l_g;
    constants_.b_f = std::max(b_f, 1e-12);
    constants_.l_f_outer = 1.0;
    constants_.l_f = constants_.b_g * constants_.b_g + constants_.b_f * l_g;
    constants_.estimated = true;  // b_g, b_f are local values
  }

  static CurvedInnerProblem random(const SyntheticShape& s, double curvature = 0.5) {
    SampleStream rng(s.seed);
    const auto dm = static_cast<Eigen::Index>(s.dim_w);
    const auto dn = static_cast<Eigen::Index>(s.dim_x);
    std::vector<Eigen::MatrixXd> a;
    std::vector<Eigen::VectorXd> b, c;
    std::vector<std::vector<Eigen::MatrixXd>> q;
    const double a_scale = 1.0 / std::sqrt(static_cast<double>(s.dim_x));
    for (std::size_t j = 0; j < s.m; ++j) {
      a.push_back(detail::random_matrix(rng, dm, dn, a_scale));
      b.push_back(detail::random_vector(rng, dm, 0.5));
      std::vector<Eigen::MatrixXd> forms;
      for (Eigen::Index r = 0; r < dm; ++r) {
        const Eigen::MatrixXd raw = detail::random_matrix(rng, dn, dn, curvature * a_scale);
        forms.push_back(0.5 * (raw + raw.transpose()));
      }
      q.push_back(std::move(forms));
    }
    for (std::size_t i = 0; i < s.n; ++i) c.push_back(detail::random_vector(rng, dm, s.target_scale));
    return {std::move(a), std::move(b), std::move(q), std::move(c)};
  }

  std::size_t outer_count() const { return c_.size(); }
  std::size_t inner_count() const { return affine_.inner_count(); }
  std::size_t input_dim() const { return affine_.input_dim(); }
  std::size_t inner_dim() const { return affine_.inner_dim(); }
  const SmoothnessConstants& constants() const { return constants_; }

  Eigen::VectorXd inner_component(std::size_t j, const Eigen::VectorXd& x) const {
    Eigen::VectorXd out = affine_.inner_component(j, x);
    for (Eigen::Index r = 0; r < out.size(); ++r) out[r] += 0.5 * x.dot(q_[j][r] * x);
    return out;
  }
  Eigen::MatrixXd inner_component_jacobian(std::size_t j, const Eigen::VectorXd& x) const {
    Eigen::MatrixXd jac = affine_.matrices()[j];
    for (Eigen::Index r = 0; r < jac.rows(); ++r) jac.row(r) += (q_[j][r] * x).transpose();
    return jac;
  }
  double outer_component(std::size_t i, const Eigen::VectorXd& w) const {
    return 0.5 * (w - c_[i]).squaredNorm();
  }
  Eigen::VectorXd outer_component_gradient(std::size_t i, const Eigen::VectorXd& w) const {
    return w - c_[i];
  }

 private:
  AffineInner affine_;
  std::vector<std::vector<Eigen::MatrixXd>> q_;
  std::vector<Eigen::VectorXd> c_;
  SmoothnessConstants constants_;
};

}  // namespace scvr
