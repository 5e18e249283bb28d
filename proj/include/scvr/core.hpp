#pragma once

// Dense primitives, the composition-problem concept, query accounting and
// deterministic index sampling.
//
// A composition problem is  f(x) = (1/n) sum_i F_i( (1/m) sum_j G_j(x) )
// with G_j : R^N -> R^M and F_i : R^M -> R. Component indices are 0-based in
// code; user-facing messages print them 1-based.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "scvr/errors.hpp"

namespace scvr {

using Point = Eigen::VectorXd;          // x in R^N
using InnerValue = Eigen::VectorXd;     // w = G(x) in R^M
using InnerJacobian = Eigen::MatrixXd;  // dG(x), M x N
using IndexBatch = std::vector<std::size_t>;

/// Regularity constants of the problem class. `b_g` bounds the inner Jacobian
/// (spectral norm), `l_g` is its Lipschitz constant (Frobenius norm of the
/// Jacobian difference), `b_f`/`l_f_outer` bound and Lipschitz-bound the outer
/// gradients and `l_f` is the smoothness of the composite.
struct SmoothnessConstants {
  double b_g = 1.0;
  double l_g = 1.0;
  double b_f = 1.0;
  double l_f_outer = 1.0;
  double l_f = 1.0;
  bool estimated = false;  // true when obtained by sampling rather than exactly

  /// `l_g` may be zero (affine inner maps); everything else must be positive.
  void validate() const {
    if (!(b_g > 0 && b_f > 0 && l_f_outer > 0 && l_f > 0 && l_g >= 0))
      throw ArgumentError("smoothness constants must be positive (l_g may be 0)");
  }
};

template <typename P>
concept CompositionProblem = requires(const P& p, std::size_t idx, const Eigen::VectorXd& v) {
  { p.outer_count() } -> std::convertible_to<std::size_t>;  // n
  { p.inner_count() } -> std::convertible_to<std::size_t>;  // m
  { p.input_dim() } -> std::convertible_to<std::size_t>;    // N
  { p.inner_dim() } -> std::convertible_to<std::size_t>;    // M
  { p.constants() } -> std::convertible_to<SmoothnessConstants>;
  { p.inner_component(idx, v) } -> std::convertible_to<Eigen::VectorXd>;
  { p.inner_component_jacobian(idx, v) } -> std::convertible_to<Eigen::MatrixXd>;
  { p.outer_component(idx, v) } -> std::convertible_to<double>;
  { p.outer_component_gradient(idx, v) } -> std::convertible_to<Eigen::VectorXd>;
};

/// Optional hook: problems that clamp arguments internally report how often.
template <typename P>
std::size_t guard_events(const P& p) {
  if constexpr (requires { { p.guard_events() } -> std::convertible_to<std::size_t>; })
    return p.guard_events();
  else
    return 0;
}

/// Counts component evaluations. One call to G_j, dG_j, F_i or gradF_i is one
/// query regardless of output size. Not synchronized: use one ledger per
/// worker and merge.
struct QueryLedger {
  std::uint64_t inner_value_queries = 0;
  std::uint64_t inner_jacobian_queries = 0;
  std::uint64_t outer_value_queries = 0;
  std::uint64_t outer_gradient_queries = 0;

  std::uint64_t total() const {
    return inner_value_queries + inner_jacobian_queries + outer_value_queries +
           outer_gradient_queries;
  }

  void charge(ComponentKind kind, std::uint64_t count = 1) {
    switch (kind) {
      case ComponentKind::inner_value: inner_value_queries += count; break;
      case ComponentKind::inner_jacobian: inner_jacobian_queries += count; break;
      case ComponentKind::outer_value: outer_value_queries += count; break;
      case ComponentKind::outer_gradient: outer_gradient_queries += count; break;
    }
  }

  QueryLedger& merge(const QueryLedger& other) {
    inner_value_queries += other.inner_value_queries;
    inner_jacobian_queries += other.inner_jacobian_queries;
    outer_value_queries += other.outer_value_queries;
    outer_gradient_queries += other.outer_gradient_queries;
    return *this;
  }

  friend bool operator==(const QueryLedger&, const QueryLedger&) = default;
};

/// Deterministic index source.
///
/// Raw 64-bit words come from SplitMix64:
///   state <- state + 0x9E3779B97F4A7C15
///   z <- state
///   z <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z <- (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
/// A uniform index in [0, r) is the high word of the 128-bit product
/// word * r, redrawing while the low word is below (2^64 - r) mod r
/// (Lemire's unbiased multiply-shift). Batches are sequences of independent
/// draws (with replacement).
class SampleStream {
 public:
  explicit SampleStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_word() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform on {0, ..., range - 1}.
  std::size_t uniform_index(std::size_t range) {
    if (range == 0) throw ArgumentError("uniform_index: empty range");
    const auto r = static_cast<std::uint64_t>(range);
    unsigned __int128 product = static_cast<unsigned __int128>(next_word()) * r;
    auto low = static_cast<std::uint64_t>(product);
    if (low < r) {
      const std::uint64_t threshold = (0 - r) % r;
      while (low < threshold) {
        product = static_cast<unsigned __int128>(next_word()) * r;
        low = static_cast<std::uint64_t>(product);
      }
    }
    return static_cast<std::size_t>(product >> 64);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform_real() { return static_cast<double>(next_word() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (one value per call, second discarded).
  double normal() {
    double u1 = uniform_real();
    while (u1 <= 0.0) u1 = uniform_real();
    const double u2 = uniform_real();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

/// `draws` independent uniform indices from {0, ..., range_max - 1}.
inline IndexBatch sample_indices(SampleStream& stream, std::size_t range_max, std::size_t draws) {
  if (range_max == 0) throw ArgumentError("sample_indices: range_max must be >= 1");
  if (draws == 0) throw ArgumentError("sample_indices: draws must be >= 1");
  IndexBatch batch(draws);
  for (auto& idx : batch) idx = stream.uniform_index(range_max);
  return batch;
}

// ---------------------------------------------------------------------------
// Charged component access. Every evaluation the algorithms perform goes
// through these four functions; each call charges exactly one query.

template <CompositionProblem P>
InnerValue query_inner(const P& p, std::size_t j, const Point& x, QueryLedger& ledger) {
  if (j >= p.inner_count()) throw ArgumentError("inner index out of range");
  ledger.charge(ComponentKind::inner_value);
  InnerValue out = p.inner_component(j, x);
  if (!out.allFinite()) throw EvaluationError(ComponentKind::inner_value, j);
  return out;
}

template <CompositionProblem P>
InnerJacobian query_inner_jacobian(const P& p, std::size_t j, const Point& x,
                                   QueryLedger& ledger) {
  if (j >= p.inner_count()) throw ArgumentError("inner index out of range");
  ledger.charge(ComponentKind::inner_jacobian);
  InnerJacobian out = p.inner_component_jacobian(j, x);
  if (!out.allFinite()) throw EvaluationError(ComponentKind::inner_jacobian, j);
  return out;
}

template <CompositionProblem P>
double query_outer(const P& p, std::size_t i, const InnerValue& w, QueryLedger& ledger) {
  if (i >= p.outer_count()) throw ArgumentError("outer index out of range");
  ledger.charge(ComponentKind::outer_value);
  const double out = p.outer_component(i, w);
  if (!std::isfinite(out)) throw EvaluationError(ComponentKind::outer_value, i);
  return out;
}

template <CompositionProblem P>
Eigen::VectorXd query_outer_gradient(const P& p, std::size_t i, const InnerValue& w,
                                     QueryLedger& ledger) {
  if (i >= p.outer_count()) throw ArgumentError("outer index out of range");
  ledger.charge(ComponentKind::outer_gradient);
  Eigen::VectorXd out = p.outer_component_gradient(i, w);
  if (!out.allFinite()) throw EvaluationError(ComponentKind::outer_gradient, i);
  return out;
}

template <CompositionProblem P>
void check_point(const P& p, const Point& x) {
  if (static_cast<std::size_t>(x.size()) != p.input_dim())
    throw ArgumentError("point has wrong dimension");
}

// ---------------------------------------------------------------------------
// Full (deterministic) quantities.

/// G(x) = (1/m) sum_j G_j(x). Charges m inner-value queries.
template <CompositionProblem P>
InnerValue inner_full(const P& p, const Point& x, QueryLedger& ledger) {
  check_point(p, x);
  const std::size_t m = p.inner_count();
  InnerValue sum = InnerValue::Zero(static_cast<Eigen::Index>(p.inner_dim()));
  for (std::size_t j = 0; j < m; ++j) sum += query_inner(p, j, x, ledger);
  return sum / static_cast<double>(m);
}

/// dG(x) = (1/m) sum_j dG_j(x). Charges m inner-Jacobian queries.
template <CompositionProblem P>
InnerJacobian inner_jacobian_full(const P& p, const Point& x, QueryLedger& ledger) {
  check_point(p, x);
  const std::size_t m = p.inner_count();
  InnerJacobian sum = InnerJacobian::Zero(static_cast<Eigen::Index>(p.inner_dim()),
                                          static_cast<Eigen::Index>(p.input_dim()));
  for (std::size_t j = 0; j < m; ++j) sum += query_inner_jacobian(p, j, x, ledger);
  return sum / static_cast<double>(m);
}

/// gradF(w) = (1/n) sum_i gradF_i(w). Charges n outer-gradient queries.
template <CompositionProblem P>
Eigen::VectorXd outer_gradient_full(const P& p, const InnerValue& w, QueryLedger& ledger) {
  const std::size_t n = p.outer_count();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(w.size());
  for (std::size_t i = 0; i < n; ++i) sum += query_outer_gradient(p, i, w, ledger);
  return sum / static_cast<double>(n);
}

/// grad f(x) = dG(x)^T gradF(G(x)). Charges 2m + n queries.
template <CompositionProblem P>
Point full_gradient(const P& p, const Point& x, QueryLedger& ledger) {
  const InnerValue w = inner_full(p, x, ledger);
  const InnerJacobian jac = inner_jacobian_full(p, x, ledger);
  return jac.transpose() * outer_gradient_full(p, w, ledger);
}

/// f(x) = (1/n) sum_i F_i(G(x)). Charges m + n queries.
template <CompositionProblem P>
double objective(const P& p, const Point& x, QueryLedger& ledger) {
  const InnerValue w = inner_full(p, x, ledger);
  const std::size_t n = p.outer_count();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += query_outer(p, i, w, ledger);
  return sum / static_cast<double>(n);
}

/// Largest singular value by power iteration on A^T A, stopping when the
/// relative change of the estimate drops below `tol`.
inline double spectral_norm(const Eigen::MatrixXd& a, double tol = 1e-10,
                            int max_iter = 100000) {
  if (a.size() == 0) return 0.0;
  const Eigen::MatrixXd gram = a.transpose() * a;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(gram.cols());
  // deterministic start that is unlikely to be orthogonal to the top vector
  for (Eigen::Index k = 0; k < v.size(); ++k) v[k] += 0.01 * static_cast<double>(k + 1);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = gram * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double next = v.dot(w);
    v = w / norm;
    if (it > 0 && std::abs(next - lambda) <= tol * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return std::sqrt(std::max(lambda, 0.0));
}

}  // namespace scvr
