#pragma once

// Independent oracles for tests: central finite differences, exhaustive
// expectations over all index draws and second moments of the inner
// estimators. Every oracle charges a private ledger, so algorithmic ledgers
// are never touched.

#include <cmath>
#include <cstdint>
#include <string>

#include "scvr/core.hpp"
#include "scvr/estimators.hpp"

namespace scvr {

struct FiniteDiffConfig {
  double step = 1e-5;  // central scheme only
};

/// Caps the number of ordered tuples an exhaustive oracle may visit.
struct EnumerationLimits {
  std::uint64_t max_tuples = 1'000'000;
};

/// Central-difference gradient of an arbitrary scalar function.
template <typename Fn>
Point fd_gradient_fn(Fn&& fn, const Point& x, const FiniteDiffConfig& cfg = {}) {
  if (!(cfg.step > 0.0)) throw ArgumentError("fd_gradient: step must be > 0");
  Point grad(x.size());
  Point probe = x;
  for (Eigen::Index l = 0; l < x.size(); ++l) {
    double plus = 0.0, minus = 0.0;
    try {
      probe[l] = x[l] + cfg.step;
      plus = fn(probe);
      probe[l] = x[l] - cfg.step;
      minus = fn(probe);
    } catch (const EvaluationError& e) {
      throw OracleError("fd_gradient: coordinate " + std::to_string(l + 1) + ": " + e.what());
    }
    probe[l] = x[l];
    if (!std::isfinite(plus) || !std::isfinite(minus))
      throw OracleError("fd_gradient: non-finite objective probe at coordinate " +
                        std::to_string(l + 1));
    grad[l] = (plus - minus) / (2.0 * cfg.step);
  }
  return grad;
}

/// Central-difference gradient of the composite objective.
template <CompositionProblem P>
Point fd_gradient(const P& p, const Point& x, const FiniteDiffConfig& cfg = {}) {
  check_point(p, x);
  QueryLedger shadow;
  return fd_gradient_fn([&](const Point& y) { return objective(p, y, shadow); }, x, cfg);
}

/// ||a - b|| / max(||b||, floor)
inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                             double floor = 1e-12) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

namespace detail {

inline std::uint64_t checked_tuple_count(std::size_t range, std::size_t length,
                                         const EnumerationLimits& limits) {
  std::uint64_t count = 1;
  for (std::size_t k = 0; k < length; ++k) {
    count *= range;
    if (count > limits.max_tuples)
      throw OracleError("enumeration of " + std::to_string(range) + "^" + std::to_string(length) +
                        " tuples exceeds the limit of " + std::to_string(limits.max_tuples));
  }
  return count;
}

}  // namespace detail

/// Calls fn(batch) for every ordered tuple in {0..range-1}^length, in
/// lexicographic order. Returns the number of tuples visited.
template <typename Fn>
std::uint64_t for_each_tuple(std::size_t range, std::size_t length, Fn&& fn,
                             const EnumerationLimits& limits = {}) {
  if (range == 0 || length == 0) throw ArgumentError("for_each_tuple: empty draw space");
  const std::uint64_t count = detail::checked_tuple_count(range, length, limits);
  IndexBatch batch(length, 0);
  for (std::uint64_t t = 0; t < count; ++t) {
    fn(static_cast<const IndexBatch&>(batch));
    for (std::size_t pos = length; pos-- > 0;) {
      if (++batch[pos] < range) break;
      batch[pos] = 0;
    }
  }
  return count;
}

/// Exact mean of estimate_inner over all m^A ordered batches.
template <CompositionProblem P>
InnerValue exhaustive_inner_mean(const P& p, const Point& x, const EpochSnapshot& snap,
                                 std::size_t a, const EnumerationLimits& limits = {}) {
  QueryLedger shadow;
  InnerValue sum = InnerValue::Zero(snap.g_tilde.size());
  const auto count = for_each_tuple(
      p.inner_count(), a,
      [&](const IndexBatch& batch) { sum += estimate_inner(p, x, snap, batch, shadow); }, limits);
  return sum / static_cast<double>(count);
}

/// Exact mean of estimate_inner_jacobian over all m^B ordered batches.
template <CompositionProblem P>
InnerJacobian exhaustive_jacobian_mean(const P& p, const Point& x, const EpochSnapshot& snap,
                                       std::size_t b, const EnumerationLimits& limits = {}) {
  QueryLedger shadow;
  InnerJacobian sum = InnerJacobian::Zero(snap.jac_tilde.rows(), snap.jac_tilde.cols());
  const auto count = for_each_tuple(
      p.inner_count(), b,
      [&](const IndexBatch& batch) { sum += estimate_inner_jacobian(p, x, snap, batch, shadow); },
      limits);
  return sum / static_cast<double>(count);
}

enum class EstimatorKind { scvr1, scvr2 };

/// Exact mean of the gradient direction over all index draws with g_hat (and
/// jac_hat for scvr2) held fixed: (i, j) in [n] x [m] for scvr1, i in [n]
/// for scvr2.
template <CompositionProblem P>
Point exhaustive_grad_mean(const P& p, const Point& x, const EpochSnapshot& snap,
                           const InnerValue& g_hat, EstimatorKind kind,
                           const InnerJacobian& jac_hat = {}, const EnumerationLimits& limits = {}) {
  QueryLedger shadow;
  const std::size_t n = p.outer_count();
  const std::size_t m = p.inner_count();
  Point sum = Point::Zero(snap.grad_tilde.size());
  if (kind == EstimatorKind::scvr1) {
    if (static_cast<std::uint64_t>(n) * m > limits.max_tuples)
      throw OracleError("exhaustive_grad_mean: n * m exceeds the enumeration limit");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j)
        sum += grad_scvr1(p, x, snap, g_hat, i, j, shadow).direction;
    return sum / static_cast<double>(n * m);
  }
  if (jac_hat.rows() != snap.jac_tilde.rows() || jac_hat.cols() != snap.jac_tilde.cols())
    throw ArgumentError("exhaustive_grad_mean: scvr2 needs jac_hat");
  if (n > limits.max_tuples) throw OracleError("exhaustive_grad_mean: n exceeds the enumeration limit");
  for (std::size_t i = 0; i < n; ++i) sum += grad_scvr2(p, snap, g_hat, jac_hat, i, shadow).direction;
  return sum / static_cast<double>(n);
}

/// Monte-Carlo second moment: mean of sampler(stream) over `trials` draws.
/// The sampler returns a squared deviation.
template <typename Sampler>
double empirical_second_moment(Sampler&& sampler, std::size_t trials, std::uint64_t seed) {
  if (trials == 0) throw ArgumentError("empirical_second_moment: trials must be >= 1");
  SampleStream stream(seed);
  double sum = 0.0;
  for (std::size_t t = 0; t < trials; ++t) sum += sampler(stream);
  return sum / static_cast<double>(trials);
}

/// Exact second moment: mean of deviation(batch) over every ordered tuple in
/// [range]^length.
template <typename Deviation>
double exhaustive_second_moment(Deviation&& deviation, std::size_t range, std::size_t length,
                                const EnumerationLimits& limits = {}) {
  double sum = 0.0;
  const auto count = for_each_tuple(
      range, length, [&](const IndexBatch& batch) { sum += deviation(batch); }, limits);
  return sum / static_cast<double>(count);
}

/// Reference value subtracted from the estimator: the snapshot quantity
/// (G(x~), dG(x~)) or the exact current quantity (G(x), dG(x)).
enum class Centering { snapshot, mean };

/// E||G^ - ref||^2 over all m^A batches.
template <CompositionProblem P>
double inner_second_moment(const P& p, const Point& x, const EpochSnapshot& snap, std::size_t a,
                           Centering centering, const EnumerationLimits& limits = {}) {
  QueryLedger shadow;
  const InnerValue ref = centering == Centering::snapshot ? snap.g_tilde : inner_full(p, x, shadow);
  return exhaustive_second_moment(
      [&](const IndexBatch& batch) {
        return (estimate_inner(p, x, snap, batch, shadow) - ref).squaredNorm();
      },
      p.inner_count(), a, limits);
}

/// E||dG^ - ref||_F^2 over all m^B batches.
template <CompositionProblem P>
double jacobian_second_moment(const P& p, const Point& x, const EpochSnapshot& snap,
                              std::size_t b, Centering centering,
                              const EnumerationLimits& limits = {}) {
  QueryLedger shadow;
  const InnerJacobian ref =
      centering == Centering::snapshot ? snap.jac_tilde : inner_jacobian_full(p, x, shadow);
  return exhaustive_second_moment(
      [&](const IndexBatch& batch) {
        return (estimate_inner_jacobian(p, x, snap, batch, shadow) - ref).squaredNorm();
      },
      p.inner_count(), b, limits);
}

}  // namespace scvr
