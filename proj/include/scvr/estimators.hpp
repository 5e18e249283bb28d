#pragma once

// Variance-reduced estimators of the inner value, the inner Jacobian and the
// composite gradient. Every estimator is a pure function of (problem, current
// point, snapshot, materialized batches); randomness lives in the caller.

#include <cstdint>

#include "scvr/core.hpp"

namespace scvr {

/// Quantities cached once per epoch at the reference point x~_s.
struct EpochSnapshot {
  Point x_tilde;
  InnerValue g_tilde;         // G(x~)
  InnerJacobian jac_tilde;    // dG(x~)
  Eigen::VectorXd outer_grad_tilde;  // (1/n) sum_i gradF_i(G(x~))
  Point grad_tilde;           // grad f(x~)
};

struct GradientEstimate {
  Point direction;
  std::uint64_t queries_charged = 0;
};

/// Builds the epoch snapshot. Charges 2m + n queries.
template <CompositionProblem P>
EpochSnapshot make_snapshot(const P& p, const Point& x, QueryLedger& ledger) {
  EpochSnapshot snap;
  snap.x_tilde = x;
  snap.g_tilde = inner_full(p, x, ledger);
  snap.jac_tilde = inner_jacobian_full(p, x, ledger);
  snap.outer_grad_tilde = outer_gradient_full(p, snap.g_tilde, ledger);
  snap.grad_tilde = snap.jac_tilde.transpose() * snap.outer_grad_tilde;
  return snap;
}

namespace detail {
inline void require_batch(const IndexBatch& batch, std::size_t range, const char* what) {
  if (batch.empty()) throw ArgumentError(std::string(what) + ": empty batch");
  for (std::size_t idx : batch)
    if (idx >= range) throw ArgumentError(std::string(what) + ": index out of range");
}
}  // namespace detail

/// G^ = (1/A) sum_{j in batch} (G_j(x) - G_j(x~)) + G(x~). Charges 2A.
template <CompositionProblem P>
InnerValue estimate_inner(const P& p, const Point& x, const EpochSnapshot& snap,
                          const IndexBatch& batch, QueryLedger& ledger) {
  detail::require_batch(batch, p.inner_count(), "estimate_inner");
  InnerValue acc = InnerValue::Zero(snap.g_tilde.size());
  for (std::size_t j : batch)
    acc += query_inner(p, j, x, ledger) - query_inner(p, j, snap.x_tilde, ledger);
  return acc / static_cast<double>(batch.size()) + snap.g_tilde;
}

/// dG^ = (1/B) sum_{j in batch} (dG_j(x) - dG_j(x~)) + dG(x~). Charges 2B.
template <CompositionProblem P>
InnerJacobian estimate_inner_jacobian(const P& p, const Point& x, const EpochSnapshot& snap,
                                      const IndexBatch& batch, QueryLedger& ledger) {
  detail::require_batch(batch, p.inner_count(), "estimate_inner_jacobian");
  InnerJacobian acc = InnerJacobian::Zero(snap.jac_tilde.rows(), snap.jac_tilde.cols());
  for (std::size_t j : batch)
    acc += query_inner_jacobian(p, j, x, ledger) -
           query_inner_jacobian(p, j, snap.x_tilde, ledger);
  return acc / static_cast<double>(batch.size()) + snap.jac_tilde;
}

/// SCVR-I direction
///   dG_j(x)^T gradF_i(G^) - dG_j(x~)^T gradF_i(G(x~)) + grad f(x~).
/// Charges 4.
template <CompositionProblem P>
GradientEstimate grad_scvr1(const P& p, const Point& x, const EpochSnapshot& snap,
                            const InnerValue& g_hat, std::size_t i, std::size_t j,
                            QueryLedger& ledger) {
  const std::uint64_t before = ledger.total();
  const InnerJacobian jac_x = query_inner_jacobian(p, j, x, ledger);
  const InnerJacobian jac_snap = query_inner_jacobian(p, j, snap.x_tilde, ledger);
  const Eigen::VectorXd gf_hat = query_outer_gradient(p, i, g_hat, ledger);
  const Eigen::VectorXd gf_snap = query_outer_gradient(p, i, snap.g_tilde, ledger);
  GradientEstimate est;
  est.direction = jac_x.transpose() * gf_hat - jac_snap.transpose() * gf_snap + snap.grad_tilde;
  est.queries_charged = ledger.total() - before;
  return est;
}

/// SCVR-II direction
///   dG^^T gradF_i(G^) - dG(x~)^T gradF_i(G(x~)) + grad f(x~).
/// The correction uses the snapshot Jacobian (the form the convergence proof
/// analyzes). Charges 2.
template <CompositionProblem P>
GradientEstimate grad_scvr2(const P& p, const EpochSnapshot& snap, const InnerValue& g_hat,
                            const InnerJacobian& jac_hat, std::size_t i, QueryLedger& ledger) {
  const std::uint64_t before = ledger.total();
  const Eigen::VectorXd gf_hat = query_outer_gradient(p, i, g_hat, ledger);
  const Eigen::VectorXd gf_snap = query_outer_gradient(p, i, snap.g_tilde, ledger);
  GradientEstimate est;
  est.direction =
      jac_hat.transpose() * gf_hat - snap.jac_tilde.transpose() * gf_snap + snap.grad_tilde;
  est.queries_charged = ledger.total() - before;
  return est;
}

/// Mini-batch direction, first form:
///   (1/b) sum_{i in batch} [dG^^T gradF_i(G^) - dG(x~)^T gradF_i(G(x~))] + grad f(x~).
/// Charges 2b.
template <CompositionProblem P>
GradientEstimate grad_minibatch_v1(const P& p, const EpochSnapshot& snap,
                                   const InnerValue& g_hat, const InnerJacobian& jac_hat,
                                   const IndexBatch& outer_batch, QueryLedger& ledger) {
  detail::require_batch(outer_batch, p.outer_count(), "grad_minibatch_v1");
  const std::uint64_t before = ledger.total();
  Point acc = Point::Zero(snap.grad_tilde.size());
  for (std::size_t i : outer_batch) {
    const Eigen::VectorXd gf_hat = query_outer_gradient(p, i, g_hat, ledger);
    const Eigen::VectorXd gf_snap = query_outer_gradient(p, i, snap.g_tilde, ledger);
    acc += jac_hat.transpose() * gf_hat - snap.jac_tilde.transpose() * gf_snap;
  }
  GradientEstimate est;
  est.direction = acc / static_cast<double>(outer_batch.size()) + snap.grad_tilde;
  est.queries_charged = ledger.total() - before;
  return est;
}

/// Mini-batch direction, second form, with dG_B(.) = (1/B) sum_{j in jac_batch} dG_j(.):
///   (1/b) sum_{i in batch} [dG_B(x)^T gradF_i(G^) - dG_B(x~)^T gradF_i(G(x~))] + grad f(x~).
/// Charges 2B + 2b.
template <CompositionProblem P>
GradientEstimate grad_minibatch_v2(const P& p, const Point& x, const EpochSnapshot& snap,
                                   const InnerValue& g_hat, const IndexBatch& jac_batch,
                                   const IndexBatch& outer_batch, QueryLedger& ledger) {
  detail::require_batch(jac_batch, p.inner_count(), "grad_minibatch_v2");
  detail::require_batch(outer_batch, p.outer_count(), "grad_minibatch_v2");
  const std::uint64_t before = ledger.total();
  InnerJacobian jac_x = InnerJacobian::Zero(snap.jac_tilde.rows(), snap.jac_tilde.cols());
  InnerJacobian jac_snap = jac_x;
  for (std::size_t j : jac_batch) {
    jac_x += query_inner_jacobian(p, j, x, ledger);
    jac_snap += query_inner_jacobian(p, j, snap.x_tilde, ledger);
  }
  jac_x /= static_cast<double>(jac_batch.size());
  jac_snap /= static_cast<double>(jac_batch.size());
  Point acc = Point::Zero(snap.grad_tilde.size());
  for (std::size_t i : outer_batch) {
    const Eigen::VectorXd gf_hat = query_outer_gradient(p, i, g_hat, ledger);
    const Eigen::VectorXd gf_snap = query_outer_gradient(p, i, snap.g_tilde, ledger);
    acc += jac_x.transpose() * gf_hat - jac_snap.transpose() * gf_snap;
  }
  GradientEstimate est;
  est.direction = acc / static_cast<double>(outer_batch.size()) + snap.grad_tilde;
  est.queries_charged = ledger.total() - before;
  return est;
}

}  // namespace scvr
