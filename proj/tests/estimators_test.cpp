#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "scvr/estimators.hpp"
#include "scvr/problems/synthetic.hpp"

using namespace scvr;
using scvr::fx::scalar_problem;
using scvr::fx::shape;
using scvr::fx::vec1;

namespace {

struct Bench {
  CurvedInnerProblem p = CurvedInnerProblem::random(shape(5, 6, 4, 3, 31), 0.7);
  Point x_tilde = fx::random_point(4, 1);
  Point x = fx::random_point(4, 2);
  EpochSnapshot snap;
  Bench() {
    QueryLedger ledger;
    snap = make_snapshot(p, x_tilde, ledger);
  }
};

}  // namespace

TEST(Snapshot, CachesFullQuantitiesAndCharges) {
  Bench s;
  QueryLedger ledger;
  const EpochSnapshot snap = make_snapshot(s.p, s.x_tilde, ledger);
  EXPECT_EQ(ledger.total(), 2u * 6 + 5);
  QueryLedger shadow;
  EXPECT_EQ(snap.g_tilde, inner_full(s.p, s.x_tilde, shadow));
  EXPECT_EQ(snap.jac_tilde, inner_jacobian_full(s.p, s.x_tilde, shadow));
  EXPECT_LT((snap.grad_tilde - full_gradient(s.p, s.x_tilde, shadow)).norm(), 1e-12);
}

TEST(EstimateInner, ExactAtSnapshot) {
  Bench s;
  SampleStream rng(5);
  QueryLedger ledger;
  for (int t = 0; t < 20; ++t) {
    const IndexBatch batch = sample_indices(rng, 6, 3);
    EXPECT_LT((estimate_inner(s.p, s.x_tilde, s.snap, batch, ledger) - s.snap.g_tilde).norm(), 1e-12);
  }
}

TEST(EstimateInner, ScalarSingleDraws) {
  const auto p = scalar_problem({1.0, 2.0}, {0.0});
  QueryLedger ledger;
  const EpochSnapshot snap = make_snapshot(p, vec1(0.0), ledger);
  const double first = estimate_inner(p, vec1(1.0), snap, {0}, ledger)[0];
  const double second = estimate_inner(p, vec1(1.0), snap, {1}, ledger)[0];
  EXPECT_DOUBLE_EQ(first, 1.0);
  EXPECT_DOUBLE_EQ(second, 2.0);
  EXPECT_DOUBLE_EQ(0.5 * (first + second), 1.5);
}

TEST(EstimateInner, ChargesTwoA) {
  Bench s;
  QueryLedger ledger;
  estimate_inner(s.p, s.x, s.snap, {0, 3, 3, 5}, ledger);
  EXPECT_EQ(ledger.inner_value_queries, 8u);
  EXPECT_EQ(ledger.total(), 8u);
}

TEST(EstimateInner, RejectsBadBatches) {
  Bench s;
  QueryLedger ledger;
  EXPECT_THROW(estimate_inner(s.p, s.x, s.snap, {}, ledger), ArgumentError);
  EXPECT_THROW(estimate_inner(s.p, s.x, s.snap, {6}, ledger), ArgumentError);
}

TEST(EstimateInnerJacobian, ExactAtSnapshot) {
  Bench s;
  QueryLedger ledger;
  EXPECT_LT((estimate_inner_jacobian(s.p, s.x_tilde, s.snap, {1, 4}, ledger) - s.snap.jac_tilde).norm(),
            1e-12);
}

TEST(EstimateInnerJacobian, SingleDrawAverageIsFullJacobian) {
  Bench s;
  QueryLedger ledger;
  InnerJacobian sum = InnerJacobian::Zero(3, 4);
  for (std::size_t j = 0; j < 6; ++j) sum += estimate_inner_jacobian(s.p, s.x, s.snap, {j}, ledger);
  QueryLedger shadow;
  EXPECT_LT((sum / 6.0 - inner_jacobian_full(s.p, s.x, shadow)).norm(), 1e-12);
}

TEST(EstimateInnerJacobian, ChargesTwoB) {
  Bench s;
  QueryLedger ledger;
  estimate_inner_jacobian(s.p, s.x, s.snap, {2, 2, 0}, ledger);
  EXPECT_EQ(ledger.inner_jacobian_queries, 6u);
  EXPECT_EQ(ledger.total(), 6u);
  EXPECT_THROW(estimate_inner_jacobian(s.p, s.x, s.snap, {}, ledger), ArgumentError);
}

TEST(GradScvr1, ExactAtSnapshotForEveryPair) {
  Bench s;
  QueryLedger ledger;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      const Point d = grad_scvr1(s.p, s.x_tilde, s.snap, s.snap.g_tilde, i, j, ledger).direction;
      EXPECT_LT((d - s.snap.grad_tilde).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(GradScvr1, PairMeanIsConditionalGradient) {
  Bench s;
  QueryLedger ledger;
  const InnerValue g_hat = estimate_inner(s.p, s.x, s.snap, {2, 5}, ledger);
  Point sum = Point::Zero(4);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      sum += grad_scvr1(s.p, s.x, s.snap, g_hat, i, j, ledger).direction;
  QueryLedger shadow;
  const InnerJacobian jac = inner_jacobian_full(s.p, s.x, shadow);
  const Point expected = jac.transpose() * outer_gradient_full(s.p, g_hat, shadow);
  EXPECT_LT((sum / 30.0 - expected).norm(), 1e-12);
}

TEST(GradScvr1, ChargesFour) {
  Bench s;
  QueryLedger ledger;
  const auto est = grad_scvr1(s.p, s.x, s.snap, s.snap.g_tilde, 1, 2, ledger);
  EXPECT_EQ(est.queries_charged, 4u);
  EXPECT_EQ(ledger.inner_jacobian_queries, 2u);
  EXPECT_EQ(ledger.outer_gradient_queries, 2u);
  EXPECT_THROW(grad_scvr1(s.p, s.x, s.snap, s.snap.g_tilde, 5, 0, ledger), ArgumentError);
}

TEST(GradScvr2, ExactAtSnapshot) {
  Bench s;
  QueryLedger ledger;
  for (std::size_t i = 0; i < 5; ++i) {
    const Point d = grad_scvr2(s.p, s.snap, s.snap.g_tilde, s.snap.jac_tilde, i, ledger).direction;
    EXPECT_LT((d - s.snap.grad_tilde).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(GradScvr2, OuterMeanMatchesFormula) {
  Bench s;
  QueryLedger ledger;
  const InnerValue g_hat = estimate_inner(s.p, s.x, s.snap, {0, 1}, ledger);
  const InnerJacobian jac_hat = estimate_inner_jacobian(s.p, s.x, s.snap, {4}, ledger);
  Point sum = Point::Zero(4);
  for (std::size_t i = 0; i < 5; ++i)
    sum += grad_scvr2(s.p, s.snap, g_hat, jac_hat, i, ledger).direction;
  QueryLedger shadow;
  const Point expected = jac_hat.transpose() * outer_gradient_full(s.p, g_hat, shadow) -
                         s.snap.jac_tilde.transpose() * outer_gradient_full(s.p, s.snap.g_tilde, shadow) +
                         s.snap.grad_tilde;
  EXPECT_LT((sum / 5.0 - expected).norm(), 1e-12);
}

TEST(GradScvr2, ChargesTwo) {
  Bench s;
  QueryLedger ledger;
  const auto est = grad_scvr2(s.p, s.snap, s.snap.g_tilde, s.snap.jac_tilde, 3, ledger);
  EXPECT_EQ(est.queries_charged, 2u);
  EXPECT_EQ(ledger.outer_gradient_queries, 2u);
  EXPECT_EQ(ledger.total(), 2u);
}

TEST(GradMinibatchV1, ExactAtSnapshot) {
  Bench s;
  QueryLedger ledger;
  const Point d =
      grad_minibatch_v1(s.p, s.snap, s.snap.g_tilde, s.snap.jac_tilde, {0, 0, 4}, ledger).direction;
  EXPECT_LT((d - s.snap.grad_tilde).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GradMinibatchV1, FullBatchIsDeterministicAverage) {
  Bench s;
  QueryLedger ledger;
  const InnerValue g_hat = estimate_inner(s.p, s.x, s.snap, {3}, ledger);
  const InnerJacobian jac_hat = estimate_inner_jacobian(s.p, s.x, s.snap, {1, 2}, ledger);
  Point loop = Point::Zero(4);
  for (std::size_t i = 0; i < 5; ++i)
    loop += jac_hat.transpose() * s.p.outer_component_gradient(i, g_hat) -
            s.snap.jac_tilde.transpose() * s.p.outer_component_gradient(i, s.snap.g_tilde);
  const Point expected = loop / 5.0 + s.snap.grad_tilde;
  const auto est = grad_minibatch_v1(s.p, s.snap, g_hat, jac_hat, {0, 1, 2, 3, 4}, ledger);
  EXPECT_LT((est.direction - expected).norm(), 1e-12);
  EXPECT_EQ(est.queries_charged, 10u);
  EXPECT_THROW(grad_minibatch_v1(s.p, s.snap, g_hat, jac_hat, {}, ledger), ArgumentError);
}

TEST(GradMinibatchV2, ExactAtSnapshot) {
  Bench s;
  QueryLedger ledger;
  const Point d =
      grad_minibatch_v2(s.p, s.x_tilde, s.snap, s.snap.g_tilde, {5, 1}, {2, 3}, ledger).direction;
  EXPECT_LT((d - s.snap.grad_tilde).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GradMinibatchV2, FullBatchesUseExactAverages) {
  Bench s;
  QueryLedger ledger;
  const InnerValue g_hat = estimate_inner(s.p, s.x, s.snap, {0, 4}, ledger);
  QueryLedger shadow;
  const InnerJacobian jac_x = inner_jacobian_full(s.p, s.x, shadow);
  const Point expected = jac_x.transpose() * outer_gradient_full(s.p, g_hat, shadow) -
                         s.snap.jac_tilde.transpose() * outer_gradient_full(s.p, s.snap.g_tilde, shadow) +
                         s.snap.grad_tilde;
  QueryLedger l2;
  const auto est = grad_minibatch_v2(s.p, s.x, s.snap, g_hat, {0, 1, 2, 3, 4, 5}, {0, 1, 2, 3, 4}, l2);
  EXPECT_LT((est.direction - expected).norm(), 1e-12);
  EXPECT_EQ(est.queries_charged, 2u * 6 + 2 * 5);
  EXPECT_EQ(l2.inner_jacobian_queries, 12u);
  EXPECT_EQ(l2.outer_gradient_queries, 10u);
  EXPECT_THROW(grad_minibatch_v2(s.p, s.x, s.snap, g_hat, {}, {0}, l2), ArgumentError);
  EXPECT_THROW(grad_minibatch_v2(s.p, s.x, s.snap, g_hat, {0}, {}, l2), ArgumentError);
}

TEST(Estimators, SnapshotIdentityOverSeededDraws) {
  Bench s;
  SampleStream rng(99);
  QueryLedger ledger;
  for (int t = 0; t < 100; ++t) {
    const IndexBatch a = sample_indices(rng, 6, 3);
    const IndexBatch b = sample_indices(rng, 6, 2);
    const IndexBatch outer = sample_indices(rng, 5, 3);
    const std::size_t i = rng.uniform_index(5), j = rng.uniform_index(6);
    const InnerValue g = estimate_inner(s.p, s.x_tilde, s.snap, a, ledger);
    const InnerJacobian jac = estimate_inner_jacobian(s.p, s.x_tilde, s.snap, b, ledger);
    for (const Point& d : {grad_scvr1(s.p, s.x_tilde, s.snap, g, i, j, ledger).direction,
                           grad_scvr2(s.p, s.snap, g, jac, i, ledger).direction,
                           grad_minibatch_v1(s.p, s.snap, g, jac, outer, ledger).direction,
                           grad_minibatch_v2(s.p, s.x_tilde, s.snap, g, b, outer, ledger).direction})
      EXPECT_LE((d - s.snap.grad_tilde).cwiseAbs().maxCoeff(), 1e-12);
  }
}
