#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "fixtures.hpp"
#include "scvr/harness/embed.hpp"
#include "scvr/problems/dataset.hpp"
#include "scvr/problems/sne.hpp"
#include "scvr/problems/synthetic.hpp"
#include "scvr/verification.hpp"

using namespace scvr;
using scvr::fx::shape;

namespace {

Dataset small_data(std::size_t n, std::size_t dim, std::uint64_t seed) {
  return harness::gaussian_clusters(n, dim, 2, seed, 2.0);
}

template <typename P>
void expect_gradient_matches_fd(const P& p, double scale, double tol) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Point x = fx::random_point(p.input_dim(), 100 + seed, scale);
    QueryLedger ledger;
    const Point g = full_gradient(p, x, ledger);
    const Point fd = fd_gradient(p, x);
    EXPECT_LT(relative_error(g, fd, 1e-6), tol) << "seed " << seed;
  }
}

}  // namespace

TEST(GradientCheck, AffineQuadratic) {
  expect_gradient_matches_fd(AffineQuadraticProblem::random(shape(4, 5, 4, 3, 1)), 1.0, 1e-6);
}

TEST(GradientCheck, NonconvexSynthetic) {
  expect_gradient_matches_fd(NonconvexSyntheticProblem::random(shape(4, 5, 4, 3, 2)), 1.0, 1e-6);
}

TEST(GradientCheck, CurvedInner) {
  expect_gradient_matches_fd(CurvedInnerProblem::random(shape(4, 5, 4, 3, 3), 0.8), 1.0, 1e-6);
}

TEST(GradientCheck, Sne) {
  const SneProblem p = build_sne(small_data(6, 4, 4), 1.0, 2);
  expect_gradient_matches_fd(p, 0.5, 1e-5);
}

TEST(AffineQuadratic, ClosedFormsAgreeWithOracle) {
  const auto p = AffineQuadraticProblem::random(shape(5, 4, 3, 3, 5));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Point x = fx::random_point(3, seed);
    QueryLedger ledger;
    EXPECT_NEAR(objective(p, x, ledger), p.closed_form_objective(x), 1e-10);
    EXPECT_LT((full_gradient(p, x, ledger) - p.closed_form_gradient(x)).norm(), 1e-10);
  }
}

TEST(AffineQuadratic, JacobianBoundIsLargestSingularValue) {
  const auto p = AffineQuadraticProblem::random(shape(2, 6, 4, 3, 6));
  double expected = 0.0;
  for (const auto& a : p.matrices())
    expected = std::max(expected, Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()[0]);
  EXPECT_NEAR(p.constants().b_g, expected, 1e-8 * expected);
  EXPECT_EQ(p.constants().l_g, 0.0);
  EXPECT_NEAR(p.constants().l_f, expected * expected, 1e-8 * expected * expected);
}

TEST(RhoPenalty, BoundsAttained) {
  const double t = 1.0 / std::sqrt(3.0);
  EXPECT_NEAR(RhoPenalty::derivative(t), RhoPenalty::derivative_bound(), 1e-15);
  for (double s = -5.0; s <= 5.0; s += 0.01) {
    EXPECT_LE(std::abs(RhoPenalty::derivative(s)), RhoPenalty::derivative_bound() + 1e-15);
    EXPECT_GE(RhoPenalty::value(s), 0.0);
    EXPECT_LT(RhoPenalty::value(s), 1.0);
    const double h = 1e-5;
    const double second = (RhoPenalty::derivative(s + h) - RhoPenalty::derivative(s - h)) / (2 * h);
    EXPECT_LE(std::abs(second), RhoPenalty::curvature_bound() + 1e-6);
  }
}

TEST(CurvedInner, ZeroCurvatureIsAffine) {
  const auto p = CurvedInnerProblem::random(shape(3, 3, 3, 2, 7), 0.0);
  EXPECT_EQ(p.constants().l_g, 0.0);
  const Point x = fx::random_point(3, 1), y = fx::random_point(3, 2);
  for (std::size_t j = 0; j < 3; ++j)
    EXPECT_LT((p.inner_component_jacobian(j, x) - p.inner_component_jacobian(j, y)).norm(), 1e-14);
}

TEST(Sne, KernelIsOneForIdenticalPoints) {
  const SneProblem p = build_sne(small_data(4, 3, 8), 1.0, 2);
  const Point y = Point::Zero(8);
  EXPECT_EQ(p.kernel(y, 0, 3), 1.0);
  EXPECT_EQ(p.kernel(y, 2, 2), 1.0);
}

TEST(Sne, SimilarityRowsSumToOne) {
  const Eigen::MatrixXd pm = similarity_matrix(small_data(7, 3, 9), {0.8});
  for (Eigen::Index t = 0; t < pm.rows(); ++t) {
    EXPECT_NEAR(pm.row(t).sum(), 1.0, 1e-12);
    EXPECT_EQ(pm(t, t), 0.0);
  }
}

TEST(Sne, CompositionEqualsDirectObjective) {
  const SneProblem p = build_sne(small_data(8, 4, 10), 1.2, 2);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Point y = fx::random_point(16, seed);
    QueryLedger ledger;
    const double composed = objective(p, y, ledger);
    const double direct = p.direct_objective(y);
    EXPECT_LE(std::abs(composed - direct), 1e-12 * std::abs(direct));
  }
}

TEST(Sne, TranslationInvariant) {
  const SneProblem p = build_sne(small_data(6, 3, 11), 1.0, 2);
  const Point y = fx::random_point(12, 3);
  Point shifted = y;
  for (Eigen::Index k = 0; k < 6; ++k) {
    shifted[2 * k] += 3.5;
    shifted[2 * k + 1] -= 1.25;
  }
  QueryLedger ledger;
  const double a = objective(p, y, ledger);
  EXPECT_LE(std::abs(objective(p, shifted, ledger) - a), 1e-10 * std::abs(a));
}

TEST(Sne, RejectsBadBandwidths) {
  const Dataset d = small_data(4, 2, 12);
  EXPECT_THROW(build_sne(d, 0.0, 2), ConstructionError);
  EXPECT_THROW(build_sne(d, -1.0, 2), ConstructionError);
  EXPECT_THROW(build_sne(d, std::vector<double>{1.0, 1.0}, 2), ConstructionError);
}

TEST(Sne, IsolatedSampleNamesRow) {
  Dataset d;
  d.values = Eigen::MatrixXd(3, 1);
  d.values << 0.0, 0.1, 1000.0;
  try {
    build_sne(d, 0.01, 2);
    FAIL() << "expected ConstructionError";
  } catch (const ConstructionError& e) {
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos);
  }
}

TEST(Sne, JsonRoundTrip) {
  const SneProblem p = build_sne(small_data(5, 3, 13), std::vector<double>{1, 1.5, 2, 0.5, 1}, 3);
  const SneProblem q = sne_from_json(nlohmann::json::parse(to_json(p).dump()));
  EXPECT_EQ(q.p_matrix(), p.p_matrix());
  EXPECT_EQ(q.sigma(), p.sigma());
  EXPECT_EQ(q.embed_dim(), 3u);
}

TEST(Sne, GuardEventsCounted) {
  const SneProblem p = build_sne(small_data(4, 2, 14), 1.0, 2);
  EXPECT_EQ(p.guard_events(), 0u);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.inner_dim()));
  const double v = p.outer_component(0, w);  // every normalizer is 0
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_GT(p.guard_events(), 0u);
}

TEST(Sne, PerplexityBandwidthsHitTarget) {
  const Dataset d = small_data(20, 5, 15);
  const double perplexity = 6.0;
  const std::vector<double> sigma = harness::perplexity_sigma(d, perplexity);
  ASSERT_EQ(sigma.size(), 20u);
  const Eigen::MatrixXd pm = similarity_matrix(d, sigma);
  for (Eigen::Index t = 0; t < pm.rows(); ++t) {
    double entropy = 0.0;
    for (Eigen::Index i = 0; i < pm.cols(); ++i)
      if (pm(t, i) > 0) entropy -= pm(t, i) * std::log(pm(t, i));
    EXPECT_NEAR(std::exp(entropy), perplexity, 1e-3 * perplexity);
  }
  EXPECT_THROW(harness::perplexity_sigma(d, 0.5), ConstructionError);
  EXPECT_THROW(harness::perplexity_sigma(d, 20.0), ConstructionError);
}

TEST(Normalize, ConstantColumnIsCentered) {
  Dataset d;
  d.values = Eigen::MatrixXd(3, 2);
  d.values << 1, 5, 2, 5, 3, 5;
  const Dataset z = normalize(d);
  EXPECT_TRUE(z.values.col(1).isZero());
  EXPECT_NEAR(z.values(0, 0), -std::sqrt(1.5), 1e-12);
}

TEST(Normalize, UnitMoments) {
  const Dataset z = normalize(small_data(30, 4, 16));
  for (Eigen::Index c = 0; c < 4; ++c) {
    EXPECT_NEAR(z.values.col(c).mean(), 0.0, 1e-12);
    EXPECT_NEAR(z.values.col(c).squaredNorm() / 30.0, 1.0, 1e-12);
  }
}

TEST(Normalize, Idempotent) {
  const Dataset a = normalize(small_data(12, 3, 17));
  EXPECT_LT((normalize(a).values - a.values).norm(), 1e-12);
}

TEST(Pca, ReconstructsLowRankData) {
  SampleStream rng(18);
  Eigen::MatrixXd left(20, 2), right(2, 6);
  for (Eigen::Index k = 0; k < left.size(); ++k) left.data()[k] = rng.normal();
  for (Eigen::Index k = 0; k < right.size(); ++k) right.data()[k] = rng.normal();
  Dataset d{left * right};
  const Dataset r = pca_reduce(d, 2);
  const Eigen::MatrixXd centered = d.values.rowwise() - d.values.colwise().mean();
  // an orthonormal projection that keeps all variance keeps all pairwise distances
  EXPECT_NEAR(r.values.squaredNorm(), centered.squaredNorm(), 1e-9 * centered.squaredNorm());
  EXPECT_NEAR((r.values.row(0) - r.values.row(5)).norm(), (centered.row(0) - centered.row(5)).norm(),
              1e-9);
}

TEST(Pca, ComponentsUncorrelatedAndOrdered) {
  const Dataset r = pca_reduce(small_data(40, 6, 19), 4);
  const Eigen::MatrixXd cov = r.values.transpose() * r.values / 40.0;
  for (Eigen::Index a = 0; a < 4; ++a) {
    for (Eigen::Index b = 0; b < 4; ++b)
      if (a != b) EXPECT_NEAR(cov(a, b), 0.0, 1e-10);
    if (a > 0) EXPECT_GE(cov(a - 1, a - 1), cov(a, a));
    EXPECT_NEAR(r.values.col(a).mean(), 0.0, 1e-12);
  }
}

TEST(Pca, RejectsOutOfRangeK) {
  const Dataset d = small_data(5, 3, 20);
  EXPECT_THROW(pca_reduce(d, 0), ArgumentError);
  EXPECT_THROW(pca_reduce(d, 4), ArgumentError);
  EXPECT_NO_THROW(pca_reduce(d, 3));
}

TEST(Csv, ParsesSmallMatrix) {
  std::istringstream in("1,2,3\n4.5, -6 ,7e1\n");
  const Dataset d = parse_matrix(in);
  ASSERT_EQ(d.rows(), 2);
  ASSERT_EQ(d.cols(), 3);
  EXPECT_EQ(d.values(1, 0), 4.5);
  EXPECT_EQ(d.values(1, 1), -6.0);
  EXPECT_EQ(d.values(1, 2), 70.0);
}

TEST(Csv, RaggedRowNamesLine) {
  std::istringstream in("1,2\n3\n");
  try {
    parse_matrix(in, "data.csv");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("data.csv:2"), std::string::npos);
  }
}

TEST(Csv, BadNumberNamesColumn) {
  std::istringstream in("1,2\n3,abc\n");
  try {
    parse_matrix(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 2u);
  }
}

TEST(Csv, SkipsHeaderComment) {
  std::istringstream in("#x,y\n1,2\n");
  EXPECT_EQ(parse_matrix(in).rows(), 1);
}

TEST(Csv, RoundTripIsExact) {
  Eigen::MatrixXd m(2, 2);
  m << 0.1, -1.0 / 3.0, 1e-300, 12345.678901234567;
  std::stringstream buf;
  write_matrix(buf, m, "a,b");
  EXPECT_EQ(parse_matrix(buf).values, m);
}
