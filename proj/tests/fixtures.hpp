#pragma once

// Small hand-built problems shared by the unit tests.

#include <cmath>
#include <limits>
#include <vector>

#include "scvr/core.hpp"
#include "scvr/problems/synthetic.hpp"

namespace scvr::fx {

inline Eigen::MatrixXd mat1(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }
inline Eigen::VectorXd vec1(double v) { return Eigen::VectorXd::Constant(1, v); }

/// Scalar G_j(x) = s_j x with targets c_i, F_i(w) = 0.5 (w - c_i)^2.
inline AffineQuadraticProblem scalar_problem(const std::vector<double>& slopes,
                                             const std::vector<double>& targets) {
  std::vector<Eigen::MatrixXd> a;
  std::vector<Eigen::VectorXd> b, c;
  for (double s : slopes) {
    a.push_back(mat1(s));
    b.push_back(vec1(0.0));
  }
  for (double t : targets) c.push_back(vec1(t));
  return {std::move(a), std::move(b), std::move(c)};
}

inline SyntheticShape shape(std::size_t n, std::size_t m, std::size_t dx, std::size_t dw,
                            std::uint64_t seed) {
  SyntheticShape s;
  s.n = n;
  s.m = m;
  s.dim_x = dx;
  s.dim_w = dw;
  s.seed = seed;
  return s;
}

inline Point random_point(std::size_t dim, std::uint64_t seed, double scale = 1.0) {
  SampleStream rng(seed);
  Point x(static_cast<Eigen::Index>(dim));
  for (Eigen::Index l = 0; l < x.size(); ++l) x[l] = scale * rng.normal();
  return x;
}

/// Component 2 of the inner map returns NaN once x_0 > 1.
struct PoisonedProblem {
  std::size_t outer_count() const { return 2; }
  std::size_t inner_count() const { return 3; }
  std::size_t input_dim() const { return 2; }
  std::size_t inner_dim() const { return 2; }
  SmoothnessConstants constants() const { return {}; }
  Eigen::VectorXd inner_component(std::size_t j, const Eigen::VectorXd& x) const {
    if (j == 1 && x[0] > 1.0) return Eigen::VectorXd::Constant(2, std::nan(""));
    return x;
  }
  Eigen::MatrixXd inner_component_jacobian(std::size_t, const Eigen::VectorXd&) const {
    return Eigen::MatrixXd::Identity(2, 2);
  }
  double outer_component(std::size_t, const Eigen::VectorXd& w) const { return 0.5 * w.squaredNorm(); }
  Eigen::VectorXd outer_component_gradient(std::size_t, const Eigen::VectorXd& w) const { return w; }
};

}  // namespace scvr::fx
