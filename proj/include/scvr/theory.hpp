#pragma once

// Computable theory constants: the backward c_k recursions and the u_k
// sequences behind the convergence guarantees, their geometric closed form,
// suggested parameters and predicted query-complexity exponents.
//
// All three recursions share the shape
//   c_K = 0,  c_k = c_{k+1} Y + U,
//   u_k = (1/2 - c_{k+1} h) eta - (2 L_f + 4 c_{k+1}) eta^2,
// with q = B_G^4 L_F^2 / A and
//   Y = 1 + (1/h + 1/d + d q) eta + 4 V eta^2,   U = q eta / 2 + 2 L_f V eta^2,
//   V = 2 L_f^2 + q                              (SCVR-I)
//   V = q + B_F^2 L_G^2 / B + L_f^2              (SCVR-II)
//   V = (q + B_F^2 L_G^2 / B + b L_f^2) / b      (mini-batch)
// so c_0 = U (Y^K - 1) / (Y - 1).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "scvr/core.hpp"

namespace scvr {

enum class TheoryAlgorithm { scvr1, scvr2, minibatch };

inline const char* to_string(TheoryAlgorithm a) {
  switch (a) {
    case TheoryAlgorithm::scvr1: return "scvr1";
    case TheoryAlgorithm::scvr2: return "scvr2";
    case TheoryAlgorithm::minibatch: return "minibatch";
  }
  return "?";
}

struct TheoryParams {
  double m0 = 1.0;      // log m / log n
  double alpha = 0.4;
  double a0 = 0.4;      // A ~ n^{a0}
  double b0_jac = 0.4;  // B ~ n^{b0_jac}
  double h0 = 0.2;
  double d0 = 0.2;
  double h = 1.0;
  double d = 1.0;
  double eta = 0.01;
  std::size_t cap_k = 1;
  std::size_t sample_a = 1;
  std::size_t sample_b = 1;
  std::size_t batch_b = 1;
  // Reals before ceilings, for exponent checks.
  double sample_a_real = 1.0;
  double sample_b_real = 1.0;
  double cap_k_rate = 1.0;  // n^{3 alpha / 2} (divided by b for mini-batch)
  double cap_k_real = 1.0;  // scale / (b_factor (Y - 1)) before the floor
};

struct RecursionDiagnostics {
  std::vector<double> c_sequence;  // c_0 .. c_K, c_K = 0
  std::vector<double> u_sequence;  // u_0 .. u_{K-1}
  double growth = 1.0;             // Y
  double offset = 0.0;             // U
  double u_min = 0.0;
  double u_max = 0.0;
  double c0 = 0.0;                 // from the recursion
  double c0_closed = 0.0;          // U (Y^K - 1) / (Y - 1)
  double c0h = 0.0;
  bool premise_holds = false;      // c0 h < 1/2 and u_min > 0
};

namespace detail {

inline void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ArgumentError(std::string(name) + " must be > 0");
}

inline double variance_coefficient(TheoryAlgorithm alg, const SmoothnessConstants& c,
                                   double a, double b_jac, double b_outer) {
  const double q = std::pow(c.b_g, 4) * c.l_f_outer * c.l_f_outer / a;
  switch (alg) {
    case TheoryAlgorithm::scvr1: return 2.0 * c.l_f * c.l_f + q;
    case TheoryAlgorithm::scvr2: return q + c.b_f * c.b_f * c.l_g * c.l_g / b_jac + c.l_f * c.l_f;
    case TheoryAlgorithm::minibatch:
      return (q + c.b_f * c.b_f * c.l_g * c.l_g / b_jac + b_outer * c.l_f * c.l_f) / b_outer;
  }
  return 0.0;
}

inline double growth_factor(TheoryAlgorithm alg, const TheoryParams& p,
                            const SmoothnessConstants& c, double b_outer) {
  const double q = std::pow(c.b_g, 4) * c.l_f_outer * c.l_f_outer / static_cast<double>(p.sample_a);
  const double v = variance_coefficient(alg, c, static_cast<double>(p.sample_a),
                                        static_cast<double>(p.sample_b), b_outer);
  return 1.0 + (1.0 / p.h + 1.0 / p.d + p.d * q) * p.eta + 4.0 * v * p.eta * p.eta;
}

inline RecursionDiagnostics recursion(TheoryAlgorithm alg, const TheoryParams& p,
                                      const SmoothnessConstants& c, std::size_t k_steps,
                                      double b_outer) {
  require_positive(p.h, "h");
  require_positive(p.d, "d");
  require_positive(p.eta, "eta");
  require_positive(static_cast<double>(p.sample_a), "A");
  require_positive(static_cast<double>(p.sample_b), "B");
  require_positive(b_outer, "b");
  require_positive(c.b_g, "b_g");
  require_positive(c.l_f, "l_f");
  require_positive(c.l_f_outer, "l_f_outer");
  if (k_steps == 0) throw ArgumentError("K must be >= 1");

  const double a = static_cast<double>(p.sample_a);
  const double q = std::pow(c.b_g, 4) * c.l_f_outer * c.l_f_outer / a;
  const double v = variance_coefficient(alg, c, a, static_cast<double>(p.sample_b), b_outer);
  const double eta = p.eta;

  RecursionDiagnostics out;
  out.growth = growth_factor(alg, p, c, b_outer);
  out.offset = q * eta / 2.0 + 2.0 * c.l_f * v * eta * eta;
  out.c_sequence.assign(k_steps + 1, 0.0);
  out.u_sequence.assign(k_steps, 0.0);
  for (std::size_t k = k_steps; k-- > 0;) {
    const double next = out.c_sequence[k + 1];
    out.c_sequence[k] = next * out.growth + out.offset;
    out.u_sequence[k] = (0.5 - next * p.h) * eta - (2.0 * c.l_f + 4.0 * next) * eta * eta;
  }
  out.u_min = *std::min_element(out.u_sequence.begin(), out.u_sequence.end());
  out.u_max = *std::max_element(out.u_sequence.begin(), out.u_sequence.end());
  out.c0 = out.c_sequence.front();
  // (Y^K - 1) / (Y - 1) = sum_{t<K} Y^t, written with expm1/log1p for Y near 1
  const double y_minus_1 = out.growth - 1.0;
  out.c0_closed = out.offset * std::expm1(static_cast<double>(k_steps) * std::log1p(y_minus_1)) /
                  y_minus_1;
  out.c0h = out.c0 * p.h;
  out.premise_holds = out.c0h < 0.5 && out.u_min > 0.0;
  return out;
}

}  // namespace detail

inline RecursionDiagnostics recursion_scvr1(const TheoryParams& p, const SmoothnessConstants& c,
                                            std::size_t k_steps) {
  return detail::recursion(TheoryAlgorithm::scvr1, p, c, k_steps, 1.0);
}

inline RecursionDiagnostics recursion_scvr2(const TheoryParams& p, const SmoothnessConstants& c,
                                            std::size_t k_steps) {
  return detail::recursion(TheoryAlgorithm::scvr2, p, c, k_steps, 1.0);
}

inline RecursionDiagnostics recursion_minibatch(const TheoryParams& p,
                                                const SmoothnessConstants& c,
                                                std::size_t k_steps, std::size_t b) {
  return detail::recursion(TheoryAlgorithm::minibatch, p, c, k_steps, static_cast<double>(b));
}

inline RecursionDiagnostics recursion_for(TheoryAlgorithm alg, const TheoryParams& p,
                                          const SmoothnessConstants& c) {
  return detail::recursion(alg, p, c, p.cap_k, static_cast<double>(p.batch_b));
}

/// log m / log n; requires n >= 2.
inline double m0_exponent(std::size_t n, std::size_t m) {
  if (n < 2) throw ArgumentError("n must be >= 2 (m0 = log m / log n is undefined for n = 1)");
  if (m < 1) throw ArgumentError("m must be >= 1");
  return std::log(static_cast<double>(m)) / std::log(static_cast<double>(n));
}

/// Rate exponent: 2/5 when m0 <= 1, 2 m0 / 5 otherwise.
inline double suggested_alpha(double m0) { return m0 <= 1.0 ? 0.4 : 0.4 * m0; }

/// Parameter suggestions.
///
/// A = ceil(B_G^4 L_F^2 n^alpha / 2), B = ceil(B_F^2 L_G^2 n^alpha) (at least 1),
/// h = n^{alpha/2} / (e - 1), d = n^{alpha/2},
/// eta = scale n^{-alpha} / (2 L_f V) with V the algorithm's variance
/// coefficient (see the header comment).
/// K = max(1, floor(scale / (b' (Y - 1)))) with b' = b for the mini-batch
/// method and 1 otherwise. This keeps Y^K <= e, which the c_0 h < 1/2
/// premise needs; the growth-rate value n^{3 alpha / 2} (/ b) is reported
/// as cap_k_rate.
inline TheoryParams suggest_parameters(std::size_t n, std::size_t m, const SmoothnessConstants& c,
                                       TheoryAlgorithm alg, std::size_t b = 1,
                                       double scale = 1.0) {
  c.validate();
  detail::require_positive(scale, "scale");
  if (b == 0) throw ArgumentError("b must be >= 1");
  TheoryParams p;
  const double nn = static_cast<double>(n);
  p.m0 = m0_exponent(n, m);
  p.alpha = suggested_alpha(p.m0);
  p.a0 = p.alpha;
  p.b0_jac = p.alpha;
  p.h0 = p.d0 = p.alpha / 2.0;
  const double n_alpha = std::pow(nn, p.alpha);
  p.sample_a_real = std::pow(c.b_g, 4) * c.l_f_outer * c.l_f_outer * n_alpha / 2.0;
  p.sample_b_real = c.b_f * c.b_f * c.l_g * c.l_g * n_alpha;
  p.sample_a = static_cast<std::size_t>(std::max(1.0, std::ceil(p.sample_a_real)));
  p.sample_b = static_cast<std::size_t>(std::max(1.0, std::ceil(p.sample_b_real)));
  p.batch_b = alg == TheoryAlgorithm::minibatch ? b : 1;
  p.h = std::pow(nn, p.h0) / (std::exp(1.0) - 1.0);
  p.d = std::pow(nn, p.d0);
  const double b_outer = static_cast<double>(p.batch_b);
  const double v = detail::variance_coefficient(alg, c, static_cast<double>(p.sample_a),
                                                static_cast<double>(p.sample_b), b_outer);
  p.eta = scale / (n_alpha * 2.0 * c.l_f * v);
  const double y_minus_1 = detail::growth_factor(alg, p, c, b_outer) - 1.0;
  p.cap_k_real = scale / (b_outer * y_minus_1);
  p.cap_k = static_cast<std::size_t>(std::max(1.0, std::floor(p.cap_k_real)));
  p.cap_k_rate = std::pow(nn, 1.5 * p.alpha) / b_outer;
  return p;
}

/// Batch size B that makes the SCVR-II step size equal to SCVR-I's:
/// B = B_F^2 L_G^2 / L_f^2.
inline double equivalent_jacobian_batch(const SmoothnessConstants& c) {
  return c.b_f * c.b_f * c.l_g * c.l_g / (c.l_f * c.l_f);
}

/// Predicted query-complexity exponents e (QC ~ n^e / epsilon).
struct ExponentReport {
  double m0 = 0.0;
  double b0 = 0.0;  // log b / log n
  double alpha = 0.0;
  double scvr = 0.0;
  double svrg = 0.0;  // also the A = m (full inner evaluation) regime
  double minibatch_parallel_outer = 0.0;
  double minibatch_all_parallel = 0.0;
  double minibatch_nonparallel = 0.0;
  bool scvr_preferred = false;  // scvr <= svrg, i.e. m0 >= 2/5
  std::string recommendation;
};

inline double scvr_exponent(double m0) { return m0 <= 1.0 ? 0.8 : 0.8 * m0; }

inline double svrg_exponent(double m0) { return m0 <= 1.0 ? 2.0 / 3.0 + m0 / 3.0 : m0; }

inline ExponentReport predict_query_complexity(std::size_t n, std::size_t m, std::size_t b = 1) {
  if (b == 0) throw ArgumentError("b must be >= 1");
  ExponentReport r;
  r.m0 = m0_exponent(n, m);
  r.b0 = std::log(static_cast<double>(b)) / std::log(static_cast<double>(n));
  r.alpha = suggested_alpha(r.m0);
  r.scvr = scvr_exponent(r.m0);
  r.svrg = svrg_exponent(r.m0);
  const double lead = r.m0 <= 1.0 ? 1.0 : r.m0;
  r.minibatch_parallel_outer = 0.8 * lead - r.b0 / 5.0;
  r.minibatch_all_parallel = 2.0 * lead / 3.0 - r.b0 / 3.0;
  r.minibatch_nonparallel = r.b0 <= 2.0 / 3.0 ? r.minibatch_parallel_outer : 2.0 * lead / 3.0;
  r.scvr_preferred = r.m0 >= 0.4;
  r.recommendation = r.scvr_preferred ? "use SCVR" : "use SVRG";
  return r;
}

}  // namespace scvr
