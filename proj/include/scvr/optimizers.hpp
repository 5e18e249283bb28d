#pragma once

// Epoch-structured optimizers: SCVR-I, SCVR-II, mini-batch SCVR and the GD,
// SGD and SVRG baselines.
//
// Every method runs S epochs of K inner steps. Before the run the output
// position (s*, k*) is drawn uniformly from [S] x [K]; x_out is the iterate
// x_{k*} of epoch s* (the point the step at (s*, k*) starts from). Random
// draws per inner step, in order:
//   scvr1          A inner indices, then i, then j
//   scvr2          A inner indices, B inner indices, then i
//   minibatch_v*   A inner indices, B inner indices, b outer indices
//   svrg           i
//   sgd            i, then j
//   gd             none

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "scvr/core.hpp"
#include "scvr/estimators.hpp"

namespace scvr {

enum class Algorithm { scvr1, scvr2, minibatch_v1, minibatch_v2, gd, sgd, svrg };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::scvr1: return "scvr1";
    case Algorithm::scvr2: return "scvr2";
    case Algorithm::minibatch_v1: return "minibatch_v1";
    case Algorithm::minibatch_v2: return "minibatch_v2";
    case Algorithm::gd: return "gd";
    case Algorithm::sgd: return "sgd";
    case Algorithm::svrg: return "svrg";
  }
  return "?";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (auto a : {Algorithm::scvr1, Algorithm::scvr2, Algorithm::minibatch_v1,
                 Algorithm::minibatch_v2, Algorithm::gd, Algorithm::sgd, Algorithm::svrg})
    if (name == to_string(a)) return a;
  return std::nullopt;
}

inline bool uses_snapshot(Algorithm a) { return a != Algorithm::gd && a != Algorithm::sgd; }

struct OptimizerConfig {
  Algorithm variant = Algorithm::scvr1;
  double eta = 0.01;
  std::size_t epochs_s = 1;
  std::size_t inner_k = 1;
  std::size_t sample_a = 1;  // A
  std::size_t sample_b = 1;  // B (scvr2, mini-batch)
  std::size_t batch_b = 1;   // b (mini-batch)
  std::uint64_t seed = 0;
  std::size_t record_every = 1;
  std::uint64_t budget = 0;  // query cap, 0 = none
  bool wall_clock = false;   // fill TraceRecord::wall_ms (otherwise 0)

  void validate() const {
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw ArgumentError("eta must be finite and >= 0");
    if (epochs_s == 0 || inner_k == 0) throw ArgumentError("epochs_s and inner_k must be >= 1");
    if (sample_a == 0 || sample_b == 0 || batch_b == 0)
      throw ArgumentError("sample sizes must be >= 1");
    if (record_every == 0) throw ArgumentError("record_every must be >= 1");
  }
};

struct TraceRecord {
  std::size_t epoch = 0;
  std::size_t inner_iter = 0;
  std::uint64_t total_queries = 0;
  double grad_norm_sq = 0.0;  // out of band, never charged
  double objective = 0.0;     // out of band, never charged
  double wall_ms = 0.0;
};

struct OptResult {
  Point x_out;
  Point x_last;
  std::vector<TraceRecord> trace;
  QueryLedger ledger;
  std::size_t s_star = 0;
  std::size_t k_star = 0;
  std::size_t steps = 0;      // inner steps executed
  bool truncated = false;     // budget stopped the run before S * K steps
  std::size_t guard_events = 0;
};

/// Raised when an iterate leaves the finite region (|x_l| > 1e12 or NaN).
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& msg, std::vector<TraceRecord> trace, QueryLedger ledger)
      : std::runtime_error(msg), trace_(std::move(trace)), ledger_(ledger) {}
  const std::vector<TraceRecord>& trace() const { return trace_; }
  const QueryLedger& ledger() const { return ledger_; }

 private:
  std::vector<TraceRecord> trace_;
  QueryLedger ledger_;
};

inline constexpr double kDivergenceThreshold = 1e12;

/// Queries charged by one epoch snapshot and by one inner step.
inline std::uint64_t snapshot_cost(Algorithm a, std::size_t n, std::size_t m) {
  return uses_snapshot(a) ? 2 * m + n : 0;
}

inline std::uint64_t step_cost(const OptimizerConfig& c, std::size_t n, std::size_t m) {
  switch (c.variant) {
    case Algorithm::scvr1: return 2 * c.sample_a + 4;
    case Algorithm::scvr2: return 2 * c.sample_a + 2 * c.sample_b + 2;
    case Algorithm::minibatch_v1:
    case Algorithm::minibatch_v2: return 2 * c.sample_a + 2 * c.sample_b + 2 * c.batch_b;
    case Algorithm::svrg: return 2 * m + 2;
    case Algorithm::sgd: return m + 2;
    case Algorithm::gd: return 2 * m + n;
  }
  return 0;
}

/// Ledger total of an untruncated run.
inline std::uint64_t planned_queries(const OptimizerConfig& c, std::size_t n, std::size_t m) {
  return c.epochs_s * (snapshot_cost(c.variant, n, m) + c.inner_k * step_cost(c, n, m));
}

namespace detail {

template <CompositionProblem P>
TraceRecord make_record(const P& p, const Point& x, std::size_t epoch, std::size_t iter,
                        const QueryLedger& ledger, bool wall_clock,
                        std::chrono::steady_clock::time_point start) {
  QueryLedger shadow;
  TraceRecord r;
  r.epoch = epoch;
  r.inner_iter = iter;
  r.total_queries = ledger.total();
  r.grad_norm_sq = full_gradient(p, x, shadow).squaredNorm();
  r.objective = objective(p, x, shadow);
  if (wall_clock)
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                    .count();
  return r;
}

inline bool diverged(const Point& x) {
  for (Eigen::Index l = 0; l < x.size(); ++l)
    if (!std::isfinite(x[l]) || std::abs(x[l]) > kDivergenceThreshold) return true;
  return false;
}

/// One inner-step direction for the configured variant.
template <CompositionProblem P>
Point direction(const P& p, const OptimizerConfig& c, const Point& x, const EpochSnapshot& snap,
                SampleStream& rng, QueryLedger& ledger) {
  const std::size_t n = p.outer_count();
  const std::size_t m = p.inner_count();
  switch (c.variant) {
    case Algorithm::scvr1: {
      const IndexBatch a_batch = sample_indices(rng, m, c.sample_a);
      const InnerValue g_hat = estimate_inner(p, x, snap, a_batch, ledger);
      const std::size_t i = rng.uniform_index(n);
      const std::size_t j = rng.uniform_index(m);
      return grad_scvr1(p, x, snap, g_hat, i, j, ledger).direction;
    }
    case Algorithm::scvr2: {
      const IndexBatch a_batch = sample_indices(rng, m, c.sample_a);
      const IndexBatch b_batch = sample_indices(rng, m, c.sample_b);
      const InnerValue g_hat = estimate_inner(p, x, snap, a_batch, ledger);
      const InnerJacobian jac_hat = estimate_inner_jacobian(p, x, snap, b_batch, ledger);
      const std::size_t i = rng.uniform_index(n);
      return grad_scvr2(p, snap, g_hat, jac_hat, i, ledger).direction;
    }
    case Algorithm::minibatch_v1: {
      const IndexBatch a_batch = sample_indices(rng, m, c.sample_a);
      const IndexBatch b_batch = sample_indices(rng, m, c.sample_b);
      const InnerValue g_hat = estimate_inner(p, x, snap, a_batch, ledger);
      const InnerJacobian jac_hat = estimate_inner_jacobian(p, x, snap, b_batch, ledger);
      const IndexBatch outer = sample_indices(rng, n, c.batch_b);
      return grad_minibatch_v1(p, snap, g_hat, jac_hat, outer, ledger).direction;
    }
    case Algorithm::minibatch_v2: {
      const IndexBatch a_batch = sample_indices(rng, m, c.sample_a);
      const IndexBatch b_batch = sample_indices(rng, m, c.sample_b);
      const InnerValue g_hat = estimate_inner(p, x, snap, a_batch, ledger);
      const IndexBatch outer = sample_indices(rng, n, c.batch_b);
      return grad_minibatch_v2(p, x, snap, g_hat, b_batch, outer, ledger).direction;
    }
    case Algorithm::svrg: {
      const InnerValue w = inner_full(p, x, ledger);
      const InnerJacobian jac = inner_jacobian_full(p, x, ledger);
      const std::size_t i = rng.uniform_index(n);
      const Eigen::VectorXd gf = query_outer_gradient(p, i, w, ledger);
      const Eigen::VectorXd gf_snap = query_outer_gradient(p, i, snap.g_tilde, ledger);
      return jac.transpose() * gf - snap.jac_tilde.transpose() * gf_snap + snap.grad_tilde;
    }
    case Algorithm::sgd: {
      const std::size_t i = rng.uniform_index(n);
      const std::size_t j = rng.uniform_index(m);
      const InnerValue w = inner_full(p, x, ledger);
      const InnerJacobian jac_j = query_inner_jacobian(p, j, x, ledger);
      return jac_j.transpose() * query_outer_gradient(p, i, w, ledger);
    }
    case Algorithm::gd: return full_gradient(p, x, ledger);
  }
  throw ArgumentError("unknown algorithm");
}

}  // namespace detail

/// Runs the configured method from x0.
template <CompositionProblem P>
OptResult run(const P& p, const OptimizerConfig& c, const Point& x0) {
  c.validate();
  check_point(p, x0);
  const std::size_t n = p.outer_count();
  const std::size_t m = p.inner_count();
  const std::uint64_t snap_cost = snapshot_cost(c.variant, n, m);
  const std::uint64_t inner_cost = step_cost(c, n, m);
  const auto start = std::chrono::steady_clock::now();

  SampleStream rng(c.seed);
  OptResult res;
  res.s_star = rng.uniform_index(c.epochs_s);
  res.k_star = rng.uniform_index(c.inner_k);

  Point x = x0;
  bool have_out = false;
  bool last_recorded = true;
  res.trace.push_back(detail::make_record(p, x, 0, 0, res.ledger, c.wall_clock, start));
  const auto fits = [&](std::uint64_t cost) {
    return c.budget == 0 || res.ledger.total() + cost <= c.budget;
  };

  EpochSnapshot snap;
  for (std::size_t s = 0; s < c.epochs_s && !res.truncated; ++s) {
    if (uses_snapshot(c.variant)) {
      if (!fits(snap_cost)) {
        res.truncated = true;
        break;
      }
      snap = make_snapshot(p, x, res.ledger);
    }
    for (std::size_t k = 0; k < c.inner_k; ++k) {
      if (!fits(inner_cost)) {
        res.truncated = true;
        break;
      }
      if (s == res.s_star && k == res.k_star) {
        res.x_out = x;
        have_out = true;
      }
      const Point dir = detail::direction(p, c, x, snap, rng, res.ledger);
      x -= c.eta * dir;
      ++res.steps;
      last_recorded = false;
      if (detail::diverged(x)) {
        throw DivergenceError(std::string(to_string(c.variant)) + ": iterate diverged at epoch " +
                                  std::to_string(s + 1) + ", step " + std::to_string(k + 1),
                              std::move(res.trace), res.ledger);
      }
      if (res.steps % c.record_every == 0) {
        res.trace.push_back(detail::make_record(p, x, s, k + 1, res.ledger, c.wall_clock, start));
        last_recorded = true;
      }
    }
  }
  if (!last_recorded) {
    const std::size_t s = res.steps == 0 ? 0 : (res.steps - 1) / c.inner_k;
    const std::size_t k = res.steps == 0 ? 0 : (res.steps - 1) % c.inner_k + 1;
    res.trace.push_back(detail::make_record(p, x, s, k, res.ledger, c.wall_clock, start));
  }
  res.x_last = x;
  if (!have_out) res.x_out = x;
  res.guard_events = guard_events(p);
  return res;
}

template <CompositionProblem P>
OptResult run_scvr1(const P& p, OptimizerConfig c, const Point& x0) {
  c.variant = Algorithm::scvr1;
  return run(p, c, x0);
}

template <CompositionProblem P>
OptResult run_scvr2(const P& p, OptimizerConfig c, const Point& x0) {
  c.variant = Algorithm::scvr2;
  return run(p, c, x0);
}

/// Mini-batch SCVR; `c.variant` selects minibatch_v1 (default) or minibatch_v2.
template <CompositionProblem P>
OptResult run_minibatch(const P& p, OptimizerConfig c, const Point& x0) {
  if (c.variant != Algorithm::minibatch_v2) c.variant = Algorithm::minibatch_v1;
  return run(p, c, x0);
}

template <CompositionProblem P>
OptResult run_svrg(const P& p, OptimizerConfig c, const Point& x0) {
  c.variant = Algorithm::svrg;
  return run(p, c, x0);
}

template <CompositionProblem P>
OptResult run_sgd(const P& p, OptimizerConfig c, const Point& x0) {
  c.variant = Algorithm::sgd;
  return run(p, c, x0);
}

template <CompositionProblem P>
OptResult run_gd(const P& p, OptimizerConfig c, const Point& x0) {
  c.variant = Algorithm::gd;
  return run(p, c, x0);
}

}  // namespace scvr
