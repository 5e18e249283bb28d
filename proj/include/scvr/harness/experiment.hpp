#pragma once

// Builds problems from a config, runs the listed algorithms and writes
// trace CSVs.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "scvr/harness/config.hpp"
#include "scvr/harness/embed.hpp"
#include "scvr/optimizers.hpp"
#include "scvr/problems/synthetic.hpp"
#include "scvr/theory.hpp"

namespace scvr::harness {

using AnyProblem =
    std::variant<AffineQuadraticProblem, NonconvexSyntheticProblem, CurvedInnerProblem, SneProblem>;

inline AnyProblem build_problem(const ProblemSpec& spec) {
  try {
    if (spec.kind == "sne") {
      SnePipeline pipe;
      pipe.normalize = spec.normalize;
      pipe.pca = spec.pca;
      pipe.sigma = spec.sigma;
      pipe.perplexity = spec.perplexity;
      pipe.embed_dim = spec.embed_dim;
      return build_sne_pipeline(load_dataset(spec.path), pipe);
    }
    if (spec.kind == "sne_file") {
      SneProblem p = sne_from_json(load_json(spec.path));
      p.set_constants(estimate_sne_constants(p, 11));
      return p;
    }
    SyntheticShape shape{spec.n, spec.m, spec.dim_x, spec.dim_w, spec.seed, spec.target_scale};
    if (spec.kind == "affine_quadratic") return AffineQuadraticProblem::random(shape);
    if (spec.kind == "curved_inner") return CurvedInnerProblem::random(shape, spec.curvature);
    if (spec.condition >= 1.0)
      return NonconvexSyntheticProblem::conditioned(shape, spec.condition, spec.heterogeneity);
    return NonconvexSyntheticProblem::random(shape);
  } catch (const ConstructionError& e) {
    throw data_error(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw data_error("'" + spec.path + "': " + e.what());
  } catch (const ArgumentError& e) {
    throw config_error(e.what());
  }
}

inline bool is_sne(const AnyProblem& p) { return std::holds_alternative<SneProblem>(p); }

inline Point initial_point(const AnyProblem& problem, const InitSpec& init) {
  const std::size_t dim = std::visit([](const auto& p) { return p.input_dim(); }, problem);
  std::string kind = init.kind;
  if (kind.empty()) kind = is_sne(problem) ? "normal" : "zeros";
  if (kind == "zeros") return Point::Zero(static_cast<Eigen::Index>(dim));
  return random_point(dim, init.scale, init.seed);
}

inline TheoryAlgorithm theory_algorithm(Algorithm a) {
  switch (a) {
    case Algorithm::scvr1: return TheoryAlgorithm::scvr1;
    case Algorithm::scvr2: return TheoryAlgorithm::scvr2;
    default: return TheoryAlgorithm::minibatch;
  }
}

/// Turns an algorithm spec into a concrete optimizer config for `problem`.
template <CompositionProblem P>
OptimizerConfig resolve(const AlgorithmSpec& spec, const ExperimentConfig& cfg, const P& p) {
  OptimizerConfig c;
  c.variant = spec.algorithm;
  c.eta = spec.eta.value;
  c.inner_k = static_cast<std::size_t>(spec.inner.value);
  c.sample_a = static_cast<std::size_t>(spec.sample_a.value);
  c.sample_b = static_cast<std::size_t>(spec.sample_b.value);
  c.batch_b = spec.batch_b;
  c.seed = spec.seed;
  c.budget = cfg.budget;
  c.record_every = cfg.record_every;
  c.wall_clock = cfg.wall_clock;
  if (spec.eta.suggested || spec.inner.suggested || spec.sample_a.suggested ||
      spec.sample_b.suggested) {
    TheoryParams t;
    try {
      t = suggest_parameters(p.outer_count(), p.inner_count(), p.constants(),
                             theory_algorithm(spec.algorithm), spec.batch_b);
    } catch (const ArgumentError& e) {
      throw config_error(spec.label + ": cannot suggest parameters: " + e.what());
    }
    if (spec.eta.suggested) c.eta = t.eta;
    if (spec.inner.suggested) c.inner_k = t.cap_k;
    if (spec.sample_a.suggested) c.sample_a = t.sample_a;
    if (spec.sample_b.suggested) c.sample_b = t.sample_b;
  }
  const std::size_t n = p.outer_count();
  const std::size_t m = p.inner_count();
  const std::uint64_t snap = snapshot_cost(c.variant, n, m);
  const std::uint64_t step = step_cost(c, n, m);
  if (cfg.budget > 0) {
    if (uses_snapshot(c.variant) && cfg.budget <= snap)
      throw config_error("budget " + std::to_string(cfg.budget) + " does not exceed the " +
                         spec.label + " snapshot cost " + std::to_string(snap));
    if (!uses_snapshot(c.variant) && cfg.budget < step)
      throw config_error("budget " + std::to_string(cfg.budget) + " is below one " + spec.label +
                         " step (" + std::to_string(step) + " queries)");
  }
  if (spec.epochs > 0) {
    c.epochs_s = spec.epochs;
  } else if (cfg.budget > 0) {
    const std::uint64_t per_epoch = snap + c.inner_k * step;
    c.epochs_s = static_cast<std::size_t>((cfg.budget + per_epoch - 1) / per_epoch);
  } else {
    c.epochs_s = 1;
  }
  try {
    c.validate();
  } catch (const ArgumentError& e) {
    throw config_error(spec.label + ": " + e.what());
  }
  return c;
}

struct AlgorithmRun {
  std::string label;
  OptimizerConfig config;
  OptResult result;
};

/// Runs one configured optimizer, mapping failures to CLI errors.
template <CompositionProblem P>
OptResult run_checked(const P& p, const OptimizerConfig& c, const Point& x0,
                      const std::string& label) {
  try {
    return run(p, c, x0);
  } catch (const DivergenceError& e) {
    throw divergence_error(label + ": " + e.what());
  } catch (const EvaluationError& e) {
    throw divergence_error(label + ": " + e.what());
  }
}

inline std::vector<AlgorithmRun> run_experiment(const ExperimentConfig& cfg,
                                                const AnyProblem& problem) {
  const Point x0 = initial_point(problem, cfg.init);
  return std::visit(
      [&](const auto& p) {
        std::vector<AlgorithmRun> runs;
        for (const auto& spec : cfg.algorithms) resolve(spec, cfg, p);  // validate all first
        for (const auto& spec : cfg.algorithms) {
          const OptimizerConfig c = resolve(spec, cfg, p);
          runs.push_back({spec.label, c, run_checked(p, c, x0, spec.label)});
        }
        return runs;
      },
      problem);
}

inline void write_trace_csv(std::ostream& out, const std::vector<AlgorithmRun>& runs) {
  struct Row {
    const std::string* label;
    const TraceRecord* rec;
  };
  std::vector<Row> rows;
  for (const auto& r : runs)
    for (const auto& rec : r.result.trace) rows.push_back({&r.label, &rec});
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (*a.label != *b.label) return *a.label < *b.label;
    return a.rec->total_queries < b.rec->total_queries;
  });
  out << "algorithm,epoch,inner_iter,total_queries,grad_norm_sq,objective,wall_ms\n";
  for (const auto& row : rows) {
    const TraceRecord& t = *row.rec;
    out << *row.label << ',' << t.epoch << ',' << t.inner_iter << ',' << t.total_queries << ','
        << scvr::detail::format_double(t.grad_norm_sq) << ','
        << scvr::detail::format_double(t.objective) << ','
        << scvr::detail::format_double(t.wall_ms) << '\n';
  }
}

inline void save_trace_csv(const std::string& path, const std::vector<AlgorithmRun>& runs) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write '" + path + "'");
  write_trace_csv(out, runs);
}

struct SweepEntry {
  std::string label;
  double eta = 0.0;
  double final_grad_norm_sq = std::numeric_limits<double>::infinity();
  std::uint64_t total_queries = 0;
  bool diverged = false;
};

struct SweepResult {
  std::vector<SweepEntry> entries;
  std::vector<AlgorithmRun> best;  // best eta per algorithm
};

/// Runs every algorithm at every eta of the grid and keeps, per algorithm,
/// the run with the smallest final ||grad f||^2. Diverged runs are reported
/// and skipped.
inline SweepResult run_sweep(const ExperimentConfig& cfg, const AnyProblem& problem) {
  if (cfg.eta_grid.empty()) throw config_error("sweep needs a non-empty 'eta_grid'");
  const Point x0 = initial_point(problem, cfg.init);
  return std::visit(
      [&](const auto& p) {
        SweepResult out;
        for (const auto& spec : cfg.algorithms) resolve(spec, cfg, p);
        for (const auto& spec : cfg.algorithms) {
          std::optional<AlgorithmRun> best;
          for (double eta : cfg.eta_grid) {
            AlgorithmSpec s = spec;
            s.eta = {eta, false};
            const OptimizerConfig c = resolve(s, cfg, p);
            SweepEntry e{spec.label, eta};
            try {
              OptResult r = run(p, c, x0);
              e.final_grad_norm_sq = r.trace.back().grad_norm_sq;
              e.total_queries = r.ledger.total();
              if (!best || e.final_grad_norm_sq < best->result.trace.back().grad_norm_sq)
                best = AlgorithmRun{spec.label, c, std::move(r)};
            } catch (const DivergenceError& err) {
              e.diverged = true;
              e.total_queries = err.ledger().total();
            } catch (const EvaluationError&) {
              e.diverged = true;
            }
            out.entries.push_back(e);
          }
          if (!best) throw divergence_error(spec.label + ": diverged at every eta of the grid");
          out.best.push_back(std::move(*best));
        }
        return out;
      },
      problem);
}

inline void write_sweep_summary(std::ostream& out, const SweepResult& r) {
  out << "algorithm,eta,final_grad_norm_sq,total_queries,status\n";
  for (const auto& e : r.entries)
    out << e.label << ',' << scvr::detail::format_double(e.eta) << ','
        << (e.diverged ? std::string("nan") : scvr::detail::format_double(e.final_grad_norm_sq))
        << ',' << e.total_queries << ',' << (e.diverged ? "diverged" : "ok") << '\n';
}

}  // namespace scvr::harness
