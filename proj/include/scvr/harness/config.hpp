#pragma once

// Experiment configuration (JSON).
//
// {
//   "problem": {"kind": "nonconvex_synthetic", "n": 100, "m": 100, "dim_x": 10, "dim_w": 5,
//               "seed": 7, "target_scale": 1.0},
//   "init": {"kind": "zeros" | "normal", "scale": 1.0, "seed": 3},
//   "algorithms": [{"name": "scvr1", "eta": 0.1, "inner": 50, "A": 4}, {"name": "svrg"}],
//   "defaults": {"eta": 0.05, "inner": 20},
//   "budget": 500000, "record_every": 10, "seed": 1, "output": "trace.csv",
//   "eta_grid": [0.01, 0.03, 0.1]
// }
//
// Problem kinds: affine_quadratic, nonconvex_synthetic, curved_inner (same
// shape fields, curved_inner adds "curvature", nonconvex_synthetic accepts
// "condition" and "heterogeneity" for the shared-matrix generator), sne ("data": CSV path,
// "sigma": number | array | "auto", "perplexity", "embed_dim", "pca", "normalize") and
// sne_file ("path": JSON problem file).
//
// Algorithm fields: name, label, eta, epochs, inner, A, B, b, seed. "eta",
// "inner", "A" and "B" also accept "suggested" (theory suggestion from the
// problem constants; scvr1, scvr2 and mini-batch only). Missing "epochs"
// with a budget means "as many epochs as the budget allows". Unknown keys
// are rejected.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scvr/harness/common.hpp"
#include "scvr/optimizers.hpp"

namespace scvr::harness {

using nlohmann::json;

struct ProblemSpec {
  std::string kind = "nonconvex_synthetic";
  std::size_t n = 10;
  std::size_t m = 10;
  std::size_t dim_x = 4;
  std::size_t dim_w = 3;
  std::uint64_t seed = 1;
  double target_scale = 1.0;
  double curvature = 0.5;
  double condition = 0.0;      // nonconvex_synthetic: > 0 selects the shared-matrix generator
  double heterogeneity = 1.0;
  // sne
  std::string path;              // CSV data (sne) or JSON problem (sne_file)
  std::vector<double> sigma;     // empty = per-sample bandwidths from perplexity
  double perplexity = 10.0;
  std::size_t embed_dim = 2;
  std::size_t pca = 30;
  bool normalize = true;
};

struct InitSpec {
  std::string kind;  // "zeros" | "normal"; empty = normal for SNE, zeros otherwise
  double scale = 1.0;
  std::uint64_t seed = 0;
};

/// A numeric field that may be left to the theory suggestion.
struct Tunable {
  double value = 0.0;
  bool suggested = false;
};

struct AlgorithmSpec {
  std::string label;
  Algorithm algorithm = Algorithm::scvr1;
  Tunable eta{0.01, false};
  Tunable inner{1, false};
  Tunable sample_a{1, false};
  Tunable sample_b{1, false};
  std::size_t batch_b = 1;
  std::size_t epochs = 0;  // 0 = derive from budget (1 without a budget)
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  ProblemSpec problem;
  InitSpec init;
  std::vector<AlgorithmSpec> algorithms;
  std::uint64_t budget = 0;
  std::size_t record_every = 1;
  std::uint64_t seed = 1;
  std::string output;
  std::vector<double> eta_grid;
  bool wall_clock = false;
};

namespace detail {

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                           const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw config_error("unknown field '" + where + it.key() + "'");
}

inline const json& require_object(const json& j, const std::string& name) {
  if (!j.is_object()) throw config_error("field '" + name + "' must be an object");
  return j;
}

inline double number_field(const json& obj, const std::string& key, const std::string& where,
                           double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw config_error("field '" + where + key + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw config_error("field '" + where + key + "' must be finite");
  return d;
}

inline std::uint64_t count_field(const json& obj, const std::string& key, const std::string& where,
                                 std::uint64_t fallback, std::uint64_t min_value = 1) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  const auto fail = [&] {
    return config_error("field '" + where + key + "' must be an integer >= " +
                        std::to_string(min_value));
  };
  if (!v.is_number()) throw fail();
  const double d = v.get<double>();
  if (!(d >= static_cast<double>(min_value)) || d != std::floor(d) || d > 9.0e18) throw fail();
  return v.is_number_integer() ? v.get<std::uint64_t>() : static_cast<std::uint64_t>(d);
}

inline std::string string_field(const json& obj, const std::string& key, const std::string& where,
                                const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) throw config_error("field '" + where + key + "' must be a string");
  return v.get<std::string>();
}

inline Tunable tunable_field(const json& obj, const std::string& key, const std::string& where,
                             Tunable fallback, bool integral) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (v.is_string() && v.get<std::string>() == "suggested") return {0.0, true};
  if (integral) return {static_cast<double>(count_field(obj, key, where, 1)), false};
  const double d = number_field(obj, key, where, 0.0);
  if (d < 0) throw config_error("field '" + where + key + "' must be >= 0");
  return {d, false};
}

inline const std::set<std::string>& algorithm_keys() {
  static const std::set<std::string> keys{"name", "label", "eta", "epochs", "inner",
                                          "A",    "B",     "b",   "seed"};
  return keys;
}

inline void apply_algorithm_fields(const json& obj, const std::string& where, AlgorithmSpec& a) {
  reject_unknown(obj, algorithm_keys(), where);
  a.eta = tunable_field(obj, "eta", where, a.eta, false);
  a.inner = tunable_field(obj, "inner", where, a.inner, true);
  a.sample_a = tunable_field(obj, "A", where, a.sample_a, true);
  a.sample_b = tunable_field(obj, "B", where, a.sample_b, true);
  a.batch_b = count_field(obj, "b", where, a.batch_b);
  a.epochs = count_field(obj, "epochs", where, a.epochs);
  a.seed = count_field(obj, "seed", where, a.seed, 0);
}

inline ProblemSpec parse_problem(const json& j) {
  require_object(j, "problem");
  ProblemSpec p;
  const std::string w = "problem.";
  p.kind = string_field(j, "kind", w, "");
  if (p.kind.empty()) throw config_error("field 'problem.kind' is required");
  if (p.kind == "affine_quadratic" || p.kind == "nonconvex_synthetic" || p.kind == "curved_inner") {
    reject_unknown(j,
                   {"kind", "n", "m", "dim_x", "dim_w", "seed", "target_scale", "curvature",
                    "condition", "heterogeneity"},
                   w);
    p.n = count_field(j, "n", w, p.n);
    p.m = count_field(j, "m", w, p.m);
    p.dim_x = count_field(j, "dim_x", w, p.dim_x);
    p.dim_w = count_field(j, "dim_w", w, p.dim_w);
    p.seed = count_field(j, "seed", w, p.seed, 0);
    p.target_scale = number_field(j, "target_scale", w, p.target_scale);
    p.curvature = number_field(j, "curvature", w, p.curvature);
    p.condition = number_field(j, "condition", w, p.condition);
    p.heterogeneity = number_field(j, "heterogeneity", w, p.heterogeneity);
    if (p.condition != 0.0 && p.condition < 1.0)
      throw config_error("field 'problem.condition' must be >= 1");
  } else if (p.kind == "sne") {
    reject_unknown(j, {"kind", "data", "sigma", "perplexity", "embed_dim", "pca", "normalize"}, w);
    p.path = string_field(j, "data", w, "");
    if (p.path.empty()) throw config_error("field 'problem.data' is required for kind sne");
    if (j.contains("sigma")) {
      const json& s = j.at("sigma");
      if (s.is_number()) {
        p.sigma = {s.get<double>()};
      } else if (s.is_array()) {
        for (const auto& v : s) {
          if (!v.is_number()) throw config_error("field 'problem.sigma' must hold numbers");
          p.sigma.push_back(v.get<double>());
        }
      } else if (!(s.is_string() && s.get<std::string>() == "auto")) {
        throw config_error("field 'problem.sigma' must be a number, an array or \"auto\"");
      }
      for (double v : p.sigma)
        if (!(v > 0)) throw config_error("field 'problem.sigma' must be > 0");
    }
    p.perplexity = number_field(j, "perplexity", w, p.perplexity);
    if (!(p.perplexity >= 1.0)) throw config_error("field 'problem.perplexity' must be >= 1");
    p.embed_dim = count_field(j, "embed_dim", w, p.embed_dim);
    p.pca = count_field(j, "pca", w, p.pca, 0);
    if (j.contains("normalize")) {
      if (!j.at("normalize").is_boolean())
        throw config_error("field 'problem.normalize' must be a boolean");
      p.normalize = j.at("normalize").get<bool>();
    }
  } else if (p.kind == "sne_file") {
    reject_unknown(j, {"kind", "path"}, w);
    p.path = string_field(j, "path", w, "");
    if (p.path.empty()) throw config_error("field 'problem.path' is required for kind sne_file");
  } else {
    throw config_error("field 'problem.kind' has unknown value '" + p.kind + "'");
  }
  return p;
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw config_error("config must be a JSON object");
  detail::reject_unknown(j,
                         {"problem", "init", "algorithms", "defaults", "budget", "record_every",
                          "seed", "output", "eta_grid", "wall_clock"},
                         "");
  ExperimentConfig cfg;
  if (!j.contains("problem")) throw config_error("field 'problem' is required");
  cfg.problem = detail::parse_problem(j.at("problem"));
  cfg.budget = detail::count_field(j, "budget", "", 0, 0);
  cfg.record_every = detail::count_field(j, "record_every", "", 1);
  cfg.seed = detail::count_field(j, "seed", "", 1, 0);
  cfg.output = detail::string_field(j, "output", "", "");
  if (j.contains("wall_clock")) {
    if (!j.at("wall_clock").is_boolean()) throw config_error("field 'wall_clock' must be a boolean");
    cfg.wall_clock = j.at("wall_clock").get<bool>();
  }

  if (j.contains("init")) {
    const json& in = detail::require_object(j.at("init"), "init");
    detail::reject_unknown(in, {"kind", "scale", "seed"}, "init.");
    cfg.init.kind = detail::string_field(in, "kind", "init.", "");
    if (!cfg.init.kind.empty() && cfg.init.kind != "zeros" && cfg.init.kind != "normal")
      throw config_error("field 'init.kind' must be \"zeros\" or \"normal\"");
    cfg.init.scale = detail::number_field(in, "scale", "init.", 1.0);
    cfg.init.seed = detail::count_field(in, "seed", "init.", 0, 0);
  }

  if (j.contains("eta_grid")) {
    const json& g = j.at("eta_grid");
    if (!g.is_array() || g.empty()) throw config_error("field 'eta_grid' must be a non-empty array");
    for (const auto& v : g) {
      if (!v.is_number() || !(v.get<double>() >= 0))
        throw config_error("field 'eta_grid' must hold non-negative numbers");
      cfg.eta_grid.push_back(v.get<double>());
    }
  }

  AlgorithmSpec defaults;
  defaults.seed = cfg.seed;
  if (j.contains("defaults")) {
    const json& d = detail::require_object(j.at("defaults"), "defaults");
    if (d.contains("name") || d.contains("label"))
      throw config_error("field 'defaults' may not set name or label");
    detail::apply_algorithm_fields(d, "defaults.", defaults);
  }

  if (!j.contains("algorithms") || !j.at("algorithms").is_array() || j.at("algorithms").empty())
    throw config_error("field 'algorithms' must be a non-empty array");
  std::set<std::string> labels;
  std::size_t idx = 0;
  for (const auto& entry : j.at("algorithms")) {
    ++idx;
    const std::string where = "algorithms[" + std::to_string(idx) + "].";
    AlgorithmSpec a = defaults;
    if (entry.is_string()) {
      a.label = entry.get<std::string>();
    } else {
      detail::require_object(entry, where.substr(0, where.size() - 1));
      a.label = detail::string_field(entry, "name", where, "");
      detail::apply_algorithm_fields(entry, where, a);
    }
    const auto alg = parse_algorithm(a.label);
    if (!alg) throw config_error("field '" + where + "name' has unknown algorithm '" + a.label + "'");
    a.algorithm = *alg;
    if (entry.is_object()) a.label = detail::string_field(entry, "label", where, a.label);
    if (!labels.insert(a.label).second)
      throw config_error("duplicate algorithm label '" + a.label + "' (set 'label')");
    const bool theory_ok = a.algorithm == Algorithm::scvr1 || a.algorithm == Algorithm::scvr2 ||
                           a.algorithm == Algorithm::minibatch_v1 ||
                           a.algorithm == Algorithm::minibatch_v2;
    if (!theory_ok && (a.eta.suggested || a.inner.suggested || a.sample_a.suggested ||
                       a.sample_b.suggested))
      throw config_error("'suggested' values are only available for scvr1, scvr2 and mini-batch (" +
                         where + ")");
    cfg.algorithms.push_back(a);
  }
  return cfg;
}

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw config_error("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) { return parse_config(load_json(path)); }

}  // namespace scvr::harness
