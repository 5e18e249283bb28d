#pragma once

// Parameter report behind `scvr check-params`.

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "scvr/harness/common.hpp"
#include "scvr/theory.hpp"

namespace scvr::harness {

inline nlohmann::json params_report(std::size_t n, std::size_t m, const SmoothnessConstants& c,
                                    std::size_t b, double scale = 1.0) {
  using nlohmann::json;
  json out;
  ExponentReport exps;
  try {
    c.validate();
    exps = predict_query_complexity(n, m, b);
  } catch (const ArgumentError& e) {
    throw config_error(e.what());
  }
  out["n"] = n;
  out["m"] = m;
  out["b"] = b;
  out["m0"] = exps.m0;
  out["b0"] = exps.b0;
  out["alpha"] = exps.alpha;
  out["constants"] = {{"b_g", c.b_g}, {"l_g", c.l_g}, {"b_f", c.b_f},
                      {"l_f_outer", c.l_f_outer}, {"l_f", c.l_f}};
  out["exponents"] = {{"scvr", exps.scvr},
                      {"svrg", exps.svrg},
                      {"minibatch_parallel_outer", exps.minibatch_parallel_outer},
                      {"minibatch_all_parallel", exps.minibatch_all_parallel},
                      {"minibatch_nonparallel", exps.minibatch_nonparallel}};
  out["recommendation"] = exps.recommendation;
  json algs = json::object();
  for (auto alg : {TheoryAlgorithm::scvr1, TheoryAlgorithm::scvr2, TheoryAlgorithm::minibatch}) {
    const TheoryParams t = suggest_parameters(n, m, c, alg, b, scale);
    const RecursionDiagnostics d = recursion_for(alg, t, c);
    algs[to_string(alg)] = {{"A", t.sample_a},
                            {"B", t.sample_b},
                            {"b", t.batch_b},
                            {"A_real", t.sample_a_real},
                            {"B_real", t.sample_b_real},
                            {"h", t.h},
                            {"d", t.d},
                            {"eta", t.eta},
                            {"K", t.cap_k},
                            {"K_real", t.cap_k_real},
                            {"K_rate", t.cap_k_rate},
                            {"c0", d.c0},
                            {"c0h", d.c0h},
                            {"u_min", d.u_min},
                            {"u_max", d.u_max},
                            {"premise_holds", d.premise_holds}};
  }
  out["algorithms"] = algs;
  return out;
}

}  // namespace scvr::harness
