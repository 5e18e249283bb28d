#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

#include "scvr/harness/config.hpp"
#include "scvr/harness/embed.hpp"
#include "scvr/harness/experiment.hpp"
#include "scvr/harness/report.hpp"
#include "scvr/harness/verify.hpp"

using namespace scvr;
using namespace scvr::harness;
using nlohmann::json;

namespace {

json small_config() {
  return json::parse(R"({
    "problem": {"kind": "nonconvex_synthetic", "n": 6, "m": 5, "dim_x": 3, "dim_w": 2, "seed": 3},
    "algorithms": [{"name": "scvr1", "eta": 0.1, "inner": 4, "A": 2},
                   {"name": "svrg", "eta": 0.1, "inner": 4}],
    "budget": 2000,
    "record_every": 2
  })");
}

std::string config_error_message(const json& j) {
  try {
    const ExperimentConfig cfg = parse_config(j);
    const AnyProblem p = build_problem(cfg.problem);
    run_experiment(cfg, p);
  } catch (const CliError& e) {
    EXPECT_EQ(e.code(), "CONFIG");
    EXPECT_EQ(e.exit_code(), 2);
    return e.what();
  }
  ADD_FAILURE() << "expected a config error";
  return {};
}

std::string csv_of(const json& j) {
  const ExperimentConfig cfg = parse_config(j);
  std::ostringstream out;
  write_trace_csv(out, run_experiment(cfg, build_problem(cfg.problem)));
  return out.str();
}

}  // namespace

TEST(Config, ErrorsNameTheField) {
  json j = small_config();
  j["algorithms"][0]["eta"] = -1;
  EXPECT_NE(config_error_message(j).find("algorithms[1].eta"), std::string::npos);

  j = small_config();
  j["problem"]["kind"] = "mystery";
  EXPECT_NE(config_error_message(j).find("problem.kind"), std::string::npos);

  j = small_config();
  j["algorithms"][1]["name"] = "adam";
  EXPECT_NE(config_error_message(j).find("algorithms[2].name"), std::string::npos);

  j = small_config();
  j["colour"] = "blue";
  EXPECT_NE(config_error_message(j).find("colour"), std::string::npos);

  j = small_config();
  j["algorithms"][1]["eta"] = "suggested";
  EXPECT_NE(config_error_message(j).find("suggested"), std::string::npos);
}

TEST(Config, BudgetBelowSnapshotRejected) {
  json j = small_config();
  j["budget"] = 10;  // snapshot costs 2 * 5 + 6 = 16
  EXPECT_NE(config_error_message(j).find("snapshot cost 16"), std::string::npos);
}

TEST(Config, SuggestedValuesResolve) {
  json j = small_config();
  j["algorithms"] = json::parse(R"([{"name": "scvr2", "eta": "suggested", "inner": "suggested",
                                     "A": "suggested", "B": "suggested"}])");
  const ExperimentConfig cfg = parse_config(j);
  const auto p = std::get<NonconvexSyntheticProblem>(build_problem(cfg.problem));
  const OptimizerConfig c = resolve(cfg.algorithms[0], cfg, p);
  const TheoryParams t = suggest_parameters(6, 5, p.constants(), TheoryAlgorithm::scvr2);
  EXPECT_EQ(c.eta, t.eta);
  EXPECT_EQ(c.inner_k, t.cap_k);
  EXPECT_EQ(c.sample_a, t.sample_a);
  EXPECT_EQ(c.sample_b, t.sample_b);
}

TEST(Config, EpochsFollowBudget) {
  const ExperimentConfig cfg = parse_config(small_config());
  const auto p = std::get<NonconvexSyntheticProblem>(build_problem(cfg.problem));
  const OptimizerConfig c = resolve(cfg.algorithms[0], cfg, p);
  // per epoch 16 + 4 * 8 = 48, so 42 epochs cover 2000 queries
  EXPECT_EQ(c.epochs_s, 42u);
  EXPECT_EQ(c.budget, 2000u);
}

TEST(Trace, CsvHeaderAndOrdering) {
  const std::string csv = csv_of(small_config());
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "algorithm,epoch,inner_iter,total_queries,grad_norm_sq,objective,wall_ms");
  std::string prev_label;
  long prev_q = -1;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    const std::string label = line.substr(0, line.find(','));
    std::istringstream fields(line);
    std::string f;
    for (int k = 0; k < 4; ++k) std::getline(fields, f, ',');
    const long q = std::stol(f);
    if (label == prev_label) EXPECT_GE(q, prev_q);
    else EXPECT_LT(prev_label, label);
    EXPECT_LE(q, 2000);
    prev_label = label;
    prev_q = q;
  }
  EXPECT_GT(rows, 10u);
  EXPECT_EQ(prev_label, "svrg");
}

TEST(Trace, ByteIdenticalAcrossRuns) {
  EXPECT_EQ(csv_of(small_config()), csv_of(small_config()));
}

TEST(Trace, DivergenceMapsToExitFour) {
  json j = small_config();
  j["problem"]["kind"] = "affine_quadratic";
  j["algorithms"] = json::parse(R"([{"name": "gd", "eta": 100, "inner": 50}])");
  j["init"] = {{"kind", "normal"}, {"seed", 2}};
  const ExperimentConfig cfg = parse_config(j);
  try {
    run_experiment(cfg, build_problem(cfg.problem));
    FAIL() << "expected divergence";
  } catch (const CliError& e) {
    EXPECT_EQ(e.exit_code(), 4);
    EXPECT_EQ(e.line().rfind("error[DIVERGENCE]: gd:", 0), 0u);
  }
}

TEST(Sweep, KeepsBestEtaPerAlgorithm) {
  json j = small_config();
  j["eta_grid"] = {0.0, 0.05, 0.2, 1e15};
  const ExperimentConfig cfg = parse_config(j);
  const SweepResult r = run_sweep(cfg, build_problem(cfg.problem));
  ASSERT_EQ(r.best.size(), 2u);
  ASSERT_EQ(r.entries.size(), 8u);
  for (const auto& best : r.best) {
    double smallest = std::numeric_limits<double>::infinity();
    for (const auto& e : r.entries)
      if (e.label == best.label && !e.diverged) smallest = std::min(smallest, e.final_grad_norm_sq);
    EXPECT_EQ(best.result.trace.back().grad_norm_sq, smallest);
    EXPECT_NE(best.config.eta, 0.0);
  }
  EXPECT_TRUE(r.entries[3].diverged);
}

TEST(Report, ExponentsForSquareProblem) {
  const json r = params_report(10000, 10000, {1, 1, 1, 1, 1, false}, 1);
  EXPECT_DOUBLE_EQ(r["alpha"].get<double>(), 0.4);
  EXPECT_DOUBLE_EQ(r["exponents"]["scvr"].get<double>(), 0.8);
  EXPECT_NEAR(r["exponents"]["svrg"].get<double>(), 1.0, 1e-12);
  EXPECT_EQ(r["recommendation"], "use SCVR");
  EXPECT_TRUE(r["algorithms"]["scvr1"]["premise_holds"].get<bool>());
}

TEST(Report, SingleInnerComponentPrefersSvrg) {
  EXPECT_EQ(params_report(1000, 1, {1, 1, 1, 1, 1, false}, 1)["recommendation"], "use SVRG");
}

TEST(Report, SingleOuterComponentIsConfigError) {
  try {
    params_report(1, 10, {1, 1, 1, 1, 1, false}, 1);
    FAIL() << "expected CliError";
  } catch (const CliError& e) {
    EXPECT_EQ(e.exit_code(), 2);
  }
}

TEST(Verify, SuitePasses) {
  for (const auto& r : run_invariant_suite()) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
}

TEST(Verify, InjectedFaultIsCaught) {
  bool failed = false;
  for (const auto& r : run_invariant_suite(Fault::inner_charge)) failed |= !r.passed;
  EXPECT_TRUE(failed);
}

TEST(Embed, SmallRunIsFinite) {
  std::vector<std::size_t> labels;
  const Dataset data = gaussian_clusters(60, 10, 3, 1, 3.0, &labels);
  SnePipeline pipe;
  pipe.pca = 5;
  const SneProblem p = build_sne_pipeline(data, pipe);
  OptimizerConfig c = default_embed_config(60);
  c.epochs_s = 3;
  const OptResult r = run(p, c, random_point(p.input_dim(), 1.25, 0));
  const Eigen::MatrixXd y = embedding_matrix(p, r.x_last);
  EXPECT_EQ(y.rows(), 60);
  EXPECT_EQ(y.cols(), 2);
  EXPECT_TRUE(y.allFinite());
}

TEST(Embed, MissingFileIsDataError) {
  try {
    load_dataset("/nonexistent/points.csv");
    FAIL() << "expected CliError";
  } catch (const CliError& e) {
    EXPECT_EQ(e.code(), "DATA");
    EXPECT_EQ(e.exit_code(), 3);
  }
}

TEST(Embed, AutoSigmaIsMedianBandwidth) {
  const Dataset data = gaussian_clusters(30, 4, 3, 2, 2.0);
  std::vector<double> s = perplexity_sigma(data, 10.0);
  std::sort(s.begin(), s.end());
  EXPECT_EQ(auto_sigma(data, 10.0), s[15]);
  EXPECT_EQ(auto_sigma(data, 100.0), auto_sigma(data, 29.0));  // clamped to n - 1
}

TEST(Output, EnvironmentDirectoryPrefixesRelativePaths) {
  ::setenv(kOutputDirEnv, "/tmp/scvr_out", 1);
  EXPECT_EQ(resolve_output("trace.csv", "x.csv"), "/tmp/scvr_out/trace.csv");
  EXPECT_EQ(resolve_output("", "x.csv"), "/tmp/scvr_out/x.csv");
  EXPECT_EQ(resolve_output("/abs/trace.csv", "x.csv"), "/abs/trace.csv");
  ::unsetenv(kOutputDirEnv);
  EXPECT_EQ(resolve_output("trace.csv", "x.csv"), "trace.csv");
}
