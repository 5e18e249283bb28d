// scvr: command-line front-end for the composition optimizers.
//
//   scvr run --config exp.json [--budget N] [--seed N] [--eta X] [--output trace.csv]
//   scvr sweep --config exp.json [--eta-grid 0.01,0.1] [--summary sweep.csv]
//   scvr check-params --n 10000 --m 10000 [--b 8] [--bg 1 --lg 1 --bf 1 --lF 1 --lf 1]
//   scvr verify [--inject-fault inner-charge]
//   scvr embed --data points.csv [--sigma auto] [--perplexity 10] [--dim 2] [--output coords.csv]
//
// Errors go to stderr as one line "error[CODE]: message". Exit codes:
// 0 ok, 1 verification failure, 2 configuration, 3 data, 4 divergence,
// 5 internal.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "scvr/harness/common.hpp"
#include "scvr/harness/config.hpp"
#include "scvr/harness/embed.hpp"
#include "scvr/harness/experiment.hpp"
#include "scvr/harness/report.hpp"
#include "scvr/harness/verify.hpp"

namespace h = scvr::harness;

namespace {

struct RunFlags {
  std::string config;
  std::optional<std::uint64_t> budget;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> record_every;
  std::optional<double> eta;
  std::string output;
  bool wall_clock = false;
};

nlohmann::json apply_overrides(nlohmann::json j, const RunFlags& f) {
  if (!j.is_object()) throw h::config_error("config must be a JSON object");
  if (f.budget) j["budget"] = *f.budget;
  if (f.seed) j["seed"] = *f.seed;
  if (f.record_every) j["record_every"] = *f.record_every;
  if (!f.output.empty()) j["output"] = f.output;
  if (f.wall_clock) j["wall_clock"] = true;
  if (f.eta) {
    j["defaults"]["eta"] = *f.eta;
    if (j.contains("algorithms") && j["algorithms"].is_array())
      for (auto& a : j["algorithms"])
        if (a.is_object()) a["eta"] = *f.eta;
  }
  return j;
}

void ensure_parent(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
}

int cmd_run(const RunFlags& f) {
  const h::ExperimentConfig cfg = h::parse_config(apply_overrides(h::load_json(f.config), f));
  const h::AnyProblem problem = h::build_problem(cfg.problem);
  const auto runs = h::run_experiment(cfg, problem);
  const std::string out = h::resolve_output(cfg.output, "trace.csv");
  ensure_parent(out);
  h::save_trace_csv(out, runs);
  for (const auto& r : runs)
    std::cout << r.label << ": queries=" << r.result.ledger.total()
              << " final_grad_norm_sq=" << scvr::detail::format_double(r.result.trace.back().grad_norm_sq)
              << (r.result.truncated ? " (budget reached)" : "") << '\n';
  std::cout << "trace: " << out << '\n';
  return 0;
}

int cmd_sweep(const RunFlags& f, const std::string& grid, const std::string& summary) {
  nlohmann::json j = apply_overrides(h::load_json(f.config), f);
  if (!grid.empty()) {
    nlohmann::json values = nlohmann::json::array();
    std::stringstream ss(grid);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        values.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw h::config_error("--eta-grid: '" + item + "' is not a number");
      }
    }
    j["eta_grid"] = values;
  }
  const h::ExperimentConfig cfg = h::parse_config(j);
  const h::AnyProblem problem = h::build_problem(cfg.problem);
  const h::SweepResult res = h::run_sweep(cfg, problem);
  const std::string out = h::resolve_output(cfg.output, "sweep_trace.csv");
  ensure_parent(out);
  h::save_trace_csv(out, res.best);
  const std::string sum_path = h::resolve_output(summary, "sweep_summary.csv");
  ensure_parent(sum_path);
  std::ofstream sum(sum_path);
  if (!sum) throw h::data_error("cannot write '" + sum_path + "'");
  h::write_sweep_summary(sum, res);
  for (const auto& r : res.best)
    std::cout << r.label << ": best eta=" << scvr::detail::format_double(r.config.eta)
              << " final_grad_norm_sq="
              << scvr::detail::format_double(r.result.trace.back().grad_norm_sq) << '\n';
  std::cout << "trace: " << out << "\nsummary: " << sum_path << '\n';
  return 0;
}

int cmd_check_params(std::uint64_t n, std::uint64_t m, std::uint64_t b,
                     const scvr::SmoothnessConstants& c, double scale, const std::string& output) {
  const nlohmann::json report = h::params_report(n, m, c, b, scale);
  const std::string text = report.dump(2);
  if (output.empty()) {
    std::cout << text << '\n';
  } else {
    const std::string path = h::resolve_output(output, output);
    ensure_parent(path);
    std::ofstream out(path);
    if (!out) throw h::data_error("cannot write '" + path + "'");
    out << text << '\n';
    std::cout << "report: " << path << '\n';
  }
  return 0;
}

int cmd_verify(const std::string& fault_name) {
  h::Fault fault = h::Fault::none;
  if (fault_name == "inner-charge")
    fault = h::Fault::inner_charge;
  else if (!fault_name.empty() && fault_name != "none")
    throw h::config_error("--inject-fault: unknown fault '" + fault_name + "'");
  const auto start = std::chrono::steady_clock::now();
  const auto results = h::run_invariant_suite(fault);
  bool ok = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name;
    if (!r.passed) std::cout << ": " << r.detail;
    std::cout << '\n';
    ok = ok && r.passed;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << (ok ? "all invariants hold" : "invariant failures") << " (" << secs << " s)\n";
  return ok ? 0 : 1;
}

struct EmbedFlags {
  std::string data;
  std::string sigma = "auto";
  double perplexity = 10.0;
  std::size_t dim = 2;
  std::size_t pca = 30;
  bool no_normalize = false;
  std::string algorithm = "minibatch_v1";
  std::optional<double> eta;
  std::optional<std::size_t> epochs, inner, sample_a, sample_b, batch_b;
  std::uint64_t seed = 1;
  double init_scale = 1.25;
  std::string output;
  std::string trace;
};

int cmd_embed(const EmbedFlags& f) {
  h::SnePipeline pipe;
  pipe.embed_dim = f.dim;
  pipe.pca = f.pca;
  pipe.normalize = !f.no_normalize;
  if (!(f.perplexity >= 1.0)) throw h::config_error("--perplexity must be >= 1");
  pipe.perplexity = f.perplexity;
  if (f.sigma != "auto") {
    try {
      pipe.sigma = {std::stod(f.sigma)};
    } catch (const std::exception&) {
      throw h::config_error("--sigma must be a positive number or 'auto'");
    }
    if (!(pipe.sigma[0] > 0)) throw h::config_error("--sigma must be > 0");
  }
  const auto alg = scvr::parse_algorithm(f.algorithm);
  if (!alg) throw h::config_error("--algorithm: unknown algorithm '" + f.algorithm + "'");

  const scvr::Dataset raw = h::load_dataset(f.data);
  scvr::SneProblem problem = [&] {
    try {
      return h::build_sne_pipeline(raw, pipe);
    } catch (const scvr::ConstructionError& e) {
      throw h::data_error(e.what());
    } catch (const scvr::ArgumentError& e) {
      throw h::data_error(e.what());
    }
  }();

  scvr::OptimizerConfig c = h::default_embed_config(problem.points());
  c.variant = *alg;
  c.seed = f.seed;
  if (f.eta) c.eta = *f.eta;
  if (f.epochs) c.epochs_s = *f.epochs;
  if (f.inner) c.inner_k = *f.inner;
  if (f.sample_a) c.sample_a = *f.sample_a;
  if (f.sample_b) c.sample_b = *f.sample_b;
  if (f.batch_b) c.batch_b = *f.batch_b;
  try {
    c.validate();
  } catch (const scvr::ArgumentError& e) {
    throw h::config_error(e.what());
  }
  const scvr::Point y0 = h::random_point(problem.input_dim(), f.init_scale, f.seed + 1);
  const scvr::OptResult r = h::run_checked(problem, c, y0, f.algorithm);

  const std::string out = h::resolve_output(f.output, "embedding.csv");
  ensure_parent(out);
  try {
    scvr::save_matrix(out, h::embedding_matrix(problem, r.x_last));
  } catch (const scvr::ParseError& e) {
    throw h::data_error(e.what());
  }
  if (!f.trace.empty()) {
    const std::string tpath = h::resolve_output(f.trace, f.trace);
    ensure_parent(tpath);
    h::save_trace_csv(tpath, {{f.algorithm, c, r}});
  }
  std::cout << "objective: " << scvr::detail::format_double(r.trace.front().objective) << " -> "
            << scvr::detail::format_double(r.trace.back().objective)
            << " (queries=" << r.ledger.total() << ", clamped normalizers=" << r.guard_events
            << ")\nembedding: " << out << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variance-reduced optimizers for two-level composition problems"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--config", run_flags.config, "experiment JSON")->required();
    sub->add_option("--budget", run_flags.budget, "total query cap");
    sub->add_option("--seed", run_flags.seed, "default seed of every algorithm");
    sub->add_option("--record-every", run_flags.record_every, "trace record interval");
    sub->add_option("--eta", run_flags.eta, "step size for every algorithm");
    sub->add_option("--output", run_flags.output, "trace CSV path");
    sub->add_flag("--wall-clock", run_flags.wall_clock, "fill the wall_ms column");
  };
  auto* run_cmd = app.add_subcommand("run", "run the configured algorithms and write a trace CSV");
  add_run_flags(run_cmd);

  std::string grid, summary;
  auto* sweep_cmd = app.add_subcommand("sweep", "run every algorithm over an eta grid");
  add_run_flags(sweep_cmd);
  sweep_cmd->add_option("--eta-grid", grid, "comma-separated step sizes");
  sweep_cmd->add_option("--summary", summary, "per-eta summary CSV path");

  std::uint64_t n = 0, m = 0, b = 1;
  scvr::SmoothnessConstants consts{1, 1, 1, 1, 1, false};
  double scale = 1.0;
  std::string params_out;
  auto* check_cmd = app.add_subcommand("check-params", "suggested parameters and exponents");
  check_cmd->add_option("--n", n, "outer component count")->required();
  check_cmd->add_option("--m", m, "inner component count")->required();
  check_cmd->add_option("--b", b, "outer mini-batch size");
  check_cmd->add_option("--bg", consts.b_g, "Jacobian bound B_G");
  check_cmd->add_option("--lg", consts.l_g, "Jacobian Lipschitz constant L_G");
  check_cmd->add_option("--bf", consts.b_f, "outer gradient bound B_F");
  check_cmd->add_option("--lF", consts.l_f_outer, "outer smoothness L_F");
  check_cmd->add_option("--lf", consts.l_f, "composite smoothness L_f");
  check_cmd->add_option("--scale", scale, "scale factor on K and eta");
  check_cmd->add_option("--output", params_out, "write the JSON report here");

  std::string fault;
  auto* verify_cmd = app.add_subcommand("verify", "run the fast invariant suite");
  verify_cmd->add_option("--inject-fault", fault, "deliberate fault: inner-charge");

  EmbedFlags ef;
  auto* embed_cmd = app.add_subcommand("embed", "SNE embedding of a CSV dataset");
  embed_cmd->add_option("--data", ef.data, "CSV samples, one per row")->required();
  embed_cmd->add_option("--sigma", ef.sigma, "similarity bandwidth or 'auto'");
  embed_cmd->add_option("--perplexity", ef.perplexity, "perplexity behind the 'auto' bandwidth");
  embed_cmd->add_option("--dim", ef.dim, "embedding dimension");
  embed_cmd->add_option("--pca", ef.pca, "PCA dimension (0 = off)");
  embed_cmd->add_flag("--no-normalize", ef.no_normalize, "skip column normalization");
  embed_cmd->add_option("--algorithm", ef.algorithm, "optimizer");
  embed_cmd->add_option("--eta", ef.eta, "step size");
  embed_cmd->add_option("--epochs", ef.epochs, "epochs S");
  embed_cmd->add_option("--inner", ef.inner, "inner steps K");
  embed_cmd->add_option("-A", ef.sample_a, "inner value samples");
  embed_cmd->add_option("-B", ef.sample_b, "inner Jacobian samples");
  embed_cmd->add_option("-b", ef.batch_b, "outer mini-batch");
  embed_cmd->add_option("--seed", ef.seed, "seed");
  embed_cmd->add_option("--init-scale", ef.init_scale, "initial coordinate scale");
  embed_cmd->add_option("--output", ef.output, "embedding CSV path");
  embed_cmd->add_option("--trace", ef.trace, "optional trace CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[USAGE]: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*run_cmd) return cmd_run(run_flags);
    if (*sweep_cmd) return cmd_sweep(run_flags, grid, summary);
    if (*check_cmd) return cmd_check_params(n, m, b, consts, scale, params_out);
    if (*verify_cmd) return cmd_verify(fault);
    if (*embed_cmd) return cmd_embed(ef);
  } catch (const h::CliError& e) {
    std::cerr << e.line() << '\n';
    return e.exit_code();
  } catch (const scvr::ArgumentError& e) {
    std::cerr << h::config_error(e.what()).line() << '\n';
    return 2;
  } catch (const scvr::ParseError& e) {
    std::cerr << h::data_error(e.what()).line() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << h::CliError("INTERNAL", h::Exit::ok, e.what()).line() << '\n';
    return 5;
  }
  return 0;
}
