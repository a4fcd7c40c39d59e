// skm: experiment runner, step-size rate sweeps, and invariant checks.
//
// Exit codes: 0 success, 1 usage or config error, 2 a run diverged, 3 a check failed.

#include "bskm/checks.hpp"
#include "bskm/config.hpp"
#include "bskm/experiment.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDiverged = 2;
constexpr int kExitCheckFailed = 3;

int cmd_run(const std::string& config_path, const std::vector<std::uint64_t>& seeds,
            const std::optional<std::string>& out) {
  bskm::ExperimentConfig cfg = bskm::load_experiment(config_path);
  if (!seeds.empty()) {
    std::vector<std::uint64_t> unique = seeds;
    std::sort(unique.begin(), unique.end());
    if (std::adjacent_find(unique.begin(), unique.end()) != unique.end())
      throw bskm::ConfigError("--seeds must be distinct");
    cfg.seeds = seeds;
  }
  const std::filesystem::path dir = out ? *out : cfg.outputs;
  const auto result = bskm::run_experiment(cfg, dir);
  std::cout << bskm::render_summary(result.summary);
  if (!result.reference.converged)
    std::cerr << "warning: fixed-point oracle stopped at residual " << result.reference.ref.residual_norm
              << "; distances use its best iterate\n";
  std::cout << "wrote " << dir.string() << "\n";
  if (result.any_diverged) {
    std::cerr << "error: at least one run diverged (see the 'diverged' column)\n";
    return kExitDiverged;
  }
  return kExitOk;
}

int cmd_rate_study(const bskm::RateStudyOptions& opt, const std::optional<std::string>& out) {
  const auto rows = bskm::rate_study(opt);
  std::cout << bskm::render_rate_study(opt, rows);
  if (out) {
    std::filesystem::create_directories(*out);
    bskm::json j = {{"geometry", opt.geometry}, {"n", opt.n_iters}, {"seeds", opt.seeds},
                    {"sigma", opt.sigma},       {"rows", bskm::json::array()}};
    for (const auto& r : rows) j["rows"].push_back(bskm::to_json(r));
    bskm::write_text_file(std::filesystem::path(*out) / "rate_study.json", j.dump(2) + "\n");
  }
  for (const auto& r : rows)
    if (r.diverged > 0) return kExitDiverged;
  return kExitOk;
}

int cmd_check(const std::string& suite) {
  const auto results = bskm::run_check_suite(suite);
  bool ok = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS  " : "FAIL  ") << r.name << "  [" << r.detail << "]\n";
    ok = ok && r.passed;
  }
  return ok ? kExitOk : kExitCheckFailed;
}

int cmd_summarize(const std::string& dir) {
  const auto table = bskm::summarize(dir);
  bskm::write_summary(dir, table);
  std::cout << bskm::render_summary(table);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic Bregman-Krasnoselskii-Mann experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::optional<std::string> out;
  auto* run = app.add_subcommand("run", "Run every variant x seed of an experiment config");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--seeds", seeds, "Override the config's seed list")->delimiter(',');
  run->add_option("--out", out, "Output directory (default: the config's 'outputs')");

  bskm::RateStudyOptions rs;
  std::optional<std::string> rs_out;
  auto* rate = app.add_subcommand("rate-study", "Polynomial step-size sweep with rate fits");
  rate->add_option("--geometry", rs.geometry, "euclidean | neg_entropy_simplex | p_norm")->capture_default_str();
  rate->add_option("--p", rs.p_norm, "Exponent for the p_norm geometry")->capture_default_str();
  rate->add_option("--gamma", rs.gammas, "Comma-separated step exponents in (1/2, 1)")->delimiter(',');
  rate->add_option("--n", rs.n_iters, "Iterations per run")->capture_default_str();
  rate->add_option("--seeds", rs.seeds, "Number of seeds (1..K)")->capture_default_str();
  rate->add_option("--sigma", rs.sigma, "Gaussian noise level")->capture_default_str();
  rate->add_option("--dim", rs.dim, "Dimension")->capture_default_str();
  rate->add_option("--out", rs_out, "Also write rate_study.json here");

  std::string suite;
  auto* check = app.add_subcommand("check", "Run an invariant suite");
  check->add_option("suite", suite, "geometry | descent | trim | hilbert")->required();

  std::string summary_dir;
  auto* summ = app.add_subcommand("summarize", "Rebuild summary.json/summary.txt from saved runs");
  summ->add_option("dir", summary_dir, "Output directory of a previous run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config_path, seeds, out);
    if (*rate) return cmd_rate_study(rs, rs_out);
    if (*check) return cmd_check(suite);
    if (*summ) return cmd_summarize(summary_dir);
  } catch (const bskm::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
