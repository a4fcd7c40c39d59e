// Trace I/O, summary reduction, and the skm binary end to end.

#include "bskm/checks.hpp"
#include "bskm/experiment.hpp"
#include "bskm/io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const std::string kSkm = BSKM_SKM_PATH;
const fs::path kConfigs = fs::path(BSKM_SOURCE_DIR) / "configs";

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bskm_test_" + name);
  fs::remove_all(p);
  return p;
}

int skm(const std::string& args) {
  const std::string cmd = "\"" + kSkm + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string skm_stderr(const std::string& args) {
  const std::string cmd = "\"" + kSkm + "\" " + args + " 2>&1 >/dev/null";
  std::string out;
  if (FILE* p = popen(cmd.c_str(), "r")) {
    char buf[512];
    while (fgets(buf, sizeof buf, p)) out += buf;
    pclose(p);
  }
  return out;
}

fs::path write_config(const std::string& name, const std::string& body) {
  const fs::path p = fresh_dir(name + ".json");
  bskm::write_text_file(p, body);
  return p;
}

const std::string kTiny = R"({
  "schema": "bskm.experiment/1",
  "name": "tiny",
  "operator": {"kind": "softmax_policy", "dim": 10, "eta": 2.0, "matrix_seed": 1},
  "seeds": [1],
  "steps": {"kind": "harmonic_offset", "a": 10},
  "noise": {"kind": "gaussian", "sigma": 0.1, "space": "dual"},
  "n_iters": 10,
  "geometry": {"kind": "neg_entropy_simplex"},
  "variants": [{"name": "only"}]
})";

}  // namespace

TEST(TraceCsv, RoundTripIsBitExact) {
  bskm::IterationConfig c;
  c.op = bskm::example_policy_operator();
  c.geometry = bskm::LegendreGeometry::neg_entropy_simplex();
  c.noise = bskm::NoiseModel::gaussian(0.1);
  c.n_iters = 300;
  const auto t = bskm::run(c, bskm::fixed_point_oracle(c.op, 1e-12));
  std::stringstream ss;
  bskm::write_trace_csv(ss, t);
  const auto back = bskm::read_trace_csv(ss);
  ASSERT_EQ(back.rows.size(), t.rows.size());
  double a = 0.0, w = 0.0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].bregman_residual, t.rows[i].bregman_residual);
    EXPECT_EQ(back.rows[i].avg_residual, t.rows[i].avg_residual);
    EXPECT_EQ(back.rows[i].dist_to_ref, t.rows[i].dist_to_ref);
    a += back.rows[i].alpha;
    w += back.rows[i].alpha * back.rows[i].bregman_residual;
    EXPECT_NEAR(w / a, back.rows[i].avg_residual, 1e-12);
  }
}

TEST(TraceCsv, NanSurvivesAndBadInputIsRejected) {
  bskm::Trace t;
  t.rows.push_back({});
  std::stringstream ss;
  bskm::write_trace_csv(ss, t);
  EXPECT_NE(ss.str().find(",nan,"), std::string::npos);
  EXPECT_TRUE(std::isnan(bskm::read_trace_csv(ss).rows[0].dist_to_ref));
  std::stringstream bad("n,alpha\n1,2\n");
  EXPECT_THROW(bskm::read_trace_csv(bad), bskm::Error);
  std::stringstream short_row(std::string(bskm::kTraceHeader) + "\n1,2,3\n");
  EXPECT_THROW(bskm::read_trace_csv(short_row), bskm::Error);
}

TEST(Experiment, WritesTheDocumentedLayout) {
  const auto dir = fresh_dir("layout");
  const auto cfg = bskm::parse_experiment(kTiny);
  const auto res = bskm::run_experiment(cfg, dir);
  EXPECT_FALSE(res.any_diverged);
  for (const char* f : {"manifest.json", "summary.json", "summary.txt", "only/seed_1.csv", "only/seed_1.json"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto meta = bskm::json::parse(bskm::read_text_file(dir / "only/seed_1.json"));
  EXPECT_EQ(meta.at("rows"), 10);
  EXPECT_EQ(meta.at("rng"), bskm::rng_algorithm_id());
  EXPECT_LE(meta.at("operator").at("probe_lipschitz").get<double>(), 1.0 + 1e-9);
  EXPECT_FALSE(meta.at("non_a3").get<bool>());
  EXPECT_EQ(meta.at("final_iterate").size(), 10u);
}

TEST(Experiment, SummaryIsAPureFunctionOfSavedRuns) {
  const auto dir = fresh_dir("pure");
  auto cfg = bskm::load_experiment((kConfigs / "example1.json").string());
  cfg.seeds = {4, 5, 6};
  bskm::run_experiment(cfg, dir);
  const std::string json1 = bskm::read_text_file(dir / "summary.json");
  const std::string txt1 = bskm::read_text_file(dir / "summary.txt");
  fs::remove(dir / "summary.json");
  fs::remove(dir / "summary.txt");
  bskm::write_summary(dir, bskm::summarize(dir));
  EXPECT_EQ(bskm::read_text_file(dir / "summary.json"), json1);
  EXPECT_EQ(bskm::read_text_file(dir / "summary.txt"), txt1);
  const auto s = bskm::json::parse(json1);
  ASSERT_EQ(s.at("rows").size(), 3u);
  EXPECT_EQ(s.at("rows")[0].at("runs"), 3);
}

TEST(Experiment, AffineReferenceUsesLinearSolve) {
  bskm::Matrix rot(2, 2);
  rot << 0, -1, 1, 0;
  const auto op = bskm::OperatorSpec::affine_average(rot, bskm::Vector::Ones(2), 1.0);
  const auto ref = bskm::compute_reference(op, 1e-12);
  EXPECT_TRUE(ref.converged);
  EXPECT_EQ(ref.method, "linear_solve");
  EXPECT_LT(ref.ref.residual_norm, 1e-12);
}

TEST(RateStudy, SlopesAndStepSums) {
  bskm::RateStudyOptions o;
  o.gammas = {0.6, 0.75, 0.9};
  o.n_iters = 2000;
  o.seeds = 2;
  const auto rows = bskm::rate_study(o);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_GT(rows[0].step_sum, rows[2].step_sum);
  EXPECT_LE(rows[1].median_slope, -0.25);
  EXPECT_DOUBLE_EQ(rows[1].exponent_in_n, -0.125);
  EXPECT_DOUBLE_EQ(rows[1].exponent_in_a, -0.5);
  o.gammas = {};
  EXPECT_THROW(bskm::rate_study(o), bskm::ConfigError);
  o.gammas = {1.0};
  EXPECT_THROW(bskm::rate_study(o), bskm::ConfigError);
}

TEST(Cli, RunSmokeConfig) {
  const auto dir = fresh_dir("cli_smoke");
  EXPECT_EQ(skm("run \"" + write_config("cli_smoke_cfg", kTiny).string() + "\" --out \"" + dir.string() + "\""), 0);
  std::stringstream csv(bskm::read_text_file(dir / "only/seed_1.csv"));
  EXPECT_EQ(bskm::read_trace_csv(csv).rows.size(), 10u);
}

TEST(Cli, SeedOverride) {
  const auto dir = fresh_dir("cli_seeds");
  EXPECT_EQ(skm("run \"" + (kConfigs / "example2.json").string() + "\" --seeds 7,8 --out \"" + dir.string() + "\""), 0);
  EXPECT_TRUE(fs::exists(dir / "log-trim/seed_8.csv"));
  EXPECT_FALSE(fs::exists(dir / "log-trim/seed_1.csv"));
}

TEST(Cli, ConfigErrorsExitOneWithLineAnchor) {
  std::string bad = kTiny;
  bad.replace(bad.find("\"sigma\""), 7, "\"sigmaa\"");
  const auto path = write_config("cli_bad", bad);
  EXPECT_EQ(skm("run \"" + path.string() + "\""), 1);
  EXPECT_NE(skm_stderr("run \"" + path.string() + "\"").find(path.string() + ":7: unknown key 'sigmaa'"),
            std::string::npos);
  EXPECT_EQ(skm("run /nonexistent.json"), 1);
}

TEST(Cli, DivergenceExitsTwoAndStillWritesSummary) {
  auto swap = [](std::string s, const std::string& from, const std::string& to) {
    return s.replace(s.find(from), from.size(), to);
  };
  std::string cfg = swap(kTiny, R"({"kind": "gaussian", "sigma": 0.1, "space": "dual"})",
                         R"({"kind": "student_t", "dof": 0.3, "scale": 1e9})");
  cfg = swap(cfg, R"({"kind": "neg_entropy_simplex"})", R"({"kind": "euclidean"})");
  cfg = swap(cfg, R"("n_iters": 10)", R"("n_iters": 5000)");
  const auto dir = fresh_dir("cli_diverge");
  EXPECT_EQ(skm("run \"" + write_config("cli_div", cfg).string() + "\" --out \"" + dir.string() + "\""), 2);
  const auto s = bskm::json::parse(bskm::read_text_file(dir / "summary.json"));
  EXPECT_EQ(s.at("rows")[0].at("diverged"), 1);
}

TEST(Cli, RateStudyUsage) {
  EXPECT_EQ(skm("rate-study --geometry euclidean --n 500 --seeds 1"), 1);
  EXPECT_EQ(skm("rate-study --geometry euclidean --gamma 0.4 --n 500 --seeds 1"), 1);
  EXPECT_EQ(skm("rate-study --geometry nope --gamma 0.75 --n 500 --seeds 1"), 1);
  EXPECT_EQ(skm("rate-study --geometry p_norm --gamma 0.75 --n 500 --seeds 1"), 0);
}

TEST(Cli, CheckSuites) {
  EXPECT_EQ(skm("check geometry"), 0);
  EXPECT_EQ(skm("check hilbert"), 0);
  EXPECT_EQ(skm("check trim"), 0);
  EXPECT_EQ(skm("check nonsense"), 1);
  EXPECT_EQ(skm(""), 1);
}

TEST(Checks, AllSuitesPassInProcess) {
  for (const auto& suite : bskm::kCheckSuites)
    for (const auto& r : bskm::run_check_suite(suite)) EXPECT_TRUE(r.passed) << suite << ": " << r.name << " " << r.detail;
}
