#include "bskm/config.hpp"

#include <gtest/gtest.h>

#include <string>

namespace {

const std::string kMinimal = R"({
  "schema": "bskm.experiment/1",
  "name": "tiny",
  "operator": {"kind": "softmax_policy", "dim": 4, "eta": 2.0, "matrix_seed": 3},
  "seeds": [1],
  "steps": {"kind": "harmonic_offset", "a": 10},
  "n_iters": 10,
  "geometry": {"kind": "neg_entropy_simplex"},
  "variants": [{"name": "only"}]
})";

std::string error_of(const std::string& text) {
  try {
    bskm::parse_experiment(text, "cfg.json");
  } catch (const bskm::ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return s.replace(pos, from.size(), to);
}

}  // namespace

TEST(Config, ParsesMinimalConfigWithDefaults) {
  const auto cfg = bskm::parse_experiment(kMinimal);
  EXPECT_EQ(cfg.name, "tiny");
  EXPECT_EQ(cfg.op.dim, 4);
  EXPECT_FALSE(cfg.op.matrix_scale.has_value());
  ASSERT_EQ(cfg.variants.size(), 1u);
  const auto& run = cfg.variants[0].run;
  EXPECT_EQ(run.n_iters, 10);
  EXPECT_EQ(run.noise.kind, bskm::NoiseKind::zero);
  EXPECT_EQ(run.trim.kind, bskm::TrimKind::none);
  EXPECT_FALSE(run.init.has_value());
  EXPECT_EQ(cfg.outputs, "out/tiny");
  EXPECT_EQ(cfg.report, bskm::kReportMetrics);
  EXPECT_DOUBLE_EQ(cfg.reference_tol, 1e-12);
}

TEST(Config, VariantKeysOverrideTopLevel) {
  const auto text = replace(kMinimal, R"([{"name": "only"}])",
                            R"([{"name": "a"}, {"name": "b", "geometry": {"kind": "euclidean"}, "n_iters": 5,
                                "noise": {"kind": "student_t", "dof": 2, "space": "dual"}, "trim": {"kind": "log_schedule"}}])");
  const auto cfg = bskm::parse_experiment(text);
  ASSERT_EQ(cfg.variants.size(), 2u);
  EXPECT_EQ(std::get<bskm::LegendreGeometry>(cfg.variants[0].run.geometry).kind, bskm::GeometryKind::neg_entropy_simplex);
  EXPECT_EQ(std::get<bskm::LegendreGeometry>(cfg.variants[1].run.geometry).kind, bskm::GeometryKind::euclidean);
  EXPECT_EQ(cfg.variants[1].run.n_iters, 5);
  EXPECT_EQ(cfg.variants[1].run.noise.space, bskm::NoiseSpace::dual);
  EXPECT_DOUBLE_EQ(cfg.variants[1].run.noise.scale, 1.0);
  EXPECT_EQ(cfg.variants[1].run.trim.kind, bskm::TrimKind::log_schedule);
  EXPECT_EQ(cfg.variants[1].echo.at("n_iters"), 5);
}

TEST(Config, ScaledGeometryWithSchedule) {
  const auto text = replace(kMinimal, R"("geometry": {"kind": "neg_entropy_simplex"})",
                            R"("geometry": {"kind": "scaled", "base": {"kind": "neg_entropy_simplex"},
                                "factor_schedule": {"kind": "harmonic_decay", "amplitude": 1.0}})");
  const auto cfg = bskm::parse_experiment(text);
  const auto& sched = std::get<bskm::GeometrySchedule>(cfg.variants[0].run.geometry);
  EXPECT_DOUBLE_EQ(bskm::geometry_at(sched, 0).factor, 2.0);
}

TEST(Config, UnknownKeyIsAnchoredToItsLine) {
  const auto text = replace(kMinimal, R"("a": 10})", R"("a": 10, "sigmaa": 3})");
  EXPECT_EQ(error_of(text), "cfg.json:6: unknown key 'sigmaa' in '/steps'");
}

TEST(Config, UnknownTopLevelKey) {
  const auto text = replace(kMinimal, R"("name": "tiny",)", "\"name\": \"tiny\",\n  \"seed\": 4,");
  EXPECT_EQ(error_of(text), "cfg.json:4: unknown key 'seed' in '/'");
}

TEST(Config, ErrorsInsideVariantsPointAtTheVariant) {
  const auto text = replace(kMinimal, R"([{"name": "only"}])", "[\n    {\"name\": \"v\",\n     \"steps\": {\"kind\": \"polynomial\", \"gamma\": 0.4}}\n  ]");
  const auto err = error_of(text);
  EXPECT_EQ(err.rfind("cfg.json:11: ", 0), 0u) << err;
  EXPECT_NE(err.find("gamma"), std::string::npos) << err;
}

TEST(Config, SchemaVersionIsRequired) {
  EXPECT_NE(error_of(replace(kMinimal, "bskm.experiment/1", "bskm.experiment/2")).find("cfg.json:2: unsupported schema"),
            std::string::npos);
}

TEST(Config, SyntaxErrorsReportALine) {
  const auto err = error_of(replace(kMinimal, R"("seeds": [1],)", R"("seeds": [1,,)"));
  EXPECT_EQ(err.rfind("cfg.json:5: invalid JSON", 0), 0u) << err;
}

TEST(Config, SemanticChecks) {
  EXPECT_NE(error_of(replace(kMinimal, R"("seeds": [1])", R"("seeds": [1, 1])")).find("distinct"), std::string::npos);
  EXPECT_NE(error_of(replace(kMinimal, R"("seeds": [1])", R"("seeds": [])")).find("nonempty"), std::string::npos);
  EXPECT_NE(error_of(replace(kMinimal, R"("n_iters": 10,)", "")).find("n_iters"), std::string::npos);
  EXPECT_NE(error_of(replace(kMinimal, R"([{"name": "only"}])", R"([{"name": "x"}, {"name": "x"}])")).find("duplicate"),
            std::string::npos);
  EXPECT_NE(error_of(replace(kMinimal, R"("eta": 2.0)", R"("eta": -1)")).find("eta"), std::string::npos);
  EXPECT_NE(error_of(replace(kMinimal, R"("kind": "neg_entropy_simplex")", R"("kind": "hyperbolic")")).find("hyperbolic"),
            std::string::npos);
  EXPECT_NE(error_of(replace(kMinimal, R"("n_iters": 10,)", R"("n_iters": 10, "init": [0.5, 0.5, 0.5, 0.5],)"))
                .find("domain"),
            std::string::npos);
  EXPECT_NE(error_of(replace(kMinimal, R"("n_iters": 10,)", R"("n_iters": 10, "init": [1, 0],)")).find("4 entries"),
            std::string::npos);
}

TEST(Config, InitArrayAndReportList) {
  auto text = replace(kMinimal, R"("n_iters": 10,)", R"("n_iters": 10, "init": [0.1, 0.2, 0.3, 0.4], "report": ["rate_fit"],)");
  const auto cfg = bskm::parse_experiment(text);
  ASSERT_TRUE(cfg.variants[0].run.init.has_value());
  EXPECT_DOUBLE_EQ((*cfg.variants[0].run.init)[3], 0.4);
  EXPECT_EQ(cfg.report, std::vector<std::string>{"rate_fit"});
}

TEST(Config, BundledExamplesParse) {
  const auto e1 = bskm::load_experiment(std::string(BSKM_SOURCE_DIR) + "/configs/example1.json");
  EXPECT_EQ(e1.variants.size(), 3u);
  EXPECT_EQ(e1.seeds.size(), 20u);
  EXPECT_EQ(e1.op.dim, 10);
  EXPECT_DOUBLE_EQ(e1.op.eta, 2.0);
  for (const auto& v : e1.variants) {
    EXPECT_EQ(v.run.n_iters, 1000);
    EXPECT_DOUBLE_EQ(v.run.noise.sigma, 0.1);
    EXPECT_DOUBLE_EQ(bskm::step_size(v.run.steps, 0), 0.1);
  }
  const auto e2 = bskm::load_experiment(std::string(BSKM_SOURCE_DIR) + "/configs/example2.json");
  EXPECT_EQ(e2.variants.size(), 2u);
  EXPECT_EQ(e2.variants[0].run.noise.kind, bskm::NoiseKind::student_t);
  EXPECT_DOUBLE_EQ(e2.variants[0].run.noise.dof, 2.0);
}

TEST(Config, MissingFile) {
  EXPECT_THROW(bskm::load_experiment("/nonexistent/cfg.json"), bskm::ConfigError);
}
