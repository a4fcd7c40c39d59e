#pragma once

// Experiment configuration: JSON with a versioned schema field. Unknown keys are errors, and
// every error names the file and line of the offending key.

#include "bskm/geometry.hpp"
#include "bskm/io.hpp"
#include "bskm/iteration.hpp"
#include "bskm/noise.hpp"
#include "bskm/operators.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace bskm {

inline constexpr const char* kSchemaVersion = "bskm.experiment/1";

/// JSON pointer -> 1-based source line, for anchoring diagnostics.
struct SourceMap {
  std::string origin = "<config>";
  std::map<std::string, std::size_t> lines;

  std::string where(std::string pointer) const {
    for (;;) {
      if (auto it = lines.find(pointer); it != lines.end()) return origin + ":" + std::to_string(it->second);
      if (pointer.empty()) return origin + ":1";
      pointer.erase(pointer.rfind('/'));
    }
  }
};

namespace detail {

// Input iterator that counts the newlines the parser has consumed.
class LineCountingIterator {
 public:
  using iterator_category = std::input_iterator_tag;
  using value_type = char;
  using difference_type = std::ptrdiff_t;
  using pointer = const char*;
  using reference = const char&;

  LineCountingIterator() = default;
  LineCountingIterator(const char* p, std::size_t* line) : p_(p), line_(line) {}
  reference operator*() const { return *p_; }
  LineCountingIterator& operator++() {
    if (*p_ == '\n') ++*line_;
    ++p_;
    return *this;
  }
  LineCountingIterator operator++(int) {
    auto old = *this;
    ++*this;
    return old;
  }
  bool operator==(const LineCountingIterator& o) const { return p_ == o.p_; }
  bool operator!=(const LineCountingIterator& o) const { return p_ != o.p_; }

 private:
  const char* p_ = nullptr;
  std::size_t* line_ = nullptr;
};

inline std::string escape_pointer_token(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

// Forwards events to the DOM builder and records a line for every object key and array.
class PositionedSax : public nlohmann::json_sax<json> {
 public:
  PositionedSax(json& root, SourceMap& map, const std::size_t* line) : dom_(root), map_(map), line_(line) {}

  bool null() override { return value(), dom_.null(); }
  bool boolean(bool v) override { return value(), dom_.boolean(v); }
  bool number_integer(number_integer_t v) override { return value(), dom_.number_integer(v); }
  bool number_unsigned(number_unsigned_t v) override { return value(), dom_.number_unsigned(v); }
  bool number_float(number_float_t v, const string_t& s) override { return value(), dom_.number_float(v, s); }
  bool string(string_t& v) override { return value(), dom_.string(v); }
  bool binary(binary_t& v) override { return value(), dom_.binary(v); }

  bool start_object(std::size_t n) override {
    frames_.push_back({false, 0, child_pointer(), ""});
    return dom_.start_object(n);
  }
  bool key(string_t& k) override {
    frames_.back().key = k;
    map_.lines.emplace(frames_.back().pointer + "/" + escape_pointer_token(k), *line_);
    return dom_.key(k);
  }
  bool end_object() override {
    frames_.pop_back();
    return dom_.end_object();
  }
  bool start_array(std::size_t n) override {
    const std::string p = child_pointer();
    map_.lines.emplace(p, *line_);
    frames_.push_back({true, 0, p, ""});
    return dom_.start_array(n);
  }
  bool end_array() override {
    frames_.pop_back();
    return dom_.end_array();
  }
  bool parse_error(std::size_t pos, const std::string&, const nlohmann::detail::exception& ex) override {
    error_pos = pos;
    error_what = ex.what();
    return false;
  }

  std::size_t error_pos = 0;
  std::string error_what;

 private:
  struct Frame {
    bool array;
    std::size_t index;
    std::string pointer;
    std::string key;
  };

  std::string child_pointer() {
    if (frames_.empty()) return "";
    Frame& f = frames_.back();
    if (f.array) return f.pointer + "/" + std::to_string(f.index++);
    return f.pointer + "/" + escape_pointer_token(f.key);
  }
  void value() { child_pointer(); }

  nlohmann::detail::json_sax_dom_parser<json> dom_;
  SourceMap& map_;
  const std::size_t* line_;
  std::vector<Frame> frames_;
};

}  // namespace detail

struct PositionedJson {
  json value;
  SourceMap map;
};

inline PositionedJson parse_positioned(const std::string& text, const std::string& origin) {
  PositionedJson out;
  out.map.origin = origin;
  std::size_t line = 1;
  detail::PositionedSax sax(out.value, out.map, &line);
  const char* b = text.data();
  const bool ok = json::sax_parse(detail::LineCountingIterator(b, &line),
                                  detail::LineCountingIterator(b + text.size(), &line), &sax);
  if (!ok) {
    // The reported position counts characters read, so it is one past the offending one.
    const auto upto = std::min(sax.error_pos > 0 ? sax.error_pos - 1 : 0, text.size());
    const auto err_line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    std::string what = sax.error_what;
    if (const auto colon = what.find(": ", what.find("parse error")); colon != std::string::npos)
      what = what.substr(colon + 2);
    throw ConfigError(origin + ":" + std::to_string(err_line) + ": invalid JSON: " + what);
  }
  return out;
}

struct OperatorConfig {
  OperatorKind kind = OperatorKind::softmax_policy;
  std::int64_t dim = 10;
  double eta = 2.0;
  std::uint64_t matrix_seed = 0;
  std::optional<double> matrix_scale;  // empty: "auto"
  int probe_trials = 10'000;
  std::uint64_t probe_seed = 0x5eed;
  double norm = 1.0;
  double lambda = 0.5;
};

/// Everything needed for one run except the operator instance and the seed.
struct RunTemplate {
  GeometryChoice geometry = LegendreGeometry::euclidean();
  std::optional<LegendreGeometry> metric;
  StepSchedule steps;
  NoiseModel noise;
  TrimSchedule trim;
  std::int64_t n_iters = 1000;
  std::optional<Vector> init;
  std::int64_t record_every = 0;

  IterationConfig instantiate(const OperatorSpec& op, std::uint64_t seed) const {
    IterationConfig c;
    c.op = op;
    c.geometry = geometry;
    c.metric = metric;
    c.steps = steps;
    c.noise = noise;
    c.trim = trim;
    c.n_iters = n_iters;
    c.init = init;
    c.seed = seed;
    c.record_every = record_every;
    return c;
  }

  double theoretical_p() const {
    if (const auto* g = std::get_if<LegendreGeometry>(&geometry)) return rate_exponent(*g);
    return rate_exponent(std::get<GeometrySchedule>(geometry).base);
  }
};

struct VariantConfig {
  std::string name;
  RunTemplate run;
  json echo;  // effective run keys, for metadata
};

inline const std::vector<std::string> kReportMetrics = {"final_avg_residual", "final_dist_to_ref_l1", "rate_fit",
                                                        "envelope_check"};

struct ExperimentConfig {
  std::string name;
  OperatorConfig op;
  std::vector<VariantConfig> variants;
  std::vector<std::uint64_t> seeds;
  std::string outputs;
  std::vector<std::string> report = kReportMetrics;
  double reference_tol = 1e-12;
  json source;
};

namespace detail {

class SchemaReader {
 public:
  explicit SchemaReader(const SourceMap& map) : map_(map) {}

  [[noreturn]] void fail(const std::string& pointer, const std::string& msg) const {
    throw ConfigError(map_.where(pointer) + ": " + msg);
  }

  void expect_object(const json& j, const std::string& ptr) const {
    if (!j.is_object()) fail(ptr, "expected an object at '" + display(ptr) + "'");
  }

  void check_keys(const json& j, const std::string& ptr, std::initializer_list<const char*> allowed) const {
    expect_object(j, ptr);
    for (const auto& [k, v] : j.items()) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
        fail(ptr + "/" + escape_pointer_token(k), "unknown key '" + k + "' in '" + display(ptr) + "'");
    }
  }

  double number(const json& j, const std::string& ptr, const char* key, std::optional<double> fallback = {}) const {
    if (!j.contains(key)) {
      if (fallback) return *fallback;
      fail(ptr, "missing required key '" + std::string(key) + "' in '" + display(ptr) + "'");
    }
    const json& v = j.at(key);
    if (!v.is_number()) fail(ptr + "/" + key, "'" + std::string(key) + "' must be a number");
    return v.get<double>();
  }

  std::int64_t integer(const json& j, const std::string& ptr, const char* key,
                       std::optional<std::int64_t> fallback = {}) const {
    if (!j.contains(key)) {
      if (fallback) return *fallback;
      fail(ptr, "missing required key '" + std::string(key) + "' in '" + display(ptr) + "'");
    }
    const json& v = j.at(key);
    if (!v.is_number_integer()) fail(ptr + "/" + key, "'" + std::string(key) + "' must be an integer");
    return v.get<std::int64_t>();
  }

  std::string string(const json& j, const std::string& ptr, const char* key,
                     std::optional<std::string> fallback = {}) const {
    if (!j.contains(key)) {
      if (fallback) return *fallback;
      fail(ptr, "missing required key '" + std::string(key) + "' in '" + display(ptr) + "'");
    }
    const json& v = j.at(key);
    if (!v.is_string()) fail(ptr + "/" + key, "'" + std::string(key) + "' must be a string");
    return v.get<std::string>();
  }

  static std::string display(const std::string& ptr) { return ptr.empty() ? "/" : ptr; }

  // Wraps library-side validation errors with the location of the block being built.
  template <class F>
  auto at(const std::string& ptr, F&& build) const -> decltype(build()) {
    try {
      return build();
    } catch (const ConfigError& e) {
      const std::string what = e.what();
      if (what.rfind(map_.origin + ":", 0) == 0) throw;
      fail(ptr, what);
    }
  }

 private:
  const SourceMap& map_;
};

inline LegendreGeometry parse_fixed_geometry(const SchemaReader& r, const json& j, const std::string& ptr);

inline GeometryChoice parse_geometry(const SchemaReader& r, const json& j, const std::string& ptr) {
  r.expect_object(j, ptr);
  const std::string kind = r.string(j, ptr, "kind");
  if (kind == "scaled" && j.contains("factor_schedule")) {
    r.check_keys(j, ptr, {"kind", "base", "factor_schedule"});
    if (!j.contains("base")) r.fail(ptr, "scaled geometry needs a 'base'");
    const LegendreGeometry base = parse_fixed_geometry(r, j.at("base"), ptr + "/base");
    const json& fs = j.at("factor_schedule");
    const std::string sp = ptr + "/factor_schedule";
    r.expect_object(fs, sp);
    const std::string fk = r.string(fs, sp, "kind");
    return r.at(sp, [&]() -> GeometryChoice {
      if (fk == "harmonic_decay") {
        r.check_keys(fs, sp, {"kind", "amplitude"});
        return GeometrySchedule::harmonic_decay(base, r.number(fs, sp, "amplitude", 1.0));
      }
      if (fk == "constant") {
        r.check_keys(fs, sp, {"kind", "value"});
        const double v = r.number(fs, sp, "value");
        if (!(v > 0.0)) throw ConfigError("constant factor must be positive");
        return GeometrySchedule::constant(base, v);
      }
      r.fail(sp + "/kind", "unknown factor_schedule kind '" + fk + "'");
    });
  }
  return parse_fixed_geometry(r, j, ptr);
}

inline LegendreGeometry parse_fixed_geometry(const SchemaReader& r, const json& j, const std::string& ptr) {
  r.expect_object(j, ptr);
  const std::string kind = r.string(j, ptr, "kind");
  LegendreGeometry g = r.at(ptr, [&] {
    if (kind == "euclidean") {
      r.check_keys(j, ptr, {"kind", "modulus_c", "modulus_q"});
      return LegendreGeometry::euclidean();
    }
    if (kind == "neg_entropy_simplex") {
      r.check_keys(j, ptr, {"kind", "floor", "modulus_c", "modulus_q"});
      const double eps = r.number(j, ptr, "floor", kDefaultFloor);
      if (!(eps > 0.0 && eps < 1.0)) throw ConfigError("floor must lie in (0, 1)");
      return LegendreGeometry::neg_entropy_simplex(eps);
    }
    if (kind == "p_norm") {
      r.check_keys(j, ptr, {"kind", "p", "modulus_c", "modulus_q"});
      return LegendreGeometry::p_norm(r.number(j, ptr, "p"));
    }
    if (kind == "scaled") {
      r.check_keys(j, ptr, {"kind", "base", "factor"});
      if (!j.contains("base")) r.fail(ptr, "scaled geometry needs a 'base'");
      return scaled(r.number(j, ptr, "factor"), parse_fixed_geometry(r, j.at("base"), ptr + "/base"));
    }
    r.fail(ptr + "/kind", "unknown geometry kind '" + kind + "'");
  });
  if (j.contains("modulus_c")) {
    g.modulus_c = r.number(j, ptr, "modulus_c") * g.factor;
    if (!(g.modulus_c > 0.0)) r.fail(ptr + "/modulus_c", "modulus_c must be positive");
  }
  if (j.contains("modulus_q")) {
    g.modulus_q = r.number(j, ptr, "modulus_q");
    if (!(g.modulus_q >= 2.0)) r.fail(ptr + "/modulus_q", "modulus_q must be >= 2");
  }
  return g;
}

inline StepSchedule parse_steps(const SchemaReader& r, const json& j, const std::string& ptr) {
  const std::string kind = (r.expect_object(j, ptr), r.string(j, ptr, "kind"));
  return r.at(ptr, [&] {
    if (kind == "harmonic_offset") {
      r.check_keys(j, ptr, {"kind", "a"});
      return StepSchedule::harmonic_offset(r.number(j, ptr, "a"));
    }
    if (kind == "polynomial") {
      r.check_keys(j, ptr, {"kind", "gamma"});
      return StepSchedule::polynomial(r.number(j, ptr, "gamma"));
    }
    if (kind == "constant") {
      r.check_keys(j, ptr, {"kind", "alpha"});
      return StepSchedule::constant(r.number(j, ptr, "alpha"));
    }
    r.fail(ptr + "/kind", "unknown step schedule kind '" + kind + "'");
  });
}

inline NoiseModel parse_noise(const SchemaReader& r, const json& j, const std::string& ptr) {
  const std::string kind = (r.expect_object(j, ptr), r.string(j, ptr, "kind"));
  NoiseModel m = r.at(ptr, [&] {
    if (kind == "zero") {
      r.check_keys(j, ptr, {"kind", "seed", "space"});
      return NoiseModel::zero();
    }
    if (kind == "gaussian") {
      r.check_keys(j, ptr, {"kind", "sigma", "seed", "space"});
      return NoiseModel::gaussian(r.number(j, ptr, "sigma"));
    }
    if (kind == "student_t") {
      r.check_keys(j, ptr, {"kind", "dof", "scale", "seed", "space"});
      return NoiseModel::student_t(r.number(j, ptr, "dof"), r.number(j, ptr, "scale", 1.0));
    }
    r.fail(ptr + "/kind", "unknown noise kind '" + kind + "'");
  });
  const std::int64_t seed = r.integer(j, ptr, "seed", 0);
  if (seed < 0) r.fail(ptr + "/seed", "noise seed must be nonnegative");
  m.seed = static_cast<std::uint64_t>(seed);
  const std::string space = r.string(j, ptr, "space", "primal");
  if (space == "primal") m.space = NoiseSpace::primal;
  else if (space == "dual") m.space = NoiseSpace::dual;
  else r.fail(ptr + "/space", "noise space must be 'primal' or 'dual'");
  return m;
}

inline TrimSchedule parse_trim(const SchemaReader& r, const json& j, const std::string& ptr) {
  const std::string kind = (r.expect_object(j, ptr), r.string(j, ptr, "kind"));
  if (kind == "none") {
    r.check_keys(j, ptr, {"kind"});
    return TrimSchedule::none();
  }
  if (kind == "fixed") {
    r.check_keys(j, ptr, {"kind", "k"});
    return r.at(ptr, [&] { return TrimSchedule::fixed(r.integer(j, ptr, "k")); });
  }
  if (kind == "log_schedule") {
    r.check_keys(j, ptr, {"kind"});
    return TrimSchedule::log_schedule();
  }
  r.fail(ptr + "/kind", "unknown trim kind '" + kind + "'");
}

inline OperatorConfig parse_operator(const SchemaReader& r, const json& j, const std::string& ptr) {
  const std::string kind = (r.expect_object(j, ptr), r.string(j, ptr, "kind"));
  OperatorConfig c;
  if (kind == "softmax_policy") {
    r.check_keys(j, ptr, {"kind", "dim", "eta", "matrix_seed", "matrix_scale", "probe_trials", "probe_seed"});
    c.kind = OperatorKind::softmax_policy;
    c.eta = r.number(j, ptr, "eta");
    if (!(c.eta > 0.0)) r.fail(ptr + "/eta", "eta must be positive");
    if (j.contains("matrix_scale")) {
      const json& s = j.at("matrix_scale");
      if (s.is_string() && s.get<std::string>() == "auto") {
      } else if (s.is_number() && s.get<double>() >= 0.0) {
        c.matrix_scale = s.get<double>();
      } else {
        r.fail(ptr + "/matrix_scale", "matrix_scale must be \"auto\" or a nonnegative number");
      }
    }
    c.probe_trials = static_cast<int>(r.integer(j, ptr, "probe_trials", 10'000));
    if (c.probe_trials < 1) r.fail(ptr + "/probe_trials", "probe_trials must be >= 1");
    c.probe_seed = static_cast<std::uint64_t>(r.integer(j, ptr, "probe_seed", 0x5eed));
  } else if (kind == "affine_average") {
    r.check_keys(j, ptr, {"kind", "dim", "matrix_seed", "norm", "lambda"});
    c.kind = OperatorKind::affine_average;
    c.norm = r.number(j, ptr, "norm", 1.0);
    c.lambda = r.number(j, ptr, "lambda", 0.5);
    if (!(c.norm >= 0.0 && c.norm <= 1.0)) r.fail(ptr + "/norm", "norm must lie in [0, 1]");
    if (!(c.lambda >= 0.0 && c.lambda <= 1.0)) r.fail(ptr + "/lambda", "lambda must lie in [0, 1]");
  } else if (kind == "identity") {
    r.check_keys(j, ptr, {"kind", "dim"});
    c.kind = OperatorKind::identity;
  } else {
    r.fail(ptr + "/kind", "unknown operator kind '" + kind + "'");
  }
  c.dim = r.integer(j, ptr, "dim");
  if (c.dim < 1) r.fail(ptr + "/dim", "dim must be >= 1");
  if (kind != "identity") {
    const std::int64_t s = r.integer(j, ptr, "matrix_seed", 0);
    if (s < 0) r.fail(ptr + "/matrix_seed", "matrix_seed must be nonnegative");
    c.matrix_seed = static_cast<std::uint64_t>(s);
  }
  return c;
}

inline constexpr std::initializer_list<const char*> kRunKeys = {"geometry", "metric", "steps",  "noise",
                                                                "trim",     "n_iters", "init", "record_every"};

inline RunTemplate parse_run(const SchemaReader& r, const json& top, const json& variant, const std::string& vptr,
                             std::int64_t dim, json& echo) {
  auto source = [&](const char* key) -> std::pair<const json*, std::string> {
    if (variant.contains(key)) return {&variant.at(key), vptr + "/" + key};
    if (top.contains(key)) return {&top.at(key), std::string("/") + key};
    return {nullptr, ""};
  };
  RunTemplate run;
  echo = json::object();
  for (const char* key : kRunKeys) {
    if (auto [v, p] = source(key); v) echo[key] = *v;
  }

  if (auto [v, p] = source("geometry"); v) run.geometry = parse_geometry(r, *v, p);
  else r.fail(vptr, "variant has no 'geometry' (set it on the variant or at top level)");
  if (auto [v, p] = source("metric"); v) run.metric = parse_fixed_geometry(r, *v, p);
  if (auto [v, p] = source("steps"); v) run.steps = parse_steps(r, *v, p);
  else r.fail(vptr, "variant has no 'steps'");
  if (auto [v, p] = source("noise"); v) run.noise = parse_noise(r, *v, p);
  if (auto [v, p] = source("trim"); v) run.trim = parse_trim(r, *v, p);
  if (auto [v, p] = source("n_iters"); v) {
    if (!v->is_number_integer() || v->get<std::int64_t>() < 1) r.fail(p, "'n_iters' must be a positive integer");
    run.n_iters = v->get<std::int64_t>();
  } else {
    r.fail(vptr, "variant has no 'n_iters'");
  }
  if (auto [v, p] = source("record_every"); v) {
    if (!v->is_number_integer() || v->get<std::int64_t>() < 0) r.fail(p, "'record_every' must be a nonnegative integer");
    run.record_every = v->get<std::int64_t>();
  }
  if (auto [v, p] = source("init"); v) {
    if (v->is_string() && v->get<std::string>() == "uniform") {
    } else if (v->is_array()) {
      if (static_cast<std::int64_t>(v->size()) != dim) r.fail(p, "'init' must have " + std::to_string(dim) + " entries");
      Vector x(dim);
      for (std::int64_t i = 0; i < dim; ++i) {
        if (!(*v)[static_cast<std::size_t>(i)].is_number()) r.fail(p, "'init' entries must be numbers");
        x[i] = (*v)[static_cast<std::size_t>(i)].get<double>();
      }
      run.init = x;
    } else {
      r.fail(p, "'init' must be \"uniform\" or an array of numbers");
    }
  }
  if (run.init) {
    const LegendreGeometry g0 = std::holds_alternative<LegendreGeometry>(run.geometry)
                                    ? std::get<LegendreGeometry>(run.geometry)
                                    : geometry_at(std::get<GeometrySchedule>(run.geometry), 0);
    if (!in_domain(g0, *run.init)) r.fail(vptr, "'init' lies outside the geometry's domain");
  }
  return run;
}

}  // namespace detail

inline ExperimentConfig parse_experiment(const std::string& text, const std::string& origin = "<config>") {
  const PositionedJson pj = parse_positioned(text, origin);
  const json& j = pj.value;
  const detail::SchemaReader r(pj.map);
  r.check_keys(j, "",
               {"schema", "name", "operator", "seeds", "outputs", "report", "reference", "variants", "geometry",
                "metric", "steps", "noise", "trim", "n_iters", "init", "record_every"});

  const std::string schema = r.string(j, "", "schema");
  if (schema != kSchemaVersion)
    r.fail("/schema", "unsupported schema '" + schema + "' (expected '" + kSchemaVersion + "')");

  ExperimentConfig cfg;
  cfg.source = j;
  cfg.name = r.string(j, "", "name");
  if (!j.contains("operator")) r.fail("", "missing required key 'operator'");
  cfg.op = detail::parse_operator(r, j.at("operator"), "/operator");

  if (!j.contains("seeds") || !j.at("seeds").is_array() || j.at("seeds").empty())
    r.fail(j.contains("seeds") ? "/seeds" : "", "'seeds' must be a nonempty array of integers");
  std::set<std::uint64_t> seen;
  for (const json& s : j.at("seeds")) {
    if (!s.is_number_integer() || s.get<std::int64_t>() < 0) r.fail("/seeds", "seeds must be nonnegative integers");
    if (!seen.insert(s.get<std::uint64_t>()).second) r.fail("/seeds", "seeds must be distinct");
    cfg.seeds.push_back(s.get<std::uint64_t>());
  }

  cfg.outputs = r.string(j, "", "outputs", "out/" + cfg.name);

  if (j.contains("report")) {
    if (!j.at("report").is_array()) r.fail("/report", "'report' must be an array");
    cfg.report.clear();
    for (const json& m : j.at("report")) {
      if (!m.is_string() ||
          std::find(kReportMetrics.begin(), kReportMetrics.end(), m.get<std::string>()) == kReportMetrics.end())
        r.fail("/report", "unknown report metric " + m.dump());
      cfg.report.push_back(m.get<std::string>());
    }
  }

  if (j.contains("reference")) {
    r.check_keys(j.at("reference"), "/reference", {"tol"});
    cfg.reference_tol = r.number(j.at("reference"), "/reference", "tol", 1e-12);
    if (!(cfg.reference_tol > 0.0)) r.fail("/reference/tol", "reference tol must be positive");
  }

  if (!j.contains("variants") || !j.at("variants").is_array() || j.at("variants").empty())
    r.fail(j.contains("variants") ? "/variants" : "", "'variants' must be a nonempty array");
  std::set<std::string> names;
  const auto& vs = j.at("variants");
  for (std::size_t i = 0; i < vs.size(); ++i) {
    const std::string vptr = "/variants/" + std::to_string(i);
    const json& v = vs[i];
    r.check_keys(v, vptr, {"name", "geometry", "metric", "steps", "noise", "trim", "n_iters", "init", "record_every"});
    VariantConfig vc;
    vc.name = r.string(v, vptr, "name");
    if (vc.name.empty() || vc.name.find_first_of("/\\") != std::string::npos)
      r.fail(vptr + "/name", "variant names must be nonempty and contain no path separators");
    if (!names.insert(vc.name).second) r.fail(vptr + "/name", "duplicate variant name '" + vc.name + "'");
    vc.run = detail::parse_run(r, j, v, vptr, cfg.op.dim, vc.echo);
    cfg.variants.push_back(std::move(vc));
  }
  return cfg;
}

inline ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment(ss.str(), path);
}

}  // namespace bskm
