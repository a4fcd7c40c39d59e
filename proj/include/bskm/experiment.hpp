#pragma once

// Experiment harness: runs every (variant x seed) of a config against one shared operator, writes
// one trace CSV and one metadata JSON per run, and reduces the saved files into a summary table.
//
// Output layout under the output directory:
//   manifest.json
//   <variant>/seed_<s>.csv, <variant>/seed_<s>.json
//   summary.json, summary.txt

#include "bskm/analysis.hpp"
#include "bskm/config.hpp"
#include "bskm/io.hpp"
#include "bskm/iteration.hpp"
#include "bskm/operators.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace bskm {

namespace fs = std::filesystem;

struct OperatorInstance {
  OperatorSpec op;
  json meta;
};

inline OperatorInstance build_operator(const OperatorConfig& c) {
  OperatorInstance out;
  switch (c.kind) {
    case OperatorKind::softmax_policy: {
      PolicyOptions opt;
      opt.dim = c.dim;
      opt.eta = c.eta;
      opt.matrix_seed = c.matrix_seed;
      opt.scale = c.matrix_scale;
      opt.probe_trials = c.probe_trials;
      opt.probe_seed = c.probe_seed;
      PolicyInstance inst = make_softmax_policy(opt);
      out.op = std::move(inst.op);
      out.meta = {{"kind", "softmax_policy"}, {"dim", c.dim},           {"eta", c.eta},
                  {"matrix_seed", c.matrix_seed}, {"matrix_scale", inst.scale}, {"auto_scaled", inst.auto_scaled},
                  {"probe_lipschitz", inst.probe}, {"probe_trials", c.probe_trials}};
      break;
    }
    case OperatorKind::affine_average: {
      out.op = make_affine_average({c.dim, c.matrix_seed, c.norm, c.lambda});
      out.meta = {{"kind", "affine_average"}, {"dim", c.dim},         {"matrix_seed", c.matrix_seed},
                  {"norm", c.norm},           {"lambda", c.lambda}, {"norm_estimate", operator_norm_estimate(out.op.matrix)}};
      break;
    }
    case OperatorKind::identity:
      out.op = OperatorSpec::identity(c.dim);
      out.meta = {{"kind", "identity"}, {"dim", c.dim}};
      break;
  }
  return out;
}

struct Reference {
  FixedPointRef ref;
  bool converged = true;
  std::string method;
};

/// Closed form for the affine map, the KM oracle otherwise. An oracle that stalls above tol
/// still yields its best iterate, flagged as not converged.
inline Reference compute_reference(const OperatorSpec& op, double tol) {
  Reference r;
  if (op.kind == OperatorKind::affine_average) {
    r.method = "linear_solve";
    r.ref.point = affine_fixed_point(op);
    r.ref.residual_norm = (r.ref.point - apply(op, r.ref.point)).norm();
    return r;
  }
  r.method = "km_oracle";
  try {
    r.ref = fixed_point_oracle(op, tol);
  } catch (const NoConvergence& e) {
    r.ref = e.best;
    r.converged = false;
  }
  return r;
}

inline json to_json(const Reference& r) {
  return {{"method", r.method},
          {"converged", r.converged},
          {"residual_norm", r.ref.residual_norm},
          {"iterations", r.ref.iterations_used},
          {"point", vector_json(r.ref.point)}};
}

inline std::string seed_stem(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

inline void write_text_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
  if (!out) throw Error("write failed for " + p.string());
}

inline std::string read_text_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunOutcome {
  std::string variant;
  std::uint64_t seed = 0;
  bool diverged = false;
  double wall_seconds = 0.0;
};

/// Executes one run and writes its CSV and metadata. Divergence is recorded, not rethrown.
inline RunOutcome execute_run(const VariantConfig& v, const OperatorInstance& inst, const Reference& ref,
                              std::uint64_t seed, const fs::path& dir) {
  const IterationConfig cfg = v.run.instantiate(inst.op, seed);
  RunOutcome outcome{v.name, seed, false, 0.0};

  const auto t0 = std::chrono::steady_clock::now();
  Trace trace;
  try {
    trace = run(cfg, ref.ref);
  } catch (Diverged& e) {
    trace = std::move(e.trace);
    outcome.diverged = true;
  }
  outcome.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::ostringstream csv;
  write_trace_csv(csv, trace);
  write_text_file(dir / (seed_stem(seed) + ".csv"), csv.str());

  const double dist = outcome.diverged ? std::numeric_limits<double>::quiet_NaN() : trace.final_dist_to_ref;
  json meta = {{"variant", v.name},
               {"seed", seed},
               {"config", v.echo},
               {"rng", rng_algorithm_id()},
               {"operator", inst.meta},
               {"reference", {{"method", ref.method}, {"converged", ref.converged}, {"residual_norm", ref.ref.residual_norm}}},
               {"theoretical_p", v.run.theoretical_p()},
               {"non_a3", !v.run.steps.robbins_monro()},
               {"wall_seconds", outcome.wall_seconds},
               {"diverged", outcome.diverged},
               {"n_iters", v.run.n_iters},
               {"stride", trace.stride},
               {"rows", trace.rows.size()},
               {"total_clamps", trace.total_clamps},
               {"final_avg_residual", number_or_null(trace.final_avg_residual())},
               {"final_bregman_residual", number_or_null(outcome.diverged ? NAN : trace.final_bregman_residual)},
               {"final_norm_residual", number_or_null(outcome.diverged ? NAN : trace.final_norm_residual)},
               {"final_dist_to_ref_l1", number_or_null(dist)},
               {"final_iterate", vector_json(trace.final_iterate)}};
  write_text_file(dir / (seed_stem(seed) + ".json"), meta.dump(2) + "\n");
  return outcome;
}

struct SummaryRow {
  std::string name;
  std::int64_t runs = 0;
  std::int64_t diverged = 0;
  double median_avg_residual = NAN;
  double mean_avg_residual = NAN;
  double median_dist_l1 = NAN;
  double mean_dist_l1 = NAN;
  double median_rate_slope = NAN;
  double theoretical_p = NAN;
  double envelope_pass_rate = NAN;
};

struct SummaryTable {
  std::string name;
  std::vector<std::string> report;
  std::vector<SummaryRow> rows;
};

inline double median(std::vector<double> v) {
  std::erase_if(v, [](double x) { return !std::isfinite(x); });
  if (v.empty()) return NAN;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline double mean(std::vector<double> v) {
  std::erase_if(v, [](double x) { return !std::isfinite(x); });
  if (v.empty()) return NAN;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Rebuilds the summary from the files in `dir` alone.
inline SummaryTable summarize(const fs::path& dir) {
  const json manifest = json::parse(read_text_file(dir / "manifest.json"));
  SummaryTable table;
  table.name = manifest.at("name").get<std::string>();
  table.report = manifest.at("report").get<std::vector<std::string>>();
  const auto seeds = manifest.at("seeds").get<std::vector<std::uint64_t>>();

  for (const auto& vname : manifest.at("variants").get<std::vector<std::string>>()) {
    SummaryRow row;
    row.name = vname;
    std::vector<double> avg, dist, slope;
    std::int64_t envelope_runs = 0, envelope_pass = 0;
    for (std::uint64_t s : seeds) {
      const fs::path base = dir / vname / seed_stem(s);
      const json meta = json::parse(read_text_file(base.string() + ".json"));
      std::ifstream csv(base.string() + ".csv", std::ios::binary);
      if (!csv) throw Error("missing trace " + base.string() + ".csv");
      const Trace t = read_trace_csv(csv);
      ++row.runs;
      row.theoretical_p = meta.at("theoretical_p").get<double>();
      if (meta.at("diverged").get<bool>()) {
        ++row.diverged;
        continue;
      }
      avg.push_back(t.rows.empty() ? NAN : t.rows.back().avg_residual);
      dist.push_back(number_or_nan(meta.at("final_dist_to_ref_l1")));
      if (t.rows.size() >= 100) {
        try {
          slope.push_back(fit_rate(t, row.theoretical_p, 0.5).fitted_slope);
        } catch (const DegenerateFit&) {
        }
        ++envelope_runs;
        envelope_pass += bound_envelope_check(t, row.theoretical_p) ? 1 : 0;
      }
    }
    row.median_avg_residual = median(avg);
    row.mean_avg_residual = mean(avg);
    row.median_dist_l1 = median(dist);
    row.mean_dist_l1 = mean(dist);
    row.median_rate_slope = median(slope);
    if (envelope_runs > 0) row.envelope_pass_rate = static_cast<double>(envelope_pass) / static_cast<double>(envelope_runs);
    table.rows.push_back(row);
  }
  return table;
}

inline json to_json(const SummaryTable& t) {
  json rows = json::array();
  for (const SummaryRow& r : t.rows) {
    rows.push_back({{"name", r.name},
                    {"runs", r.runs},
                    {"diverged", r.diverged},
                    {"median_final_avg_residual", number_or_null(r.median_avg_residual)},
                    {"mean_final_avg_residual", number_or_null(r.mean_avg_residual)},
                    {"median_final_dist_to_ref_l1", number_or_null(r.median_dist_l1)},
                    {"mean_final_dist_to_ref_l1", number_or_null(r.mean_dist_l1)},
                    {"median_rate_slope", number_or_null(r.median_rate_slope)},
                    {"theoretical_p", number_or_null(r.theoretical_p)},
                    {"envelope_pass_rate", number_or_null(r.envelope_pass_rate)}});
  }
  return {{"name", t.name}, {"report", t.report}, {"rows", rows}};
}

inline std::string format_sci(double v, int precision = 4) {
  if (!std::isfinite(v)) return "-";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, precision);
  return std::string(buf, res.ptr);
}

inline std::string format_fixed(double v, int precision = 3) {
  if (!std::isfinite(v)) return "-";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, precision);
  return std::string(buf, res.ptr);
}

/// Left-aligned first column, right-aligned numbers.
inline std::string render_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& body) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& row : body) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) os << "  ";
      if (c == 0) os << std::left;
      else os << std::right;
      os << std::setw(static_cast<int>(width[c])) << cells[c];
    }
    os << '\n';
  };
  line(header);
  std::size_t total = 2 * (header.size() - 1);
  for (std::size_t w : width) total += w;
  os << std::string(total, '-') << '\n';
  for (const auto& row : body) line(row);
  return os.str();
}

inline bool reports(const SummaryTable& t, const std::string& metric) {
  return std::find(t.report.begin(), t.report.end(), metric) != t.report.end();
}

inline std::string render_summary(const SummaryTable& t) {
  std::vector<std::string> header = {"algorithm", "runs"};
  if (reports(t, "final_avg_residual")) header.insert(header.end(), {"median avg residual", "mean avg residual"});
  if (reports(t, "final_dist_to_ref_l1")) header.insert(header.end(), {"median l1 dist", "mean l1 dist"});
  if (reports(t, "rate_fit")) header.insert(header.end(), {"median slope", "-p"});
  if (reports(t, "envelope_check")) header.push_back("envelope pass");
  header.push_back("diverged");

  std::vector<std::vector<std::string>> body;
  for (const SummaryRow& r : t.rows) {
    std::vector<std::string> cells = {r.name, std::to_string(r.runs)};
    if (reports(t, "final_avg_residual"))
      cells.insert(cells.end(), {format_sci(r.median_avg_residual), format_sci(r.mean_avg_residual)});
    if (reports(t, "final_dist_to_ref_l1"))
      cells.insert(cells.end(), {format_sci(r.median_dist_l1), format_sci(r.mean_dist_l1)});
    if (reports(t, "rate_fit"))
      cells.insert(cells.end(), {format_fixed(r.median_rate_slope), format_fixed(-r.theoretical_p)});
    if (reports(t, "envelope_check")) cells.push_back(format_fixed(r.envelope_pass_rate, 2));
    cells.push_back(std::to_string(r.diverged));
    body.push_back(std::move(cells));
  }
  return t.name + "\n" + render_table(header, body);
}

inline void write_summary(const fs::path& dir, const SummaryTable& t) {
  write_text_file(dir / "summary.json", to_json(t).dump(2) + "\n");
  write_text_file(dir / "summary.txt", render_summary(t));
}

struct ExperimentResult {
  SummaryTable summary;
  std::vector<RunOutcome> runs;
  Reference reference;
  bool any_diverged = false;
};

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const OperatorInstance inst = build_operator(cfg.op);
  ExperimentResult result;
  result.reference = compute_reference(inst.op, cfg.reference_tol);

  fs::create_directories(out_dir);
  json variants = json::array();
  for (const auto& v : cfg.variants) variants.push_back(v.name);
  const json manifest = {{"schema", kSchemaVersion},     {"name", cfg.name},
                         {"variants", variants},         {"seeds", cfg.seeds},
                         {"report", cfg.report},         {"rng", rng_algorithm_id()},
                         {"operator", inst.meta},        {"reference", to_json(result.reference)},
                         {"config", cfg.source}};
  write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

  for (const auto& v : cfg.variants) {
    const fs::path vdir = out_dir / v.name;
    fs::create_directories(vdir);
    for (std::uint64_t s : cfg.seeds) {
      result.runs.push_back(execute_run(v, inst, result.reference, s, vdir));
      result.any_diverged = result.any_diverged || result.runs.back().diverged;
    }
  }

  result.summary = summarize(out_dir);
  write_summary(out_dir, result.summary);
  return result;
}

// Polynomial step-size sweep.

struct RateStudyOptions {
  std::string geometry = "euclidean";  // euclidean | neg_entropy_simplex | p_norm
  double p_norm = 1.5;
  std::vector<double> gammas;
  std::int64_t n_iters = 10'000;
  std::int64_t seeds = 5;
  std::int64_t dim = 10;
  double sigma = 0.0;
  std::uint64_t matrix_seed = 1;
};

struct RateStudyRow {
  double gamma = 0.0;
  double step_sum = 0.0;
  double median_slope = NAN;
  double exponent_in_n = 0.0;   // -p (1 - gamma)
  double exponent_in_a = 0.0;   // -p
  double envelope_pass_rate = NAN;
  std::int64_t diverged = 0;
};

inline LegendreGeometry rate_study_geometry(const RateStudyOptions& o) {
  if (o.geometry == "euclidean") return LegendreGeometry::euclidean();
  if (o.geometry == "neg_entropy_simplex") return LegendreGeometry::neg_entropy_simplex();
  if (o.geometry == "p_norm") return LegendreGeometry::p_norm(o.p_norm);
  throw ConfigError("unknown geometry '" + o.geometry + "' (euclidean, neg_entropy_simplex, p_norm)");
}

/// Softmax policy for the simplex geometry, averaged affine map otherwise; uniform start.
inline std::vector<RateStudyRow> rate_study(const RateStudyOptions& o) {
  if (o.gammas.empty()) throw ConfigError("rate-study needs at least one gamma");
  for (double g : o.gammas)
    if (!(g > 0.5 && g < 1.0)) throw ConfigError("each gamma must lie in (1/2, 1), got " + format_double(g));
  if (o.seeds < 1) throw ConfigError("rate-study needs at least one seed");
  if (o.n_iters < 100) throw ConfigError("rate-study needs n >= 100");
  if (!(o.sigma >= 0.0)) throw ConfigError("sigma must be nonnegative");

  const LegendreGeometry geom = rate_study_geometry(o);
  OperatorConfig oc;
  oc.dim = o.dim;
  oc.matrix_seed = o.matrix_seed;
  oc.kind = geom.kind == GeometryKind::neg_entropy_simplex ? OperatorKind::softmax_policy : OperatorKind::affine_average;
  const OperatorSpec op = build_operator(oc).op;
  const double p = rate_exponent(geom);

  std::vector<RateStudyRow> rows;
  for (double gamma : o.gammas) {
    RateStudyRow row;
    row.gamma = gamma;
    row.exponent_in_n = -p * (1.0 - gamma);
    row.exponent_in_a = -p;
    row.step_sum = step_sum(StepSchedule::polynomial(gamma), o.n_iters);
    std::vector<double> slopes;
    std::int64_t pass = 0, completed = 0;
    for (std::int64_t s = 1; s <= o.seeds; ++s) {
      IterationConfig c;
      c.op = op;
      c.geometry = geom;
      c.steps = StepSchedule::polynomial(gamma);
      c.noise = o.sigma > 0.0 ? NoiseModel::gaussian(o.sigma) : NoiseModel::zero();
      c.noise.space = NoiseSpace::dual;
      c.n_iters = o.n_iters;
      c.seed = static_cast<std::uint64_t>(s);
      try {
        const Trace t = run(c);
        ++completed;
        try {
          slopes.push_back(fit_rate(t, p, 0.5).fitted_slope);
        } catch (const DegenerateFit&) {
        }
        pass += bound_envelope_check(t, p) ? 1 : 0;
      } catch (const Diverged&) {
        ++row.diverged;
      }
    }
    row.median_slope = median(slopes);
    if (completed > 0) row.envelope_pass_rate = static_cast<double>(pass) / static_cast<double>(completed);
    rows.push_back(row);
  }
  return rows;
}

inline std::string render_rate_study(const RateStudyOptions& o, const std::vector<RateStudyRow>& rows) {
  std::vector<std::vector<std::string>> body;
  for (const auto& r : rows) {
    body.push_back({format_fixed(r.gamma, 3), format_fixed(r.step_sum, 4), format_fixed(r.median_slope, 4),
                    format_fixed(r.exponent_in_n, 4), format_fixed(r.exponent_in_a, 4),
                    format_fixed(r.envelope_pass_rate, 2), std::to_string(r.diverged)});
  }
  return "rate study: geometry=" + o.geometry + " n=" + std::to_string(o.n_iters) + " seeds=" +
         std::to_string(o.seeds) + " sigma=" + format_double(o.sigma) + "\n" +
         render_table({"gamma", "A_N", "median slope vs A_N", "-p(1-gamma) in N", "-p in A_N", "envelope pass",
                       "diverged"},
                      body);
}

inline json to_json(const RateStudyRow& r) {
  return {{"gamma", r.gamma},
          {"step_sum", r.step_sum},
          {"median_slope", number_or_null(r.median_slope)},
          {"exponent_in_n", r.exponent_in_n},
          {"exponent_in_a", r.exponent_in_a},
          {"envelope_pass_rate", number_or_null(r.envelope_pass_rate)},
          {"diverged", r.diverged}};
}

}  // namespace bskm
