#pragma once

// Trace CSV and JSON serialization.
//
// Doubles are written in shortest round-trip form (std::to_chars), so a trace read back from
// disk is bit-identical to the one that was written.

#include "bskm/analysis.hpp"
#include "bskm/iteration.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace bskm {

using json = nlohmann::json;

inline constexpr std::string_view kTraceHeader =
    "n,alpha,bregman_residual,norm_residual,step_sum,avg_residual,dist_to_ref,clamp_count";

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return shortest(v);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error("trace csv: bad number '" + std::string(s) + "'");
  return v;
}

inline void write_trace_csv(std::ostream& os, const Trace& t) {
  os << kTraceHeader << '\n';
  for (const TraceRow& r : t.rows) {
    os << r.n << ',' << format_double(r.alpha) << ',' << format_double(r.bregman_residual) << ','
       << format_double(r.norm_residual) << ',' << format_double(r.step_sum) << ','
       << format_double(r.avg_residual) << ',' << format_double(r.dist_to_ref) << ',' << r.clamp_count << '\n';
  }
}

/// Reads the rows back. Run-level fields (final iterate, stride) live in the metadata sidecar.
inline Trace read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kTraceHeader) throw Error("trace csv: missing or unexpected header");
  Trace t;
  std::vector<std::string_view> cells;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    cells.clear();
    std::string_view rest = line;
    for (;;) {
      const auto comma = rest.find(',');
      cells.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cells.size() != 8) throw Error("trace csv: expected 8 columns, got " + std::to_string(cells.size()));
    TraceRow r;
    r.n = static_cast<std::int64_t>(parse_double(cells[0]));
    r.alpha = parse_double(cells[1]);
    r.bregman_residual = parse_double(cells[2]);
    r.norm_residual = parse_double(cells[3]);
    r.step_sum = parse_double(cells[4]);
    r.avg_residual = parse_double(cells[5]);
    r.dist_to_ref = parse_double(cells[6]);
    r.clamp_count = static_cast<std::int64_t>(parse_double(cells[7]));
    t.rows.push_back(r);
  }
  if (!t.rows.empty()) t.n_iters = t.rows.back().n + 1;
  return t;
}

/// JSON has no NaN; non-finite values become null.
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline double number_or_nan(const json& j) {
  return j.is_number() ? j.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

inline json to_json(const RateFit& f) {
  return {{"fitted_slope", number_or_null(f.fitted_slope)},
          {"intercept", number_or_null(f.intercept)},
          {"theoretical_p", f.theoretical_p},
          {"window", {f.n_start, f.n_end}},
          {"r_squared", number_or_null(f.r_squared)}};
}

inline json to_json(const DescentCheckReport& r) {
  return {{"n_probe", r.n_probe},
          {"trials", r.trials},
          {"alpha", r.alpha},
          {"residual_now", r.residual_now},
          {"lhs_mean", r.lhs_mean},
          {"rhs", r.rhs},
          {"standard_error", r.standard_error},
          {"fitted_L", r.fitted_L},
          {"fitted_sigma2", r.fitted_sigma2},
          {"satisfied", r.satisfied}};
}

inline json to_json(const LegendreGeometry& g) {
  json j = {{"kind", to_string(g.kind)}, {"factor", g.factor}, {"modulus_c", g.modulus_c},
            {"modulus_q", g.modulus_q}, {"floor", g.floor}};
  if (g.kind == GeometryKind::p_norm) j["p"] = g.p;
  return j;
}

inline json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace bskm
