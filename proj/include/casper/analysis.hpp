#pragma once

// RT curves, linear and log fits, fits against human reference data.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "casper/error.hpp"
#include "casper/experiments.hpp"
#include "casper/grammar.hpp"

namespace casper {

// Model-side and human-side values quoted for comparison. Units are model
// iterations unless marked ms.
namespace anchors {
inline constexpr double kSim6RelationOnlySlope = 12.02;       // iterations/item, set sizes 2 to 8
inline constexpr double kSim6RelationOnlyRtAt2 = 41.09;
inline constexpr double kSim6RelationOnlyRtAt8 = 113.23;
inline constexpr double kSim7RelationOnlySlope = 13.25;       // iterations/item, set sizes 2 to 8
inline constexpr double kSim1FeatureMsPerIteration = 4.5;
inline constexpr double kSim1ConjunctionMsPerIteration = 6.3;
inline constexpr double kSim1ConjunctionHumanSlopeMs = 28.7;  // ms/item
inline constexpr double kSim1FeatureR2 = 0.922;
inline constexpr double kSim1ConjunctionR2 = 0.999;
inline constexpr double kSim1CombinedR2 = 0.998;
inline constexpr double kSim6RelationOnlyMsPerIteration = 7.07;
inline constexpr double kSim5PoorMsPerIteration = 6.72;
inline constexpr double kRelationalSearchHumanSlopeMs = 85.0;  // ms/item, above/below relations
inline constexpr double kExp1aRelationOnlyLogSlopeMs = 596.0;  // ms per natural-log unit
}  // namespace anchors

struct RTPoint {
  double set_size = 0.0;
  double mean_rt = 0.0;
  double sem = 0.0;
};

struct RTCurve {
  std::string condition;
  std::vector<RTPoint> points;  // strictly increasing set size

  std::optional<double> at(double set_size) const {
    for (const auto& p : points) {
      if (p.set_size == set_size) return p.mean_rt;
    }
    return std::nullopt;
  }
};

/// Mean and SEM of subject means; SEM is zero for fewer than two values.
inline RTPoint summarize(double set_size, const std::vector<double>& values) {
  RTPoint p;
  p.set_size = set_size;
  if (values.empty()) {
    p.mean_rt = std::nan("");
    return p;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  p.mean_rt = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - p.mean_rt) * (v - p.mean_rt);
    const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    p.sem = sd / std::sqrt(static_cast<double>(values.size()));
  }
  return p;
}

/// Subject means per set size for one condition. Subjects without a found
/// target in a cell are left out of that point.
inline std::vector<std::vector<double>> subject_means(const ExperimentResult& result, const std::string& condition) {
  std::vector<std::vector<double>> out(result.spec.set_sizes.size());
  bool seen = false;
  for (const auto& cell : result.cells) {
    if (cell.condition != condition) continue;
    seen = true;
    if (cell.n_found > 0) out[cell.set_size_index].push_back(cell.mean_rt);
  }
  if (!seen) throw UnknownName("condition", condition);
  return out;
}

inline RTCurve make_curve(const ExperimentResult& result, const std::string& condition) {
  const auto means = subject_means(result, condition);
  std::vector<std::size_t> order(result.spec.set_sizes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return result.spec.set_sizes[a] < result.spec.set_sizes[b]; });
  RTCurve curve{condition, {}};
  for (std::size_t i : order) curve.points.push_back(summarize(static_cast<double>(result.spec.set_sizes[i]), means[i]));
  return curve;
}

inline std::vector<RTCurve> make_curves(const ExperimentResult& result) {
  std::vector<RTCurve> out;
  for (const auto& c : result.spec.conditions) out.push_back(make_curve(result, c.name));
  return out;
}

/// Per-cell means and SEM over subjects.
inline std::string aggregate_csv(const ExperimentResult& result) {
  std::string out = "experiment,condition,set_size,n_subjects,mean_rt,sem,n_trials,n_found,n_errors,n_timeouts\n";
  for (const auto& cond : result.spec.conditions) {
    for (std::size_t si = 0; si < result.spec.set_sizes.size(); ++si) {
      const std::size_t n = result.spec.set_sizes[si];
      std::vector<double> means;
      std::size_t trials = 0, found = 0, errors = 0, timeouts = 0;
      for (const CellResult* cell : result.cells_for(cond.name, n)) {
        if (cell->n_found > 0) means.push_back(cell->mean_rt);
        trials += cell->trials.size();
        found += cell->n_found;
        errors += cell->n_errors;
        timeouts += cell->n_timeouts;
      }
      const RTPoint p = summarize(static_cast<double>(n), means);
      out += result.spec.name + ',' + cond.name + ',' + std::to_string(n) + ',' + std::to_string(means.size()) + ',' +
             format_double(p.mean_rt) + ',' + format_double(p.sem) + ',' + std::to_string(trials) + ',' +
             std::to_string(found) + ',' + std::to_string(errors) + ',' + std::to_string(timeouts) + '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Fits

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Ordinary least squares of y on x. R^2 is 1 for an exact fit and 0 when y
/// is constant.
inline LinearFit ols(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error("fit inputs differ in length");
  if (x.size() < 2) throw Error("a fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw Error("a fit needs at least two distinct x values");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (syy > 0.0) {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - (f.intercept + f.slope * x[i]);
      ss_res += e * e;
    }
    f.r2 = 1.0 - ss_res / syy;
  }
  return f;
}

namespace detail {

inline void curve_xy(const RTCurve& curve, bool include_target_only, bool log_x, std::vector<double>& x,
                     std::vector<double>& y) {
  for (const auto& p : curve.points) {
    if (!include_target_only && p.set_size == 1.0) continue;
    if (log_x && !(p.set_size >= 1.0)) throw Error("log fit needs set sizes of at least 1");
    x.push_back(log_x ? std::log(p.set_size) : p.set_size);
    y.push_back(p.mean_rt);
  }
}

}  // namespace detail

/// Mean RT against set size.
inline LinearFit fit_linear(const RTCurve& curve, bool include_target_only) {
  std::vector<double> x, y;
  detail::curve_xy(curve, include_target_only, false, x, y);
  return ols(x, y);
}

/// Mean RT against the natural log of set size; the slope is per log unit.
inline LinearFit fit_log(const RTCurve& curve, bool include_target_only) {
  std::vector<double> x, y;
  detail::curve_xy(curve, include_target_only, true, x, y);
  return ols(x, y);
}

/// (rt(high) - rt(low)) / (high - low).
inline double slope_between(const RTCurve& curve, double n_low, double n_high) {
  const auto lo = curve.at(n_low);
  const auto hi = curve.at(n_high);
  if (!lo) throw Error("set size " + format_double(n_low) + " not in curve '" + curve.condition + "'");
  if (!hi) throw Error("set size " + format_double(n_high) + " not in curve '" + curve.condition + "'");
  if (n_low == n_high) throw Error("slope needs two distinct set sizes");
  return (*hi - *lo) / (n_high - n_low);
}

/// Second divided differences of mean RT over consecutive listed set sizes.
/// All negative means the curve bends downward (negatively accelerating).
inline std::vector<double> second_differences(const RTCurve& curve, const std::vector<double>& set_sizes) {
  if (set_sizes.size() < 3) throw Error("curvature needs at least three set sizes");
  std::vector<double> y;
  for (double n : set_sizes) {
    const auto v = curve.at(n);
    if (!v) throw Error("set size " + format_double(n) + " not in curve '" + curve.condition + "'");
    y.push_back(*v);
  }
  std::vector<double> out;
  for (std::size_t i = 0; i + 2 < y.size(); ++i) {
    const double d1 = (y[i + 1] - y[i]) / (set_sizes[i + 1] - set_sizes[i]);
    const double d2 = (y[i + 2] - y[i + 1]) / (set_sizes[i + 2] - set_sizes[i + 1]);
    out.push_back((d2 - d1) / (set_sizes[i + 2] - set_sizes[i]));
  }
  return out;
}

inline bool negatively_accelerating(const RTCurve& curve, const std::vector<double>& set_sizes) {
  const auto d = second_differences(curve, set_sizes);
  return std::all_of(d.begin(), d.end(), [](double v) { return v < 0.0; });
}

/// Per-subject slope of a linear or log fit over the subject's cell means,
/// in subject order. Subjects missing any point are skipped.
inline std::vector<double> subject_slopes(const ExperimentResult& result, const std::string& condition,
                                          bool include_target_only, bool log_x) {
  std::vector<double> out;
  for (std::size_t s = 0; s < result.spec.subjects; ++s) {
    RTCurve curve{condition, {}};
    bool complete = true;
    std::vector<std::pair<std::size_t, double>> pts;
    for (const auto& cell : result.cells) {
      if (cell.condition != condition || cell.subject != s) continue;
      if (cell.n_found == 0) complete = false;
      pts.emplace_back(cell.set_size, cell.mean_rt);
    }
    if (pts.empty()) throw UnknownName("condition", condition);
    if (!complete) continue;
    std::sort(pts.begin(), pts.end());
    for (const auto& [n, rt] : pts) curve.points.push_back({static_cast<double>(n), rt, 0.0});
    out.push_back(log_x ? fit_log(curve, include_target_only).slope : fit_linear(curve, include_target_only).slope);
  }
  return out;
}

inline std::vector<double> subject_log_slopes(const ExperimentResult& result, const std::string& condition,
                                              bool include_target_only) {
  return subject_slopes(result, condition, include_target_only, true);
}

struct PairedComparison {
  double mean_difference = 0.0;
  double sem = 0.0;
  std::size_t n = 0;

  // |mean| < 2 SEM
  bool indistinguishable() const { return std::abs(mean_difference) < 2.0 * sem; }
};

/// Paired difference a - b of per-subject values.
inline PairedComparison paired_difference(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error("paired comparison needs equal-length inputs");
  if (a.size() < 2) throw Error("paired comparison needs at least two subjects");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const RTPoint p = summarize(0.0, d);
  return {p.mean_rt, p.sem, d.size()};
}

// ---------------------------------------------------------------------------
// Human reference data

struct ReferencePoint {
  double set_size = 0.0;
  double mean_rt_ms = 0.0;
};

struct ReferenceSeries {
  std::string label;  // matches a model condition name
  std::vector<ReferencePoint> points;
  std::string provenance;
};

/// Parses `label,set_size,mean_rt_ms` rows. A `# provenance: <note>` line is
/// mandatory; other `#` lines are ignored.
inline std::vector<ReferenceSeries> parse_reference_csv(std::string_view text) {
  std::string provenance;
  std::vector<ReferenceSeries> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string body = trim(line.substr(1));
      constexpr std::string_view key = "provenance:";
      if (body.compare(0, key.size(), key) == 0) provenance = trim(body.substr(key.size()));
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(trim(f));
    if (fields.size() != 3) throw ParseError(line_no, 1, "expected label,set_size,mean_rt_ms");
    if (!header) {
      if (fields[0] != "label" || fields[1] != "set_size" || fields[2] != "mean_rt_ms") {
        throw ParseError(line_no, 1, "missing header label,set_size,mean_rt_ms");
      }
      header = true;
      continue;
    }
    ReferencePoint p;
    try {
      std::size_t used = 0;
      p.set_size = std::stod(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument("trailing");
      p.mean_rt_ms = std::stod(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(line_no, 1, "malformed number");
    }
    auto it = std::find_if(out.begin(), out.end(), [&](const ReferenceSeries& s) { return s.label == fields[0]; });
    if (it == out.end()) {
      out.push_back({fields[0], {}, ""});
      it = out.end() - 1;
    }
    it->points.push_back(p);
  }
  if (provenance.empty()) throw Error("reference data needs a '# provenance: <source>' line");
  if (out.empty()) throw Error("reference data has no rows");
  for (auto& s : out) {
    s.provenance = provenance;
    std::sort(s.points.begin(), s.points.end(),
              [](const ReferencePoint& a, const ReferencePoint& b) { return a.set_size < b.set_size; });
  }
  return out;
}

namespace detail {

// Model and reference values on the shared grid after exclusion.
inline void aligned(const RTCurve& model, const ReferenceSeries& ref, bool exclude_target_only,
                    std::vector<double>& m, std::vector<double>& h) {
  for (const auto& rp : ref.points) {
    if (exclude_target_only && rp.set_size == 1.0) continue;
    const auto mv = model.at(rp.set_size);
    if (!mv) {
      throw Error("set size " + format_double(rp.set_size) + " of reference '" + ref.label +
                  "' is missing from the model curve");
    }
    m.push_back(*mv);
    h.push_back(rp.mean_rt_ms);
  }
  std::size_t model_points = 0;
  for (const auto& p : model.points) model_points += !(exclude_target_only && p.set_size == 1.0);
  if (model_points != m.size()) throw Error("model and reference '" + ref.label + "' use different set sizes");
  if (m.size() < 2) throw Error("comparison needs at least two shared set sizes");
}

inline double range_of(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// R^2 of reference h against model m mapped to ms by `scale` and shifted to
// the reference mean.
inline double scaled_r2(const std::vector<double>& m, const std::vector<double>& h, double scale) {
  const double mm = mean_of(m);
  const double mh = mean_of(h);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double pred = mh + scale * (m[i] - mm);
    ss_res += (h[i] - pred) * (h[i] - pred);
    ss_tot += (h[i] - mh) * (h[i] - mh);
  }
  if (!(ss_tot > 0.0)) throw Error("reference series is constant");
  return 1.0 - ss_res / ss_tot;
}

}  // namespace detail

/// Range of the reference divided by the range of the model on the shared
/// grid: milliseconds per model iteration.
inline double ms_per_iteration(const RTCurve& model, const ReferenceSeries& ref, bool exclude_target_only) {
  std::vector<double> m, h;
  detail::aligned(model, ref, exclude_target_only, m, h);
  const double model_range = detail::range_of(m);
  if (!(model_range > 0.0)) throw Error("model curve '" + model.condition + "' is constant");
  if (!(detail::range_of(h) > 0.0)) throw Error("reference series '" + ref.label + "' is constant");
  return detail::range_of(h) / model_range;
}

struct ConditionFit {
  std::string condition;
  double r2 = 0.0;
  double ms_per_iteration = 0.0;  // NaN when the model curve is constant
};

struct ReferenceFitReport {
  std::vector<ConditionFit> conditions;
  double concatenated_r2 = 0.0;
  double concatenated_ms_per_iteration = 0.0;
};

/// R^2 per condition and over the concatenated conditions. Each model curve
/// is converted to ms with its ms_per_iteration ratio and anchored at the
/// reference mean; the concatenated fit uses one ratio for all conditions.
/// A constant model predicts the reference mean (R^2 = 0).
inline ReferenceFitReport fit_r2_vs_reference(const std::vector<RTCurve>& models,
                                              const std::vector<ReferenceSeries>& refs, bool exclude_target_only) {
  ReferenceFitReport report;
  std::vector<double> all_m, all_h;
  for (const auto& ref : refs) {
    auto it = std::find_if(models.begin(), models.end(), [&](const RTCurve& c) { return c.condition == ref.label; });
    if (it == models.end()) throw UnknownName("condition", ref.label);
    std::vector<double> m, h;
    detail::aligned(*it, ref, exclude_target_only, m, h);
    const double model_range = detail::range_of(m);
    const double ratio = model_range > 0.0 ? detail::range_of(h) / model_range : std::nan("");
    ConditionFit fit{ref.label, 0.0, ratio};
    fit.r2 = detail::scaled_r2(m, h, model_range > 0.0 ? ratio : 0.0);
    report.conditions.push_back(fit);
    all_m.insert(all_m.end(), m.begin(), m.end());
    all_h.insert(all_h.end(), h.begin(), h.end());
  }
  if (all_m.empty()) throw Error("no reference series given");
  const double range = detail::range_of(all_m);
  report.concatenated_ms_per_iteration = range > 0.0 ? detail::range_of(all_h) / range : std::nan("");
  report.concatenated_r2 = detail::scaled_r2(all_m, all_h, range > 0.0 ? report.concatenated_ms_per_iteration : 0.0);
  return report;
}

/// Per-condition fit summary.
inline std::string analysis_csv(const std::vector<RTCurve>& curves, bool include_target_only) {
  std::string out =
      "condition,n_points,linear_slope,linear_intercept,linear_r2,log_slope,log_intercept,log_r2\n";
  for (const auto& c : curves) {
    const LinearFit lin = fit_linear(c, include_target_only);
    const LinearFit lg = fit_log(c, include_target_only);
    std::size_t n = 0;
    for (const auto& p : c.points) n += include_target_only || p.set_size != 1.0;
    out += c.condition + ',' + std::to_string(n) + ',' + format_double(lin.slope) + ',' + format_double(lin.intercept) +
           ',' + format_double(lin.r2) + ',' + format_double(lg.slope) + ',' + format_double(lg.intercept) + ',' +
           format_double(lg.r2) + '\n';
  }
  return out;
}

inline std::string reference_fit_csv(const ReferenceFitReport& report) {
  std::string out = "condition,r2,ms_per_iteration\n";
  for (const auto& c : report.conditions) {
    out += c.condition + ',' + format_double(c.r2) + ',' + format_double(c.ms_per_iteration) + '\n';
  }
  out += "concatenated," + format_double(report.concatenated_r2) + ',' +
         format_double(report.concatenated_ms_per_iteration) + '\n';
  return out;
}

}  // namespace casper
