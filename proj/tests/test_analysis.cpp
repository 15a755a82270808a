#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "casper/analysis.hpp"
#include "casper/plot.hpp"

using namespace casper;

namespace {

RTCurve curve_of(const std::string& name, const std::vector<double>& sizes, const std::vector<double>& rts) {
  RTCurve c{name, {}};
  for (std::size_t i = 0; i < sizes.size(); ++i) c.points.push_back({sizes[i], rts[i], 0.0});
  return c;
}

// Normal-equation form of simple regression, evaluated with raw sums.
struct Oracle {
  double slope, intercept, r2;
};

Oracle oracle_fit(const std::vector<double>& x, const std::vector<double>& y) {
  long double n = static_cast<long double>(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += static_cast<long double>(x[i]) * x[i];
    sxy += static_cast<long double>(x[i]) * y[i];
    syy += static_cast<long double>(y[i]) * y[i];
  }
  const long double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const long double intercept = (sy - slope * sx) / n;
  const long double r = (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  return {static_cast<double>(slope), static_cast<double>(intercept), static_cast<double>(r * r)};
}

bool close_rel(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

ReferenceSeries series(const std::string& label, const std::vector<double>& sizes, const std::vector<double>& ms) {
  ReferenceSeries s{label, {}, "synthetic"};
  for (std::size_t i = 0; i < sizes.size(); ++i) s.points.push_back({sizes[i], ms[i]});
  return s;
}

}  // namespace

TEST(Fits, ExactLine) {
  const RTCurve c = curve_of("c", {1, 5, 15, 30}, {15, 35, 85, 160});
  const LinearFit f = fit_linear(c, true);
  EXPECT_NEAR(f.slope, 5.0, 1e-12);
  EXPECT_NEAR(f.intercept, 10.0, 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
  const LinearFit g = fit_linear(c, false);
  EXPECT_NEAR(g.slope, 5.0, 1e-12);
}

TEST(Fits, ExactLogModel) {
  std::vector<double> sizes{1, 2, 4, 8, 16}, rts;
  for (double n : sizes) rts.push_back(20.0 + 7.5 * std::log(n));
  const LinearFit f = fit_log(curve_of("c", sizes, rts), true);
  EXPECT_NEAR(f.slope, 7.5, 1e-12);
  EXPECT_NEAR(f.intercept, 20.0, 1e-12);
  EXPECT_NEAR(f.r2, 1.0, 1e-12);
  EXPECT_LT(fit_linear(curve_of("c", sizes, rts), true).r2, 1.0);
}

TEST(Fits, TooFewPointsAfterExclusion) {
  EXPECT_THROW(fit_linear(curve_of("c", {1, 5}, {3, 10}), false), Error);
  EXPECT_NO_THROW(fit_linear(curve_of("c", {1, 5}, {3, 10}), true));
  EXPECT_THROW(fit_log(curve_of("c", {0, 5, 6}, {3, 10, 12}), true), Error);
}

TEST(Fits, AgreeWithIndependentOlsOnRandomInputs) {
  Rng rng(123);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> sizes, rts;
    double n = 1;
    for (std::size_t i = 0, m = 3 + rng.index(6); i < m; ++i) {
      sizes.push_back(n);
      rts.push_back(rng.uniform(0, 500));
      n += 1 + static_cast<double>(rng.index(10));
    }
    const RTCurve c = curve_of("c", sizes, rts);
    const LinearFit lin = fit_linear(c, true);
    const Oracle o = oracle_fit(sizes, rts);
    ASSERT_TRUE(close_rel(lin.slope, o.slope, 1e-9));
    ASSERT_TRUE(close_rel(lin.intercept, o.intercept, 1e-9));
    ASSERT_TRUE(close_rel(lin.r2, o.r2, 1e-9));

    std::vector<double> logs;
    for (double s : sizes) logs.push_back(std::log(s));
    const LinearFit lg = fit_log(c, true);
    const Oracle ol = oracle_fit(logs, rts);
    ASSERT_TRUE(close_rel(lg.slope, ol.slope, 1e-9));
    ASSERT_TRUE(close_rel(lg.r2, ol.r2, 1e-9));
  }
}

TEST(Fits, GeneratingModelFitsAtLeastAsWellAsTheOther) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = rng.uniform(0, 100), b = rng.uniform(0.5, 20);
    std::vector<double> sizes{1, 3, 5, 9, 17, 25, 37}, lin_y, log_y;
    for (double n : sizes) {
      lin_y.push_back(a + b * n);
      log_y.push_back(a + b * std::log(n));
    }
    ASSERT_GE(fit_linear(curve_of("c", sizes, lin_y), true).r2, fit_log(curve_of("c", sizes, lin_y), true).r2);
    ASSERT_GE(fit_log(curve_of("c", sizes, log_y), true).r2, fit_linear(curve_of("c", sizes, log_y), true).r2);
  }
}

TEST(Slopes, BetweenTwoSetSizes) {
  const RTCurve c = curve_of("c", {2, 4, 8}, {41.09, 70, 113.23});
  EXPECT_NEAR(slope_between(c, 2, 8), (113.23 - 41.09) / 6.0, 1e-12);
  EXPECT_NEAR(slope_between(c, 2, 8), anchors::kSim6RelationOnlySlope, 0.005);
  EXPECT_EQ(slope_between(curve_of("f", {2, 8}, {5, 5}), 2, 8), 0.0);
  EXPECT_THROW(slope_between(c, 2, 16), Error);
}

TEST(Slopes, SecondDifferences) {
  const RTCurve concave = curve_of("c", {2, 4, 8, 16}, {10, 20, 30, 40});
  const auto d = second_differences(concave, {2, 4, 8, 16});
  ASSERT_EQ(d.size(), 2u);
  EXPECT_NEAR(d[0], (10.0 / 4 - 10.0 / 2) / 6, 1e-12);
  EXPECT_TRUE(negatively_accelerating(concave, {2, 4, 8, 16}));
  EXPECT_FALSE(negatively_accelerating(curve_of("l", {2, 4, 8, 16}, {2, 4, 8, 16}), {2, 4, 8, 16}));
  EXPECT_THROW(second_differences(concave, {2, 4}), Error);
}

TEST(Summaries, SemIsSampleSdOverRootN) {
  const RTPoint p = summarize(4, {1, 2, 3, 4, 5});
  EXPECT_DOUBLE_EQ(p.mean_rt, 3.0);
  EXPECT_NEAR(p.sem, std::sqrt(2.5) / std::sqrt(5.0), 1e-12);
  EXPECT_EQ(summarize(4, {7}).sem, 0.0);
  EXPECT_TRUE(std::isnan(summarize(4, {}).mean_rt));
}

TEST(Summaries, PairedDifference) {
  const PairedComparison same = paired_difference({1, 2, 3, 4}, {1, 2, 3, 4});
  EXPECT_EQ(same.mean_difference, 0.0);
  EXPECT_EQ(same.sem, 0.0);
  EXPECT_FALSE(same.indistinguishable());  // zero spread: |0| < 0 fails
  const PairedComparison shifted = paired_difference({2, 3, 4, 5}, {1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(shifted.mean_difference, 1.0);
  EXPECT_FALSE(shifted.indistinguishable());
  const PairedComparison noisy = paired_difference({1, 3, 2, 4}, {2, 2, 3, 3});
  EXPECT_DOUBLE_EQ(noisy.mean_difference, 0.0);
  EXPECT_TRUE(noisy.indistinguishable());
  EXPECT_THROW(paired_difference({1}, {1}), Error);
  EXPECT_THROW(paired_difference({1, 2}, {1}), Error);
}

TEST(Reference, MsPerIteration) {
  const RTCurve model = curve_of("c", {1, 5, 15, 30}, {20, 40, 80, 140});
  const ReferenceSeries ref = series("c", {1, 5, 15, 30}, {500, 560, 700, 950});
  EXPECT_DOUBLE_EQ(ms_per_iteration(model, ref, false), 450.0 / 120.0);
  EXPECT_DOUBLE_EQ(ms_per_iteration(model, ref, true), 390.0 / 100.0);

  RTCurve doubled = model;
  for (auto& p : doubled.points) p.mean_rt *= 2;
  EXPECT_DOUBLE_EQ(ms_per_iteration(doubled, ref, false), ms_per_iteration(model, ref, false) / 2);

  RTCurve shifted = model;
  for (auto& p : shifted.points) p.mean_rt += 17.5;
  ReferenceSeries ref_shifted = ref;
  for (auto& p : ref_shifted.points) p.mean_rt_ms -= 120;
  EXPECT_DOUBLE_EQ(ms_per_iteration(shifted, ref_shifted, false), ms_per_iteration(model, ref, false));

  EXPECT_THROW(ms_per_iteration(curve_of("c", {1, 5, 15, 30}, {9, 9, 9, 9}), ref, false), Error);
  EXPECT_THROW(ms_per_iteration(curve_of("c", {1, 5, 15}, {1, 2, 3}), ref, false), Error);
}

TEST(Reference, FitR2) {
  const RTCurve a = curve_of("a", {1, 5, 15, 30}, {20, 40, 80, 140});
  const RTCurve b = curve_of("b", {1, 5, 15, 30}, {21, 25, 30, 36});
  std::vector<ReferenceSeries> identical{series("a", {1, 5, 15, 30}, {20, 40, 80, 140}),
                                         series("b", {1, 5, 15, 30}, {21, 25, 30, 36})};
  const ReferenceFitReport same = fit_r2_vs_reference({a, b}, identical, false);
  ASSERT_EQ(same.conditions.size(), 2u);
  for (const auto& c : same.conditions) {
    EXPECT_NEAR(c.r2, 1.0, 1e-12);
    EXPECT_NEAR(c.ms_per_iteration, 1.0, 1e-12);
  }
  EXPECT_NEAR(same.concatenated_r2, 1.0, 1e-12);
  EXPECT_NEAR(same.concatenated_ms_per_iteration, 1.0, 1e-12);

  const RTCurve flat = curve_of("a", {1, 5, 15, 30}, {50, 50, 50, 50});
  const ReferenceFitReport constant = fit_r2_vs_reference({flat}, {identical[0]}, false);
  EXPECT_LE(constant.conditions[0].r2, 0.0);
  EXPECT_TRUE(std::isnan(constant.conditions[0].ms_per_iteration));

  EXPECT_THROW(fit_r2_vs_reference({a}, {series("zzz", {1, 5}, {1, 2})}, false), UnknownName);
  EXPECT_THROW(fit_r2_vs_reference({a}, {series("a", {1, 5, 15}, {1, 2, 3})}, false), Error);

  // linear scaling of the model leaves R^2 at 1
  RTCurve scaled = a;
  for (auto& p : scaled.points) p.mean_rt = 3 + 0.25 * p.mean_rt;
  EXPECT_NEAR(fit_r2_vs_reference({scaled}, {identical[0]}, false).conditions[0].r2, 1.0, 1e-12);
}

TEST(Reference, CsvRequiresProvenanceAndHeader) {
  const std::string ok =
      "# provenance: synthetic test series\nlabel,set_size,mean_rt_ms\nconj,5,560\nconj,1,500\nfeat, 5 , 480\n";
  const auto refs = parse_reference_csv(ok);
  ASSERT_EQ(refs.size(), 2u);
  EXPECT_EQ(refs[0].label, "conj");
  EXPECT_EQ(refs[0].provenance, "synthetic test series");
  EXPECT_EQ(refs[0].points.front().set_size, 1.0);
  EXPECT_EQ(refs[1].points.front().mean_rt_ms, 480.0);

  EXPECT_THROW(parse_reference_csv("label,set_size,mean_rt_ms\nconj,5,560\n"), Error);
  EXPECT_THROW(parse_reference_csv("# provenance: x\nconj,5,560\n"), ParseError);
  EXPECT_THROW(parse_reference_csv("# provenance: x\nlabel,set_size,mean_rt_ms\nconj,5\n"), ParseError);
  EXPECT_THROW(parse_reference_csv("# provenance: x\nlabel,set_size,mean_rt_ms\nconj,five,560\n"), ParseError);
  EXPECT_THROW(parse_reference_csv("# provenance: x\nlabel,set_size,mean_rt_ms\n"), Error);
}

TEST(Anchors, ShippedScalars) {
  EXPECT_DOUBLE_EQ(anchors::kSim6RelationOnlyRtAt2, 41.09);
  EXPECT_DOUBLE_EQ(anchors::kSim6RelationOnlyRtAt8, 113.23);
  EXPECT_DOUBLE_EQ(anchors::kSim7RelationOnlySlope, 13.25);
  EXPECT_DOUBLE_EQ(anchors::kSim1ConjunctionMsPerIteration, 6.3);
  EXPECT_DOUBLE_EQ(anchors::kSim6RelationOnlyMsPerIteration, 7.07);
  // 85 ms/item over 12.02 iterations/item
  EXPECT_NEAR(anchors::kRelationalSearchHumanSlopeMs / anchors::kSim6RelationOnlySlope,
              anchors::kSim6RelationOnlyMsPerIteration, 0.005);
  EXPECT_DOUBLE_EQ(anchors::kExp1aRelationOnlyLogSlopeMs, 596.0);
}

TEST(Reports, AnalysisCsvAndPlot) {
  const std::vector<RTCurve> curves{curve_of("conj", {1, 5, 15, 30}, {15, 35, 85, 160}),
                                    curve_of("feat", {1, 5, 15, 30}, {10, 11, 12, 13})};
  const std::string csv = analysis_csv(curves, false);
  EXPECT_EQ(csv.rfind("condition,n_points,linear_slope,linear_intercept,linear_r2,log_slope,log_intercept,log_r2\n", 0),
            0u);
  EXPECT_NE(csv.find("\nconj,3,"), std::string::npos);
  EXPECT_NE(csv.find("\nfeat,3,"), std::string::npos);
  const std::string svg = render_svg(curves, "demo & <test>");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("demo &amp; &lt;test"), std::string::npos);
  std::size_t polylines = 0;
  for (std::size_t pos = 0; (pos = svg.find("<polyline", pos)) != std::string::npos; ++pos) ++polylines;
  EXPECT_EQ(polylines, 2u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}
