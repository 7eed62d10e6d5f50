#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "lmcf/errors.hpp"
#include "lmcf/presets.hpp"
#include "lmcf/singularity.hpp"

using namespace lmcf;

namespace {

constexpr double kPi = std::numbers::pi;

// Rows approaching T geometrically with U = q(tau) / tau.
FlowResult synthetic(double T, const std::function<double(double)>& q) {
  FlowResult r;
  double t = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double tau = T * std::pow(1e-7, i / 1999.0);
    t = T - tau;
    TraceRow row;
    row.t = t;
    row.u = q(tau) / tau;
    r.trace.rows.push_back(row);
  }
  for (std::size_t i = 0; i + 1 < r.trace.rows.size(); ++i) {
    r.trace.rows[i].dt = r.trace.rows[i + 1].t - r.trace.rows[i].t;
  }
  r.trace.rows.back().dt = r.trace.rows[r.trace.rows.size() - 2].dt;
  r.event.kind = Termination::kBlowUpCeiling;
  r.event.t = t;
  return r;
}

RescaledSnapshot line_component(double angle, double s = -1.0) {
  ImmersedCurve c;
  const Complex dir = std::polar(1.0, angle);
  const int n = 4000;
  for (int j = 0; j < n; ++j) c.points.push_back(dir * (j * 40.0 / n - 20.0));
  c.period = 40.0 * dir;
  c.t = s;
  return rescale(Snapshot{0, s, c}, AmbientSpace(), 1.0, {0, 0}, 0.0);
}

}  // namespace

TEST(Singularity, TypeNames) {
  EXPECT_EQ(type_name(SingularityType::kTypeI), "TypeI");
  EXPECT_EQ(type_name(SingularityType::kTypeII), "not Type-I at resolved scales");
  EXPECT_EQ(type_name(SingularityType::kNoSingularity), "NoSingularity");
}

TEST(Singularity, EstimatesTimeOfExactTypeILaw) {
  const FlowResult r = synthetic(0.5, [](double) { return 0.5; });
  const SingularTimeEstimate e = estimate_T(r.trace, r.event);
  ASSERT_TRUE(e.blow_up);
  EXPECT_NEAR(e.T_est, 0.5, 1e-10);
  EXPECT_GT(e.fit_quality, 0.999999);
  EXPECT_FALSE(e.fallback);
  EXPECT_GT(e.tail_rows, 10);
  const Classification c = classify(r.trace, e);
  EXPECT_EQ(c.type, SingularityType::kTypeI);
  EXPECT_NEAR(c.c_est, 0.5, 1e-6);
}

TEST(Singularity, GrowingRateIsNotTypeI) {
  // Q = 2 ln(1/tau) grows without bound.
  const FlowResult r = synthetic(0.2, [](double tau) { return 2.0 * std::log(1.0 / tau); });
  SingularTimeEstimate e;
  e.blow_up = true;
  e.T_est = 0.2;
  e.resolution = 1e-12;
  const Classification c = classify(r.trace, e);
  EXPECT_EQ(c.type, SingularityType::kTypeII);
  EXPECT_GT(c.q_max, 5.0);
  EXPECT_LT(c.fine_slope, 0.0);
}

TEST(Singularity, LargeButFlatRateIsIndeterminate) {
  const FlowResult r = synthetic(0.2, [](double) { return 8.0; });
  const SingularTimeEstimate e = estimate_T(r.trace, r.event);
  const Classification c = classify(r.trace, e);
  EXPECT_EQ(c.type, SingularityType::kIndeterminate);
}

TEST(Singularity, NoBlowUp) {
  FlowResult r = synthetic(0.5, [](double) { return 0.5; });
  r.event.kind = Termination::kReachedEnd;
  const SingularTimeEstimate e = estimate_T(r.trace, r.event);
  EXPECT_FALSE(e.blow_up);
  EXPECT_EQ(classify(r.trace, e).type, SingularityType::kNoSingularity);
}

TEST(Singularity, TwoLineSpectrum) {
  const std::vector<RescaledSnapshot> comps{line_component(0.4), line_component(2.1)};
  const Spectrum s = extract_spectrum(comps);
  ASSERT_FALSE(s.rejected);
  ASSERT_EQ(s.clusters.size(), 2u);
  EXPECT_NEAR(s.clusters[0].center, 0.4, 1e-9);
  EXPECT_NEAR(s.clusters[1].center, 2.1, 1e-9);
  for (const auto& c : s.clusters) {
    EXPECT_NEAR(c.mass, 1.0, 1e-4);
    EXPECT_NEAR(c.spread, 0.0, 1e-9);
  }
  EXPECT_NEAR(s.total_mass, 2.0, 2e-4);
  EXPECT_NEAR(cone_alignment(comps[0]), 0.0, 1e-20);
}

TEST(Singularity, ClustersMergeAcrossTheWrap) {
  const std::vector<RescaledSnapshot> comps{line_component(-0.02), line_component(0.02)};
  const Spectrum s = extract_spectrum(comps);
  ASSERT_EQ(s.clusters.size(), 1u);
  EXPECT_NEAR(std::remainder(s.clusters[0].center, 2 * kPi), 0.0, 1e-9);
  EXPECT_NEAR(s.clusters[0].mass, 2.0, 2e-4);
}

TEST(Singularity, SpectrumDistance) {
  const Spectrum a = extract_spectrum(std::vector{line_component(0.4), line_component(2.1)});
  const Spectrum b = extract_spectrum(std::vector{line_component(0.43), line_component(2.1)});
  EXPECT_NEAR(spectrum_distance(a, b), 0.03, 1e-9);
  EXPECT_TRUE(std::isinf(spectrum_distance(a, extract_spectrum(line_component(1.0)))));
}

TEST(Singularity, NearestSnapshotAndCentroid) {
  std::vector<Snapshot> snaps(3);
  for (int i = 0; i < 3; ++i) snaps[i].t = snaps[i].curve.t = 0.1 * i;
  EXPECT_EQ(nearest_snapshot(snaps, 0.14), 1);
  EXPECT_EQ(nearest_snapshot(snaps, 5.0), 2);
  EXPECT_EQ(nearest_snapshot({}, 0.0), -1);
  CurveSpec s;
  s.preset = CurvePreset::kEllipse;
  s.aspect = 0.5;
  s.center = {0.3, -0.7};
  const Complex c = curvature_centroid(make_curve(s), AmbientSpace());
  EXPECT_NEAR(std::abs(c - s.center), 0.0, 1e-12);
}

TEST(Singularity, ReportOnShrinkingCircle) {
  CurveSpec s;
  s.vertices = 128;
  FlowConfig cfg;
  cfg.t_end = 10.0;
  cfg.cfl = 0.5;
  cfg.a2_ceiling = 1e5;
  const FlowResult r = run(make_curve(s), AmbientSpace(), cfg);
  const SingularityReport rep = report(r, AmbientSpace());
  EXPECT_NEAR(rep.time.T_est, 0.5, 1e-3);
  EXPECT_EQ(rep.classification.type, SingularityType::kTypeI);
  EXPECT_NEAR(rep.classification.c_est, 0.5, 0.01);
  EXPECT_TRUE(rep.rate_bound.passed);
  EXPECT_EQ(rep.maslov, 1);
  EXPECT_TRUE(rep.spectrum_rejected);
  EXPECT_LT(std::abs(rep.x0), 1e-9);
  EXPECT_EQ(rep.levels.size(), 4u);
  for (std::size_t i = 1; i < rep.levels.size(); ++i) EXPECT_LT(rep.levels[i].lambda, rep.levels[i - 1].lambda);
}

TEST(Singularity, ReportWithoutBlowUp) {
  CurveSpec s;
  s.vertices = 64;
  FlowConfig cfg;
  cfg.t_end = 0.01;
  const SingularityReport rep = report(run(make_curve(s), AmbientSpace(), cfg), AmbientSpace());
  EXPECT_EQ(rep.classification.type, SingularityType::kNoSingularity);
  EXPECT_TRUE(rep.levels.empty());
}
