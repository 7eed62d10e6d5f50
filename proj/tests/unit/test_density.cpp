#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "lmcf/density.hpp"
#include "lmcf/errors.hpp"
#include "lmcf/presets.hpp"

using namespace lmcf;

namespace {

constexpr double kPi = std::numbers::pi;

// One period of the line through `through` in direction e^{i angle}.
ImmersedCurve line(double angle, Complex through = {}, double length = 40.0, int n = 4000) {
  ImmersedCurve c;
  const Complex dir = std::polar(1.0, angle);
  for (int j = 0; j < n; ++j) c.points.push_back(through + dir * (j * length / n - length / 2));
  c.period = length * dir;
  return c;
}

Snapshot snapshot_of(const ImmersedCurve& c, double t, int index = 0) {
  ImmersedCurve cc = c;
  cc.t = t;
  return {index, t, cc};
}

}  // namespace

TEST(Density, HeatKernelIsNormalised) {
  const double tau = 0.37;
  double sum = 0.0;
  const double h = 1e-3;
  for (double x = -20; x <= 20; x += h) sum += heat_kernel(x * x, tau) * h;
  EXPECT_NEAR(sum, 1.0, 1e-10);
  EXPECT_NEAR(heat_kernel(0.0, 1.0, 2), 1.0 / (4 * kPi), 1e-15);
}

TEST(Density, SmoothstepIsQuinticAndClamped) {
  for (double u : {0.1, 0.35, 0.8}) EXPECT_NEAR(smoothstep(u), u * u * u * (10 - 15 * u + 6 * u * u), 1e-15);
  EXPECT_EQ(smoothstep(-1.0), 0.0);
  EXPECT_EQ(smoothstep(2.0), 1.0);
  const double h = 1e-6;
  EXPECT_NEAR((smoothstep(h) - smoothstep(0)) / h, 0.0, 1e-9);
  EXPECT_NEAR((smoothstep(1) - smoothstep(1 - h)) / h, 0.0, 1e-9);
}

TEST(Density, CutoffSupport) {
  DensityProbe p;
  p.x0 = {1.0, 1.0};
  p.r = 0.5;
  EXPECT_EQ(cutoff_phi(p.x0 + 0.49, p), 1.0);
  EXPECT_EQ(cutoff_phi(p.x0 + Complex(0, 1.01), p), 0.0);
  const double mid = cutoff_phi(p.x0 + 0.75, p);
  EXPECT_GT(mid, 0.0);
  EXPECT_LT(mid, 1.0);
  p.r = std::numeric_limits<double>::infinity();
  EXPECT_EQ(cutoff_phi({100.0, 0.0}, p), 1.0);
}

TEST(Density, ProbeValidation) {
  DensityProbe p;
  p.r = -1.0;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.q = 0;
  p.f = WeightKind::kMoment;
  EXPECT_THROW(p.validate(), Error);
  EXPECT_EQ(parse_weight(weight_name(WeightKind::kThetaSquared)), WeightKind::kThetaSquared);
  EXPECT_THROW(parse_weight("cubic"), Error);
  EXPECT_THROW(backward_kernel({0, 0}, DensityProbe{}, 0.0), Error);
}

TEST(Density, WeightDerivatives) {
  DensityProbe p;
  p.f = WeightKind::kMoment;
  p.y = 0.4;
  p.q = 2;
  const double th = 1.3, h = 1e-5;
  EXPECT_NEAR(p.weight(th), std::pow(th - 0.4, 4), 1e-15);
  EXPECT_NEAR(p.weight_derivative(th), (p.weight(th + h) - p.weight(th - h)) / (2 * h), 1e-8);
  EXPECT_NEAR(p.weight_second_derivative(th),
              (p.weight_derivative(th + h) - p.weight_derivative(th - h)) / (2 * h), 1e-7);
}

TEST(Density, LineThroughCentreHasUnitDensity) {
  for (double angle : {0.0, 0.7, 2.0}) {
    const ImmersedCurve c = line(angle, {0.3, -0.2});
    DensityProbe p;
    p.x0 = {0.3, -0.2};
    for (double t0 : {0.1, 1.0, 3.0}) {
      p.t0 = t0;
      EXPECT_NEAR(weighted_integral(c, compute_frame(c, AmbientSpace()), p, 0.0), 1.0, 1e-4);
    }
  }
}

TEST(Density, ShrinkerDensity) {
  // Radius sqrt(2 tau) at the kernel's time: Phi = sqrt(2 pi / e).
  CurveSpec s;
  s.vertices = 1024;
  for (double tau : {0.5, 0.02}) {
    s.radius = std::sqrt(2 * tau);
    const ImmersedCurve c = make_curve(s);
    DensityProbe p;
    p.t0 = tau;
    EXPECT_NEAR(weighted_integral(c, compute_frame(c, AmbientSpace()), p, 0.0), std::sqrt(2 * kPi / std::exp(1.0)),
                1e-5);
  }
}

TEST(Density, ChainRuleDerivativeMatchesFiniteDifferences) {
  CurveSpec s;
  s.preset = CurvePreset::kFigureEight;
  s.vertices = 256;
  const ImmersedCurve c = make_curve(s);
  const AmbientSpace sp(1, HolomorphicPolynomial::parse(1, "1:0.3,0;2:0.05,0.02"));
  const FrameData f = compute_frame(c, sp);
  for (auto kind : {WeightKind::kOne, WeightKind::kThetaSquared, WeightKind::kMoment}) {
    DensityProbe p;
    p.t0 = 0.3;
    p.x0 = {0.1, 0.05};
    p.r = 0.6;
    p.f = kind;
    p.y = 0.4;
    p.q = 2;
    const BudgetSample b = budget_sample(c, f, sp, p);
    const double dt = 1e-6;
    const ImmersedCurve a = step(c, sp, dt), bb = step(c, sp, 2 * dt);
    const double p0 = weighted_integral(c, f, p, 0.0);
    const double pa = weighted_integral(a, compute_frame(a, sp), p, a.t);
    const double pb = weighted_integral(bb, compute_frame(bb, sp), p, bb.t);
    const double fd = (-3 * p0 + 4 * pa - pb) / (2 * dt);
    EXPECT_NEAR(b.dphi, fd, 1e-6 * std::abs(fd) + 1e-9) << weight_name(kind);
    EXPECT_NEAR(b.excess, b.dphi - b.source + b.defect - b.slack, 1e-12);
  }
}

TEST(Density, SpecialLagrangianHasNoDefect) {
  const AmbientSpace sp(1, HolomorphicPolynomial::parse(1, "1:0.3,0"));
  const ImmersedCurve c = line(0.0);
  DensityProbe p;
  p.t0 = 1.0;
  const BudgetSample b = budget_sample(c, compute_frame(c, sp), sp, p);
  EXPECT_LE(b.defect, 1e-10);
  EXPECT_LE(std::abs(b.kinetic), 1e-10);
}

TEST(Density, BudgetFitSatisfiesEveryConstraint) {
  std::vector<BudgetSample> samples;
  for (int i = 0; i < 30; ++i) {
    BudgetSample s;
    s.tau = std::pow(10.0, -i / 6.0);
    s.b1 = 1.0 / (2 * std::sqrt(s.tau));
    s.b2 = std::pow(s.tau, -0.75);
    s.excess = 0.3 * s.b1 + 0.1 * std::sin(i);
    samples.push_back(s);
  }
  const BudgetFit fit = fit_budget(samples);
  EXPECT_TRUE(fit.feasible);
  EXPECT_GE(fit.c1, 0.0);
  EXPECT_GE(fit.c2, 0.0);
  EXPECT_GE(fit.c3, 0.0);
  for (const auto& s : samples) EXPECT_LE(s.excess, fit.c1 * s.b1 + fit.c2 * s.b2 + fit.c3 + 1e-9);
  for (auto& s : samples) s.excess = -1.0;
  const BudgetFit zero = fit_budget(samples);
  EXPECT_EQ(zero.c1 + zero.c2 + zero.c3, 0.0);
}

TEST(Density, MonotonicityOnShrinkingCircle) {
  CurveSpec s;
  s.vertices = 128;
  FlowConfig cfg;
  cfg.t_end = 0.4;
  cfg.cfl = 0.5;
  cfg.snapshot_stride = 20;
  DensityProbe p;
  p.t0 = 0.5;
  DensityRecorder rec(AmbientSpace(), p);
  const FlowResult r = run(make_curve(s), AmbientSpace(), cfg, std::ref(rec));
  EXPECT_EQ(rec.values().size(), r.trace.rows.size());
  EXPECT_LE(rec.max_relative_increase(), 1e-6);
  std::vector<double> times;
  for (int i = 0; i < 25; ++i) times.push_back(0.4 * i / 24.0);
  const MonotonicityBudget mb = monotonicity_budget(r.trace.snapshots, AmbientSpace(), p, times);
  EXPECT_GE(static_cast<int>(mb.samples.size()), kMinBudgetSamples);
  for (const auto& b : mb.samples) EXPECT_LE(b.excess, 1e-6);
  p.t0 = 0.2;
  EXPECT_THROW(monotonicity_budget(r.trace.snapshots, AmbientSpace(), p, times), Error);
}

TEST(Density, SegmentClipping) {
  EXPECT_NEAR(segment_length_in_disk({-5, 0}, {5, 0}, 2.0), 4.0, 1e-15);
  EXPECT_NEAR(segment_length_in_disk({-5, 3}, {5, 3}, 2.0), 0.0, 1e-15);
  EXPECT_NEAR(segment_length_in_disk({0, 0}, {5, 0}, 2.0), 2.0, 1e-15);
  EXPECT_NEAR(segment_length_in_disk({-1, 1}, {1, 1}, 2.0), 2.0, 1e-15);
  EXPECT_NEAR(segment_length_in_disk({0, 1}, {5, 1}, 2.0), std::sqrt(3.0), 1e-15);
}

TEST(Density, VolumeRatios) {
  const ImmersedCurve l = line(0.4, {0.2, 0.1}, 40.0, 400);
  for (double R : {0.1, 1.0, 10.0}) EXPECT_NEAR(volume_ratio(l, {0.2, 0.1}, R), 2.0, 1e-12);
  CurveSpec s;
  s.vertices = 512;
  // Whole unit circle inside B_2: ratio 2 pi / 2 up to the polygon deficit.
  EXPECT_NEAR(volume_ratio(make_curve(s), {0, 0}, 2.0), kPi, 1e-4);
}

TEST(Density, RescalingMapsCircleToShrinker) {
  // Circle of radius sqrt(1 - 2t) at t = 0.375; T = 0.5; lambda = 4 gives s = -2 and radius 2.
  CurveSpec s;
  s.vertices = 256;
  s.radius = 0.5;
  const Snapshot snap = snapshot_of(make_curve(s), 0.375);
  const RescaledSnapshot r = rescale(snap, AmbientSpace(), 4.0, {0, 0}, 0.5);
  EXPECT_DOUBLE_EQ(r.s, -2.0);
  EXPECT_NEAR(std::abs(r.points[7]), 2.0, 1e-12);
  double len = 0.0;
  for (double w : r.weights) len += w;
  EXPECT_NEAR(len, 4 * kPi, 1e-3);
  EXPECT_NEAR(std::abs(r.mean_curvature[3]), 0.5, 1e-4);
  EXPECT_EQ(r.maslov, 1);
  DensityProbe p;
  EXPECT_NEAR(weighted_integral(r, p), std::sqrt(2 * kPi / std::exp(1.0)), 1e-4);
}

TEST(Density, SpaceTimeIntegralsOfStaticLine) {
  // Horizontal line at height a: |F^perp|^2 = a^2 on a chord of length 2 sqrt(R^2 - a^2).
  const double a = 0.5, R = 2.0;
  std::vector<RescaledSnapshot> seq;
  for (int i = 0; i <= 8; ++i) {
    const double t = -2.5 + 0.25 * i;
    seq.push_back(rescale(snapshot_of(line(0.0, {0, a}, 40.0, 4000), t, i), AmbientSpace(), 1.0, {0, 0}, 0.0));
  }
  const SpaceTimeIntegrals li = spacetime_integrals(seq, -2.0, -1.0, R);
  EXPECT_NEAR(li.normal_part, a * a * 2 * std::sqrt(R * R - a * a), 1e-3);
  EXPECT_NEAR(li.mean_curvature, 0.0, 1e-12);
  EXPECT_NEAR(li.velocity, 0.0, 1e-12);
  EXPECT_THROW(spacetime_integrals(seq, -3.0, -1.0, R), Error);
}

TEST(Density, AngleMomentsOfALine) {
  const RescaledSnapshot r =
      rescale(snapshot_of(line(0.9), -1.0), AmbientSpace(), 1.0, {0, 0}, 0.0);
  DensityProbe p;
  p.f = WeightKind::kMoment;
  p.y = 0.2;
  p.q = 2;
  EXPECT_NEAR(angle_moments(r, p), std::pow(0.7, 4), 1e-4);
  p.f = WeightKind::kOne;
  EXPECT_THROW(angle_moments(r, p), Error);
}

TEST(Density, KernelBound) {
  const KernelBoundResult good = kernel_bound_check(1.25, 0.5);
  EXPECT_FALSE(good.divergent);
  EXPECT_TRUE(good.passed);
  EXPECT_TRUE(std::isfinite(good.c));
  const KernelBoundResult bad = kernel_bound_check(2.0, 0.5);
  EXPECT_TRUE(bad.divergent);
}
