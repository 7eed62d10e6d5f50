#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "lmcf/curve.hpp"
#include "lmcf/errors.hpp"
#include "lmcf/presets.hpp"

using namespace lmcf;

namespace {

ImmersedCurve preset(CurvePreset p, int n, double radius = 1.0, bool clockwise = false) {
  CurveSpec s;
  s.preset = p;
  s.vertices = n;
  s.radius = radius;
  s.clockwise = clockwise;
  return make_curve(s);
}

double max_abs_diff(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST(Curve, CircleFrame) {
  const double R = 2.0;
  const ImmersedCurve c = preset(CurvePreset::kCircle, 256, R);
  const FrameData f = compute_frame(c, AmbientSpace());
  // Discrete curvature of a regular polygon inscribed in radius R: 2 sin(pi/N) / (R sin(2 pi/N)) ~ 1/R.
  for (int j = 0; j < f.size(); ++j) {
    EXPECT_NEAR(f.curvature[j], 1.0 / R, 1e-4);
    // H points toward the centre.
    EXPECT_LT(std::real(f.mean_curvature[j] * std::conj(c.points[j])), 0.0);
  }
  EXPECT_EQ(f.maslov, 1);
  EXPECT_NEAR(c.length(), 2 * std::numbers::pi * R, 1e-3);
  EXPECT_NEAR(c.quality(), 1.0, 1e-12);
}

TEST(Curve, MaslovIndices) {
  EXPECT_EQ(compute_frame(preset(CurvePreset::kCircle, 64, 1.0, true), AmbientSpace()).maslov, -1);
  EXPECT_EQ(compute_frame(preset(CurvePreset::kFigureEight, 256), AmbientSpace()).maslov, 0);
  EXPECT_EQ(compute_frame(preset(CurvePreset::kEllipse, 128), AmbientSpace()).maslov, 1);
  // Im W shifts theta pointwise but cannot change the winding.
  const AmbientSpace sp(1, HolomorphicPolynomial::parse(1, "1:0.3,0;2:0.05,0.02"));
  EXPECT_EQ(compute_frame(preset(CurvePreset::kFigureEight, 256), sp).maslov, 0);
  EXPECT_EQ(compute_frame(preset(CurvePreset::kCircle, 256), sp).maslov, 1);
}

TEST(Curve, ThetaIncludesImaginaryWeight) {
  const ImmersedCurve c = preset(CurvePreset::kEllipse, 128);
  const AmbientSpace sp(1, HolomorphicPolynomial::parse(1, "1:0,0.3"));
  const FrameData flat = compute_frame(c, AmbientSpace());
  const FrameData weighted = compute_frame(c, sp);
  for (int j = 0; j < c.size(); ++j) {
    const double shift = weighted.theta[j] - flat.theta[j];
    const double expect = 0.3 * c.points[j].real();
    EXPECT_NEAR(std::remainder(shift - expect, 2 * std::numbers::pi), 0.0, 1e-12);
  }
}

TEST(Curve, KComputedTwoWaysConverges) {
  const AmbientSpace sp(1, HolomorphicPolynomial::parse(1, "1:0.3,0"));
  double prev = 0.0;
  for (int n : {128, 256, 512}) {
    const ImmersedCurve c = preset(CurvePreset::kFigureEight, n);
    const FrameData f = compute_frame(c, sp);
    const double d = max_abs_diff(generalized_mean_curvature_geometric(f, c, sp), generalized_mean_curvature_angle(f));
    if (prev > 0.0) {
      EXPECT_NEAR(std::log2(prev / d), 2.0, 0.5);
    }
    prev = d;
  }
}

TEST(Curve, VelocityDecomposition) {
  const AmbientSpace sp(1, HolomorphicPolynomial::parse(1, "1:0.3,0;2:0.05,0"));
  const ImmersedCurve c = preset(CurvePreset::kEllipse, 64);
  const FrameData f = compute_frame(c, sp);
  for (int j = 0; j < f.size(); ++j) {
    EXPECT_NEAR(std::abs(f.velocity[j] - (f.mean_curvature[j] - f.drift[j])), 0.0, 1e-14);
    const double v = std::real(sp.grad(c.points[j]) * std::conj(f.normal[j]));
    EXPECT_NEAR(std::abs(f.drift[j] - v * f.normal[j]), 0.0, 1e-14);
    EXPECT_NEAR(std::abs(f.normal[j] - Complex(0, 1) * f.tangent[j]), 0.0, 1e-15);
  }
  std::vector<Complex> k;
  flow_velocity(c.points, sp, k);
  EXPECT_LT(max_abs_diff(k, f.velocity), 1e-12);
}

TEST(Curve, StraightLineWindowIsAFixedPoint) {
  ImmersedCurve line;
  const int n = 64;
  const Complex dir = std::polar(1.0, 0.3);
  for (int j = 0; j < n; ++j) line.points.push_back(dir * (j * 4.0 / n - 2.0));
  line.period = 4.0 * dir;
  const FrameData f = compute_frame(line, AmbientSpace());
  for (int j = 0; j < n; ++j) {
    EXPECT_NEAR(f.curvature[j], 0.0, 1e-12);
    EXPECT_NEAR(f.theta[j], 0.3, 1e-12);
  }
  EXPECT_EQ(f.maslov, 0);
}

TEST(Curve, DegenerateMeshesThrow) {
  ImmersedCurve c = preset(CurvePreset::kCircle, 32);
  c.points[5] = c.points[4];
  EXPECT_THROW(compute_frame(c, AmbientSpace()), GeometryError);
  ImmersedCurve small;
  small.points = {{0, 0}, {1, 0}, {0, 1}};
  EXPECT_THROW(small.validate(), GeometryError);
  // A hairpin turn is a cusp.
  ImmersedCurve cusp = preset(CurvePreset::kCircle, 32);
  cusp.points[10] = cusp.points[8];
  try {
    compute_frame(cusp, AmbientSpace());
    FAIL() << "expected a GeometryError";
  } catch (const GeometryError& e) {
    EXPECT_EQ(e.kind(), GeometryError::Kind::kCusp);
  }
}

TEST(Curve, ArclengthOperatorsOnUniformGrid) {
  const int n = 200;
  std::vector<double> f(n), edge(n, 2 * std::numbers::pi / n);
  for (int j = 0; j < n; ++j) f[j] = std::sin(2 * std::numbers::pi * j / n);
  const auto d = arclength_derivative(f, edge);
  const auto l = arclength_laplacian(f, edge);
  for (int j = 0; j < n; ++j) {
    const double u = 2 * std::numbers::pi * j / n;
    EXPECT_NEAR(d[j], std::cos(u), 1e-3);
    EXPECT_NEAR(l[j], -std::sin(u), 1e-3);
  }
}

TEST(Presets, NamesRoundTrip) {
  for (auto p : {CurvePreset::kCircle, CurvePreset::kEllipse, CurvePreset::kFigureEight,
                 CurvePreset::kPerturbedFigureEight, CurvePreset::kCustom}) {
    EXPECT_EQ(parse_preset(preset_name(p)), p);
  }
  EXPECT_THROW(parse_preset("trefoil"), ConfigError);
}

TEST(Presets, ShapesAndSeeds) {
  CurveSpec s;
  s.preset = CurvePreset::kEllipse;
  s.radius = 2.0;
  s.aspect = 0.5;
  s.vertices = 100;
  s.center = {1.0, -1.0};
  const ImmersedCurve e = make_curve(s);
  ASSERT_EQ(e.size(), 100);
  for (const Complex z : e.points) {
    const Complex w = z - s.center;
    EXPECT_NEAR(std::pow(w.real() / 2.0, 2) + std::pow(w.imag() / 1.0, 2), 1.0, 1e-12);
  }
  CurveSpec p;
  p.preset = CurvePreset::kPerturbedFigureEight;
  p.perturb_amp = 0.05;
  p.seed = 7;
  const ImmersedCurve a = make_curve(p), b = make_curve(p);
  EXPECT_EQ(a.points, b.points);
  p.seed = 8;
  EXPECT_NE(make_curve(p).points, a.points);
  CurveSpec tiny;
  tiny.vertices = 8;
  EXPECT_THROW(make_curve(tiny), ConfigError);
}

TEST(Products, ProductOfCirclesHasMaslovTwo) {
  ProductLagrangian p;
  p.first = preset(CurvePreset::kCircle, 64);
  p.second = preset(CurvePreset::kCircle, 48, 0.5);
  const ProductFrame f = product_frame(p);
  EXPECT_EQ(f.rows, 64);
  EXPECT_EQ(f.cols, 48);
  EXPECT_EQ(f.maslov, 2);
}
