#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "lmcf/ambient.hpp"
#include "lmcf/errors.hpp"

using namespace lmcf;

namespace {

AmbientSpace space_of(const char* w) { return AmbientSpace(1, HolomorphicPolynomial::parse(1, w)); }

}  // namespace

TEST(Polynomial, ParsesAndEvaluates) {
  const auto w = HolomorphicPolynomial::parse(1, "0:1,0;1:0.3,0;2:0.05,0.02");
  EXPECT_EQ(w.degree(), 2);
  const Complex z{0.7, -0.4};
  const Complex expect = 1.0 + 0.3 * z + Complex(0.05, 0.02) * z * z;
  EXPECT_NEAR(std::abs(w(std::span<const Complex>(&z, 1)) - expect), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(w.derivative(z, 1) - (0.3 + 2.0 * Complex(0.05, 0.02) * z)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(w.derivative(z, 2) - 2.0 * Complex(0.05, 0.02)), 0.0, 1e-15);
  EXPECT_EQ(std::abs(w.derivative(z, 3)), 0.0);
}

TEST(Polynomial, TwoVariables) {
  const auto w = HolomorphicPolynomial::parse(2, "1_0:0.3,0;0_2:0.1,0;1_1:0,1");
  const Complex z[2] = {{0.2, 0.1}, {-0.5, 0.3}};
  const Complex expect = 0.3 * z[0] + 0.1 * z[1] * z[1] + Complex(0, 1) * z[0] * z[1];
  EXPECT_NEAR(std::abs(w(z) - expect), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(w.partial(z, {1, 1}) - Complex(0, 1)), 0.0, 1e-15);
}

TEST(Polynomial, RejectsMalformedInput) {
  EXPECT_THROW(HolomorphicPolynomial::parse(1, "1:abc,0"), ConfigError);
  EXPECT_THROW(HolomorphicPolynomial::parse(1, "1 0.3,0"), ConfigError);
  EXPECT_THROW(HolomorphicPolynomial::parse(1, "1_1:0.3,0"), ConfigError);
  EXPECT_THROW(HolomorphicPolynomial::parse(2, "1:0.3,0"), ConfigError);
  EXPECT_THROW(AmbientSpace(1, HolomorphicPolynomial::parse(1, "7:1,0")), ConfigError);
}

TEST(Polynomial, EmptyIsZero) {
  EXPECT_TRUE(HolomorphicPolynomial::parse(1, "").is_zero());
  EXPECT_TRUE(AmbientSpace().flat_weight());
}

TEST(Ambient, GradientMatchesFiniteDifferences) {
  const AmbientSpace sp = space_of("1:0.3,0.1;2:0.05,0.02;3:-0.01,0.03");
  const Complex z{0.4, -0.8};
  const double h = 1e-6;
  const double dx = (sp.psi(z + h) - sp.psi(z - h)) / (2 * h);
  const double dy = (sp.psi(z + Complex(0, h)) - sp.psi(z - Complex(0, h))) / (2 * h);
  EXPECT_NEAR(sp.grad(z).real(), dx, 1e-8);
  EXPECT_NEAR(sp.grad(z).imag(), dy, 1e-8);
  const auto g = sp.grad_psi(std::span<const Complex>(&z, 1));
  EXPECT_NEAR(g[0], dx, 1e-8);
  EXPECT_NEAR(g[1], dy, 1e-8);
}

TEST(Ambient, HessianMatchesFiniteDifferences) {
  const AmbientSpace sp = space_of("2:0.05,0.02;3:-0.01,0.03");
  const Complex z{0.4, -0.8};
  const RealMatrix hs = sp.hess_psi(std::span<const Complex>(&z, 1));
  const double h = 1e-5;
  const Complex dirs[2] = {{1, 0}, {0, 1}};
  for (int i = 0; i < 2; ++i) {
    const Complex gp = sp.grad(z + h * dirs[i]);
    const Complex gm = sp.grad(z - h * dirs[i]);
    EXPECT_NEAR(hs(0, i), (gp.real() - gm.real()) / (2 * h), 1e-8);
    EXPECT_NEAR(hs(1, i), (gp.imag() - gm.imag()) / (2 * h), 1e-8);
  }
  // Harmonic: the trace vanishes.
  EXPECT_NEAR(hs(0, 0) + hs(1, 1), 0.0, 1e-14);
}

TEST(Ambient, DirectionalThirdDerivative) {
  const AmbientSpace sp = space_of("3:0.2,-0.1;4:0.01,0.02");
  const Complex z{0.3, 0.2};
  const Complex a = std::polar(1.0, 0.4), b = std::polar(1.0, 1.3), c = std::polar(1.0, -0.7);
  const double h = 1e-4;
  auto d2 = [&](Complex p) {
    const Complex d[2] = {a, b};
    return sp.directional(p, d);
  };
  const Complex d3[3] = {a, b, c};
  EXPECT_NEAR(sp.directional(z, d3), (d2(z + h * c) - d2(z - h * c)) / (2 * h), 1e-7);
}

TEST(Ambient, VolumeFormAndImaginaryPart) {
  const AmbientSpace sp = space_of("1:0.3,0.1;2:0.05,0.02");
  const Complex z{0.4, -0.8};
  const Complex w = 0.3 * Complex(1, 0.1 / 0.3) * z + Complex(0.05, 0.02) * z * z;
  EXPECT_NEAR(sp.im_w(z), w.imag(), 1e-14);
  EXPECT_NEAR(sp.psi(z), w.real(), 1e-14);
  EXPECT_NEAR(sp.volume_form_norm2(std::span<const Complex>(&z, 1)), std::exp(2.0 * w.real()), 1e-12);
}
