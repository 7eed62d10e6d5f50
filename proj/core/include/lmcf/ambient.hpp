#pragma once

#include <array>
#include <complex>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lmcf {

using Complex = std::complex<double>;

/// Dense row-major square matrix, used for the 2n x 2n real Hessian of psi.
struct RealMatrix {
  int dim = 0;
  std::vector<double> data;

  RealMatrix() = default;
  explicit RealMatrix(int d) : dim(d), data(static_cast<std::size_t>(d * d), 0.0) {}

  double& operator()(int i, int j) { return data[static_cast<std::size_t>(i * dim + j)]; }
  double operator()(int i, int j) const { return data[static_cast<std::size_t>(i * dim + j)]; }
};

/// Exponents (a, b) of z1^a z2^b; b is always zero when n = 1.
using MultiIndex = std::array<int, 2>;

/// Holomorphic polynomial W in one or two complex variables.
class HolomorphicPolynomial {
 public:
  HolomorphicPolynomial() = default;
  HolomorphicPolynomial(int n, std::map<MultiIndex, Complex> coefficients);

  /// Parses `"<idx>:<re>,<im>;..."` where idx is `a` (n = 1) or `a_b` (n = 2).
  static HolomorphicPolynomial parse(int n, std::string_view text);
  std::string to_string() const;

  int variables() const { return n_; }
  int degree() const;
  bool is_zero() const { return coeffs_.empty(); }
  const std::map<MultiIndex, Complex>& coefficients() const { return coeffs_; }

  Complex operator()(std::span<const Complex> z) const;
  /// Mixed partial derivative d^{order[0]}/dz1 d^{order[1]}/dz2.
  Complex partial(std::span<const Complex> z, MultiIndex order) const;

  /// Single-variable fast path: m-th derivative of W at z (n = 1 only).
  Complex derivative(Complex z, int m) const;

  /// Same polynomial plus a constant.
  HolomorphicPolynomial shifted(Complex c) const;

 private:
  int n_ = 1;
  std::map<MultiIndex, Complex> coeffs_;
  // Dense single-variable coefficients, ascending powers; only for n = 1.
  std::vector<Complex> dense_;
};

/// Flat C^n with holomorphic volume form e^W dz and potential psi = Re W / n.
/// Immutable after construction.
class AmbientSpace {
 public:
  static constexpr int kDefaultDegreeCap = 6;

  AmbientSpace() = default;
  AmbientSpace(int n, HolomorphicPolynomial w, int degree_cap = kDefaultDegreeCap);

  int n() const { return n_; }
  const HolomorphicPolynomial& weight() const { return w_; }
  bool flat_weight() const { return w_.is_zero(); }

  double eval_psi(std::span<const Complex> z) const;
  /// Real gradient (d/dx1, d/dy1, ..., d/dxn, d/dyn).
  std::vector<double> grad_psi(std::span<const Complex> z) const;
  RealMatrix hess_psi(std::span<const Complex> z) const;
  /// Im W(z); defined for n = 1 only.
  double eval_im_w(std::span<const Complex> z) const;

  /// |Omega|^2 = |e^W|^2 evaluated directly from W.
  double volume_form_norm2(std::span<const Complex> z) const;

  // Curve helpers (n = 1). Directions are unit complex numbers.
  double psi(Complex z) const { return eval_psi(std::span<const Complex>(&z, 1)); }
  /// Gradient of psi as a vector in C, i.e. conj(W'(z)).
  Complex grad(Complex z) const;
  /// D^m psi(z)(a_1, ..., a_m) = Re(W^(m)(z) a_1 ... a_m).
  double directional(Complex z, std::span<const Complex> dirs) const;
  double im_w(Complex z) const;

 private:
  int n_ = 1;
  HolomorphicPolynomial w_;
};

}  // namespace lmcf
