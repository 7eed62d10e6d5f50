#include "lmcf/ambient.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "lmcf/errors.hpp"

namespace lmcf {

namespace {

double parse_double(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(0, "bad number '" + std::string(s) + "' in W");
  }
  return v;
}

int parse_int(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 0) {
    throw ConfigError(0, "bad multi-index '" + std::string(s) + "' in W");
  }
  return v;
}

// n! / (n-m)!
double falling(int n, int m) {
  double r = 1.0;
  for (int i = 0; i < m; ++i) r *= n - i;
  return r;
}

}  // namespace

HolomorphicPolynomial::HolomorphicPolynomial(int n, std::map<MultiIndex, Complex> coefficients)
    : n_(n) {
  if (n != 1 && n != 2) throw ConfigError(0, "complex dimension must be 1 or 2");
  for (auto& [idx, c] : coefficients) {
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
      throw ConfigError(0, "W coefficients must be finite");
    }
    if (idx[0] < 0 || idx[1] < 0) throw ConfigError(0, "negative exponent in W");
    if (n == 1 && idx[1] != 0) throw ConfigError(0, "two-variable term in a one-variable W");
    if (c != Complex(0.0, 0.0)) coeffs_[idx] += c;
  }
  if (n_ == 1) {
    dense_.assign(static_cast<std::size_t>(degree() + 1), Complex(0.0, 0.0));
    for (auto& [idx, c] : coeffs_) dense_[static_cast<std::size_t>(idx[0])] = c;
    if (coeffs_.empty()) dense_.clear();
  }
}

HolomorphicPolynomial HolomorphicPolynomial::parse(int n, std::string_view text) {
  std::map<MultiIndex, Complex> coeffs;
  while (!text.empty()) {
    auto semi = text.find(';');
    std::string_view term = text.substr(0, semi);
    text = semi == std::string_view::npos ? std::string_view{} : text.substr(semi + 1);
    while (!term.empty() && term.front() == ' ') term.remove_prefix(1);
    if (term.empty()) continue;

    auto colon = term.find(':');
    if (colon == std::string_view::npos) {
      throw ConfigError(0, "W term '" + std::string(term) + "' lacks ':'");
    }
    std::string_view idx_text = term.substr(0, colon);
    std::string_view val_text = term.substr(colon + 1);

    MultiIndex idx{0, 0};
    auto us = idx_text.find('_');
    if (us == std::string_view::npos) {
      if (n != 1) throw ConfigError(0, "W multi-index must be 'a_b' when n = 2");
      idx[0] = parse_int(idx_text);
    } else {
      if (n != 2) throw ConfigError(0, "W multi-index must be a single exponent when n = 1");
      idx[0] = parse_int(idx_text.substr(0, us));
      idx[1] = parse_int(idx_text.substr(us + 1));
    }

    auto comma = val_text.find(',');
    Complex c;
    if (comma == std::string_view::npos) {
      c = Complex(parse_double(val_text), 0.0);
    } else {
      c = Complex(parse_double(val_text.substr(0, comma)), parse_double(val_text.substr(comma + 1)));
    }
    coeffs[idx] += c;
  }
  return HolomorphicPolynomial(n, std::move(coeffs));
}

std::string HolomorphicPolynomial::to_string() const {
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (auto& [idx, c] : coeffs_) {
    if (!first) os << ';';
    first = false;
    if (n_ == 1) {
      os << idx[0];
    } else {
      os << idx[0] << '_' << idx[1];
    }
    os << ':' << c.real() << ',' << c.imag();
  }
  return os.str();
}

int HolomorphicPolynomial::degree() const {
  int d = 0;
  for (auto& [idx, c] : coeffs_) d = std::max(d, idx[0] + idx[1]);
  return d;
}

Complex HolomorphicPolynomial::operator()(std::span<const Complex> z) const {
  return partial(z, {0, 0});
}

Complex HolomorphicPolynomial::partial(std::span<const Complex> z, MultiIndex order) const {
  if (n_ == 1 && order[1] == 0) return derivative(z[0], order[0]);
  Complex sum(0.0, 0.0);
  for (auto& [idx, c] : coeffs_) {
    if (idx[0] < order[0] || idx[1] < order[1]) continue;
    Complex term = c * falling(idx[0], order[0]) * falling(idx[1], order[1]);
    term *= std::pow(z[0], idx[0] - order[0]);
    if (n_ == 2) term *= std::pow(z[1], idx[1] - order[1]);
    sum += term;
  }
  return sum;
}

Complex HolomorphicPolynomial::derivative(Complex z, int m) const {
  const int deg = static_cast<int>(dense_.size()) - 1;
  if (deg < m) return Complex(0.0, 0.0);
  Complex acc(0.0, 0.0);
  for (int p = deg; p >= m; --p) {
    acc = acc * z + dense_[static_cast<std::size_t>(p)] * falling(p, m);
  }
  return acc;
}

HolomorphicPolynomial HolomorphicPolynomial::shifted(Complex c) const {
  auto coeffs = coeffs_;
  coeffs[{0, 0}] += c;
  return HolomorphicPolynomial(n_, std::move(coeffs));
}

AmbientSpace::AmbientSpace(int n, HolomorphicPolynomial w, int degree_cap) : n_(n), w_(std::move(w)) {
  if (n != 1 && n != 2) throw ConfigError(0, "ambient dimension n must be 1 or 2");
  if (w_.variables() != n) throw ConfigError(0, "W has the wrong number of variables");
  if (w_.degree() > degree_cap) {
    throw ConfigError(0, "W degree " + std::to_string(w_.degree()) + " exceeds cap " +
                             std::to_string(degree_cap));
  }
}

double AmbientSpace::eval_psi(std::span<const Complex> z) const {
  return w_(z).real() / n_;
}

std::vector<double> AmbientSpace::grad_psi(std::span<const Complex> z) const {
  // Cauchy-Riemann: d/dx Re W = Re W_j, d/dy Re W = -Im W_j.
  std::vector<double> g(static_cast<std::size_t>(2 * n_), 0.0);
  for (int j = 0; j < n_; ++j) {
    MultiIndex order{j == 0 ? 1 : 0, j == 1 ? 1 : 0};
    Complex wj = w_.partial(z, order);
    g[static_cast<std::size_t>(2 * j)] = wj.real() / n_;
    g[static_cast<std::size_t>(2 * j + 1)] = -wj.imag() / n_;
  }
  return g;
}

RealMatrix AmbientSpace::hess_psi(std::span<const Complex> z) const {
  RealMatrix h(2 * n_);
  for (int j = 0; j < n_; ++j) {
    for (int k = 0; k < n_; ++k) {
      MultiIndex order{(j == 0) + (k == 0), (j == 1) + (k == 1)};
      Complex wjk = w_.partial(z, order) / static_cast<double>(n_);
      h(2 * j, 2 * k) = wjk.real();
      h(2 * j, 2 * k + 1) = -wjk.imag();
      h(2 * j + 1, 2 * k) = -wjk.imag();
      h(2 * j + 1, 2 * k + 1) = -wjk.real();
    }
  }
  return h;
}

double AmbientSpace::eval_im_w(std::span<const Complex> z) const {
  if (n_ != 1) throw Error("eval_im_w is defined for n = 1 only");
  return w_(z).imag();
}

double AmbientSpace::volume_form_norm2(std::span<const Complex> z) const {
  return std::norm(std::exp(w_(z)));
}

Complex AmbientSpace::grad(Complex z) const {
  if (w_.is_zero()) return Complex(0.0, 0.0);
  return std::conj(w_.derivative(z, 1));
}

double AmbientSpace::directional(Complex z, std::span<const Complex> dirs) const {
  Complex acc = w_.derivative(z, static_cast<int>(dirs.size()));
  for (Complex d : dirs) acc *= d;
  return acc.real();
}

double AmbientSpace::im_w(Complex z) const {
  if (w_.is_zero()) return 0.0;
  return w_.derivative(z, 0).imag();
}

}  // namespace lmcf
