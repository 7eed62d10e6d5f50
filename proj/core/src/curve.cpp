#include "lmcf/curve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "lmcf/errors.hpp"

namespace lmcf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// |z| without hypot's overflow guards; coordinates here are O(1).
inline double magnitude(Complex z) { return std::sqrt(std::norm(z)); }

inline std::size_t prev_index(std::size_t j, std::size_t n) { return j == 0 ? n - 1 : j - 1; }
inline std::size_t next_index(std::size_t j, std::size_t n) { return j + 1 == n ? 0 : j + 1; }

[[noreturn]] void throw_degenerate(std::size_t j, double len) {
  throw GeometryError(GeometryError::Kind::kInvalidMesh, static_cast<int>(j),
                      "degenerate edge " + std::to_string(j) + " (length " + std::to_string(len) + ")");
}

[[noreturn]] void throw_cusp(std::size_t j, double turn) {
  throw GeometryError(GeometryError::Kind::kCusp, static_cast<int>(j),
                      "cusp at vertex " + std::to_string(j) + " (turning angle " +
                          std::to_string(turn) + ")");
}

// Edge vectors and lengths; throws on zero or non-finite edges.
void edges_of(std::span<const Complex> p, Complex period, std::vector<Complex>& e,
              std::vector<double>& len) {
  const std::size_t n = p.size();
  e.resize(n);
  len.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = p[next_index(j, n)] - p[j];
    if (j + 1 == n) e[j] += period;
    len[j] = magnitude(e[j]);
    if (!(len[j] > 0.0) || !std::isfinite(len[j])) throw_degenerate(j, len[j]);
  }
}

// atan(r) for |r| <= 0.0625 by its Taylor series (truncation below 1e-17).
inline double small_atan(double r) {
  const double r2 = r * r;
  double acc = 1.0 / 15.0;
  acc = 1.0 / 13.0 - r2 * acc;
  acc = 1.0 / 11.0 - r2 * acc;
  acc = 1.0 / 9.0 - r2 * acc;
  acc = 1.0 / 7.0 - r2 * acc;
  acc = 1.0 / 5.0 - r2 * acc;
  acc = 1.0 / 3.0 - r2 * acc;
  return r * (1.0 - r2 * acc);
}

// Signed angle from e_prev to e_next, arg(e_next / e_prev), via the half-angle
// identity tan(a/2) = cross / (|e_prev||e_next| + dot).
inline double turning_angle(Complex e_prev, Complex e_next, double l_prev, double l_next) {
  const double cross = e_prev.real() * e_next.imag() - e_prev.imag() * e_next.real();
  const double dot = e_prev.real() * e_next.real() + e_prev.imag() * e_next.imag();
  const double den = l_prev * l_next + dot;
  if (den > 0.0) {
    const double r = cross / den;
    if (std::abs(r) <= 0.0625) return 2.0 * small_atan(r);
  }
  return std::atan2(cross, dot);
}

}  // namespace

void ImmersedCurve::validate() const {
  if (size() < kMinVertices) {
    throw GeometryError(GeometryError::Kind::kInvalidMesh, -1,
                        "curve needs at least " + std::to_string(kMinVertices) + " vertices, got " +
                            std::to_string(size()));
  }
  std::vector<Complex> e;
  std::vector<double> len;
  edges_of(points, period, e, len);
}

std::vector<double> ImmersedCurve::edge_lengths() const {
  std::vector<double> len(points.size());
  for (std::size_t j = 0; j < points.size(); ++j) {
    const Complex wrap = j + 1 == points.size() ? period : Complex(0.0, 0.0);
    len[j] = magnitude(points[next_index(j, points.size())] + wrap - points[j]);
  }
  return len;
}

double ImmersedCurve::length() const {
  double sum = 0.0;
  for (double l : edge_lengths()) sum += l;
  return sum;
}

double ImmersedCurve::quality() const {
  auto len = edge_lengths();
  auto [lo, hi] = std::minmax_element(len.begin(), len.end());
  return *lo / *hi;
}

namespace {

// Structure-of-arrays geometry shared by compute_frame and flow_velocity so
// both produce bit-identical K.
struct Kernel {
  std::vector<double> ex, ey, len;      // edge j: F_{j+1} - F_j
  std::vector<double> turn, k;          // vertex turning angle and curvature
  std::vector<double> nx, ny;           // unit normal N = iT
  std::vector<double> v;                // <grad psi, N>

  void resize(std::size_t n) {
    for (auto* a : {&ex, &ey, &len, &turn, &k, &nx, &ny, &v}) a->resize(n);
  }
};

void run_kernel(std::span<const Complex> p, Complex period, const AmbientSpace& space, Kernel& g) {
  const std::size_t n = p.size();
  g.resize(n);
  double* ex = g.ex.data();
  double* ey = g.ey.data();
  double* len = g.len.data();

  for (std::size_t j = 0; j + 1 < n; ++j) {
    ex[j] = p[j + 1].real() - p[j].real();
    ey[j] = p[j + 1].imag() - p[j].imag();
  }
  ex[n - 1] = p[0].real() + period.real() - p[n - 1].real();
  ey[n - 1] = p[0].imag() + period.imag() - p[n - 1].imag();
  double min_len = std::numeric_limits<double>::infinity();
  double sum_len = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    len[j] = std::sqrt(ex[j] * ex[j] + ey[j] * ey[j]);
    min_len = std::min(min_len, len[j]);
    sum_len += len[j];
  }
  if (!(min_len > 0.0) || !std::isfinite(sum_len)) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!(len[j] > 0.0) || !std::isfinite(len[j])) throw_degenerate(j, len[j]);
    }
  }

  double* turn = g.turn.data();
  double* kk = g.k.data();
  double* nx = g.nx.data();
  double* ny = g.ny.data();
  auto vertex = [&](std::size_t j, std::size_t jm) {
    const double cross = ex[jm] * ey[j] - ey[jm] * ex[j];
    const double dot = ex[jm] * ex[j] + ey[jm] * ey[j];
    const double r = cross / (len[jm] * len[j] + dot);
    turn[j] = r;
    kk[j] = 4.0 * small_atan(r) / (len[jm] + len[j]);
    const double cx = ex[jm] + ex[j];
    const double cy = ey[jm] + ey[j];
    const double inv = 1.0 / std::sqrt(cx * cx + cy * cy);
    nx[j] = -cy * inv;
    ny[j] = cx * inv;
  };
  vertex(0, n - 1);
#pragma GCC ivdep
  for (std::size_t j = 1; j < n; ++j) {
    const double cross = ex[j - 1] * ey[j] - ey[j - 1] * ex[j];
    const double dot = ex[j - 1] * ex[j] + ey[j - 1] * ey[j];
    const double r = cross / (len[j - 1] * len[j] + dot);
    turn[j] = r;
    kk[j] = 4.0 * small_atan(r) / (len[j - 1] + len[j]);
    const double cx = ex[j - 1] + ex[j];
    const double cy = ey[j - 1] + ey[j];
    const double inv = 1.0 / std::sqrt(cx * cx + cy * cy);
    nx[j] = -cy * inv;
    ny[j] = cx * inv;
  }
  // turn holds tan(angle / 2) until here.
  double max_r = 0.0;
  for (std::size_t j = 0; j < n; ++j) max_r = std::max(max_r, std::abs(turn[j]));
  const bool slow = !(max_r <= 0.0625);
  if (!slow) {
    for (std::size_t j = 0; j < n; ++j) turn[j] = 2.0 * small_atan(turn[j]);
  }

  if (slow) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t jm = prev_index(j, n);
      turn[j] = turning_angle({ex[jm], ey[jm]}, {ex[j], ey[j]}, len[jm], len[j]);
      if (std::abs(turn[j]) >= std::numbers::pi - kCuspTolerance) throw_cusp(j, turn[j]);
      kk[j] = 2.0 * turn[j] / (len[jm] + len[j]);
      if (!std::isfinite(nx[j]) || !std::isfinite(ny[j])) throw_cusp(j, turn[j]);
    }
  }

  double* v = g.v.data();
  if (space.flat_weight()) {
    std::fill(g.v.begin(), g.v.end(), 0.0);
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      const Complex grad = space.grad(p[j]);
      v[j] = grad.real() * nx[j] + grad.imag() * ny[j];
    }
  }
}

thread_local Kernel scratch;

}  // namespace

FrameData compute_frame(const ImmersedCurve& curve, const AmbientSpace& space) {
  FrameData f;
  compute_frame(curve, space, f);
  return f;
}

void compute_frame(const ImmersedCurve& curve, const AmbientSpace& space, FrameData& f) {
  if (space.n() != 1) throw Error("curve frames need a one-dimensional ambient weight");
  if (curve.size() < ImmersedCurve::kMinVertices) curve.validate();

  const std::size_t n = curve.points.size();
  const auto& p = curve.points;
  Kernel& g = scratch;
  run_kernel(p, curve.period, space, g);

  f.edge_length = g.len;
  f.tangent.resize(n);
  f.normal.resize(n);
  f.curvature = g.k;
  f.theta.resize(n);
  f.a2.resize(n);
  f.mean_curvature.resize(n);
  f.drift.resize(n);
  f.velocity.resize(n);
  f.dual_length.resize(n);

  const bool flat = space.flat_weight();
  double im_prev = flat ? 0.0 : space.im_w(p[0]);
  const double im_first = im_prev;
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t jm = prev_index(j, n);
    const Complex normal(g.nx[j], g.ny[j]);
    const Complex tangent(g.ny[j], -g.nx[j]);
    const double k = g.k[j];
    f.dual_length[j] = 0.5 * (g.len[jm] + g.len[j]);
    f.tangent[j] = tangent;
    f.normal[j] = normal;
    f.a2[j] = k * k;
    f.mean_curvature[j] = k * normal;
    f.drift[j] = g.v[j] * normal;
    f.velocity[j] = (k - g.v[j]) * normal;
  }

  // Unwrap from vertex 0 on the principal branch; increments are the angle
  // between consecutive unit tangents plus the change of Im W.
  f.theta[0] = std::arg(f.tangent[0]) + im_first;
  f.theta[0] = std::remainder(f.theta[0], kTwoPi);
  if (f.theta[0] <= -std::numbers::pi) f.theta[0] += kTwoPi;
  // incr[j] is the step from vertex j - 1 to j; incr[0] closes the loop.
  thread_local std::vector<double> incr;
  incr.resize(n);
  const double* tx = g.ny.data();
  double max_r = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t jm = j == 0 ? n - 1 : j - 1;
    // Tangent is (ny, -nx).
    const double cross = tx[jm] * (-g.nx[j]) + g.nx[jm] * tx[j];
    const double dot = tx[jm] * tx[j] + g.nx[jm] * g.nx[j];
    const double r = cross / (1.0 + dot);
    incr[j] = r;
    max_r = std::max(max_r, std::abs(r));
  }
  if (max_r <= 0.0625) {
    for (std::size_t j = 0; j < n; ++j) incr[j] = 2.0 * small_atan(incr[j]);
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      incr[j] = turning_angle(f.tangent[prev_index(j, n)], f.tangent[j], 1.0, 1.0);
    }
  }
  if (!flat) {
    for (std::size_t j = 1; j < n; ++j) {
      const double im_j = space.im_w(p[j]);
      incr[j] += im_j - im_prev;
      im_prev = im_j;
    }
    const double im_wrap = curve.closed() ? im_first : space.im_w(p[0] + curve.period);
    incr[0] += im_wrap - im_prev;
    for (double& d : incr) {
      if (std::abs(d) > std::numbers::pi) d = std::remainder(d, kTwoPi);
    }
  }
  for (std::size_t j = 1; j < n; ++j) f.theta[j] = f.theta[j - 1] + incr[j];
  f.theta_closure = f.theta[n - 1] + incr[0];
  // The index is a closed-curve notion; a periodic window reports 0.
  f.maslov = curve.closed() ? maslov_index(f) : 0;
}

std::vector<Complex> generalized_mean_curvature_geometric(const FrameData& frame,
                                                          const ImmersedCurve& curve,
                                                          const AmbientSpace& space) {
  std::vector<Complex> k(static_cast<std::size_t>(frame.size()));
  for (std::size_t j = 0; j < k.size(); ++j) {
    const Complex g = space.grad(curve.points[j]);
    const Complex nrm = frame.normal[j];
    const double v = g.real() * nrm.real() + g.imag() * nrm.imag();
    k[j] = (frame.curvature[j] - v) * nrm;
  }
  return k;
}

std::vector<Complex> generalized_mean_curvature_angle(const FrameData& frame) {
  const double jump = frame.theta_closure - frame.theta.front();
  auto dtheta = arclength_derivative(frame.theta, frame.edge_length, jump);
  std::vector<Complex> k(dtheta.size());
  for (std::size_t j = 0; j < k.size(); ++j) k[j] = dtheta[j] * frame.normal[j];
  return k;
}

int maslov_index(const FrameData& frame) {
  const double turns = (frame.theta_closure - frame.theta.front()) / kTwoPi;
  const double rounded = std::round(turns);
  if (std::abs(turns - rounded) > 0.01) {
    throw Error("Maslov index residual " + std::to_string(turns - rounded) + " exceeds 0.01");
  }
  return static_cast<int>(rounded);
}

SecondFundamentalDerivatives second_fundamental_derivatives(const FrameData& frame,
                                                            const ImmersedCurve& curve,
                                                            const AmbientSpace& space) {
  const std::size_t n = static_cast<std::size_t>(frame.size());
  SecondFundamentalDerivatives out;
  out.curvature_derivative = arclength_derivative(frame.curvature, frame.edge_length);
  out.drift_scalar.resize(n);
  out.drift_second.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Complex z = curve.points[j];
    const Complex tn = frame.tangent[j];
    const Complex nm = frame.normal[j];
    const double k = frame.curvature[j];
    const double ks = out.curvature_derivative[j];
    const Complex g = space.grad(z);
    const double v = g.real() * nm.real() + g.imag() * nm.imag();
    const double psi_t = g.real() * tn.real() + g.imag() * tn.imag();
    const Complex ttn[3] = {tn, tn, nm};
    const Complex tt[2] = {tn, tn};
    const Complex nn[2] = {nm, nm};
    const double d3 = space.directional(z, ttn);
    const double h_tt = space.directional(z, tt);
    const double h_nn = space.directional(z, nn);
    out.drift_scalar[j] = v;
    out.drift_second[j] = d3 + k * (h_nn - 2.0 * h_tt) - ks * psi_t - k * k * v;
  }
  return out;
}

double flow_velocity(std::span<const Complex> p, const AmbientSpace& space, std::vector<Complex>& out,
                     Complex period) {
  const std::size_t n = p.size();
  Kernel& g = scratch;
  run_kernel(p, period, space, g);
  out.resize(n);
  double max_a2 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double s = g.k[j] - g.v[j];
    out[j] = Complex(s * g.nx[j], s * g.ny[j]);
    max_a2 = std::max(max_a2, g.k[j] * g.k[j]);
  }
  return max_a2;
}

ProductFrame product_frame(const ProductLagrangian& p) {
  const FrameData f1 = compute_frame(p.first, p.first_space);
  const FrameData f2 = compute_frame(p.second, p.second_space);
  ProductFrame out;
  out.rows = f1.size();
  out.cols = f2.size();
  out.theta.resize(static_cast<std::size_t>(out.rows * out.cols));
  for (int i = 0; i < out.rows; ++i) {
    for (int j = 0; j < out.cols; ++j) {
      out.theta[static_cast<std::size_t>(i * out.cols + j)] =
          f1.theta[static_cast<std::size_t>(i)] + f2.theta[static_cast<std::size_t>(j)];
    }
  }
  out.maslov = f1.maslov + f2.maslov;
  return out;
}

std::vector<double> arclength_derivative(std::span<const double> f, std::span<const double> edge,
                                         double jump) {
  const std::size_t n = f.size();
  std::vector<double> d(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t jm = prev_index(j, n);
    const std::size_t jp = next_index(j, n);
    const double fp = f[jp] + (jp == 0 ? jump : 0.0);
    const double fm = f[jm] - (j == 0 ? jump : 0.0);
    d[j] = (fp - fm) / (edge[jm] + edge[j]);
  }
  return d;
}

std::vector<double> arclength_laplacian(std::span<const double> f, std::span<const double> edge,
                                        double jump) {
  const std::size_t n = f.size();
  std::vector<double> d(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t jm = prev_index(j, n);
    const std::size_t jp = next_index(j, n);
    const double fp = f[jp] + (jp == 0 ? jump : 0.0);
    const double fm = f[jm] - (j == 0 ? jump : 0.0);
    d[j] = 2.0 * ((fp - f[j]) / edge[j] - (f[j] - fm) / edge[jm]) / (edge[j] + edge[jm]);
  }
  return d;
}

}  // namespace lmcf
