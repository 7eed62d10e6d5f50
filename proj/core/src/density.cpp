#include "lmcf/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "lmcf/errors.hpp"

namespace lmcf {

namespace {

double cross(Complex a, Complex b) { return a.real() * b.imag() - a.imag() * b.real(); }
double dot(Complex a, Complex b) { return a.real() * b.real() + a.imag() * b.imag(); }

// Gradient of the cutoff in the ambient plane.
Complex cutoff_gradient(Complex x, const DensityProbe& probe) {
  if (!std::isfinite(probe.r)) return {0.0, 0.0};
  const Complex d = x - probe.x0;
  const double dist = std::abs(d);
  const double u = (dist - probe.r) / probe.r;
  if (u <= 0.0 || u >= 1.0) return {0.0, 0.0};
  const double ds = 30.0 * u * u * (u - 1.0) * (u - 1.0);
  return -(ds / probe.r) * (d / dist);
}

double checked_tau(const DensityProbe& probe, double t) {
  const double tau = probe.t0 - t;
  if (!(tau > 0.0)) {
    throw Error("density evaluated at t = " + std::to_string(t) + " not before t0 = " + std::to_string(probe.t0));
  }
  return tau;
}

Complex next_point(const std::vector<Complex>& p, std::size_t j, Complex period) {
  return j + 1 < p.size() ? p[j + 1] : p[0] + period;
}

}  // namespace

std::string weight_name(WeightKind kind) {
  switch (kind) {
    case WeightKind::kOne: return "one";
    case WeightKind::kThetaSquared: return "theta2";
    case WeightKind::kMoment: return "moment";
  }
  return "one";
}

WeightKind parse_weight(const std::string& name) {
  if (name == "one") return WeightKind::kOne;
  if (name == "theta2") return WeightKind::kThetaSquared;
  if (name == "moment") return WeightKind::kMoment;
  throw Error("unknown weight '" + name + "' (expected one, theta2 or moment)");
}

void DensityProbe::validate() const {
  if (!(r > 0.0)) throw Error("probe cutoff radius r must be positive");
  if (q < 1) throw Error("probe moment order q must be at least 1");
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw Error("probe eps must be a non-negative number");
  if (!std::isfinite(x0.real()) || !std::isfinite(x0.imag()) || !std::isfinite(t0) || !std::isfinite(y)) {
    throw Error("probe x0, t0 and y must be finite");
  }
}

double DensityProbe::weight(double theta) const {
  switch (f) {
    case WeightKind::kOne: return 1.0;
    case WeightKind::kThetaSquared: return theta * theta;
    case WeightKind::kMoment: return std::pow(theta - y, 2 * q);
  }
  return 1.0;
}

double DensityProbe::weight_derivative(double theta) const {
  switch (f) {
    case WeightKind::kOne: return 0.0;
    case WeightKind::kThetaSquared: return 2.0 * theta;
    case WeightKind::kMoment: return 2.0 * q * std::pow(theta - y, 2 * q - 1);
  }
  return 0.0;
}

double DensityProbe::weight_second_derivative(double theta) const {
  switch (f) {
    case WeightKind::kOne: return 0.0;
    case WeightKind::kThetaSquared: return 2.0;
    case WeightKind::kMoment: return 2.0 * q * (2 * q - 1) * std::pow(theta - y, 2 * q - 2);
  }
  return 0.0;
}

double heat_kernel(double dist2, double tau, int n) {
  return std::pow(4.0 * std::numbers::pi * tau, -0.5 * n) * std::exp(-dist2 / (4.0 * tau));
}

double backward_kernel(Complex x, const DensityProbe& probe, double t) {
  return heat_kernel(std::norm(x - probe.x0), checked_tau(probe, t));
}

double smoothstep(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u * u * u * (u * (6.0 * u - 15.0) + 10.0);
}

double cutoff_phi(Complex x, const DensityProbe& probe) {
  if (!std::isfinite(probe.r)) return 1.0;
  return 1.0 - smoothstep((std::abs(x - probe.x0) - probe.r) / probe.r);
}

double weighted_integral(const ImmersedCurve& curve, const FrameData& frame, const DensityProbe& probe,
                         double t) {
  const double tau = checked_tau(probe, t);
  double sum = 0.0;
  for (int j = 0; j < curve.size(); ++j) {
    const Complex x = curve.points[j];
    sum += probe.weight(frame.theta[j]) * cutoff_phi(x, probe) * heat_kernel(std::norm(x - probe.x0), tau) *
           frame.dual_length[j];
  }
  return sum;
}

std::vector<Complex> normal_component(const FrameData& frame, const ImmersedCurve& curve, Complex x0) {
  std::vector<Complex> out(curve.points.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = dot(curve.points[j] - x0, frame.normal[j]) * frame.normal[j];
  }
  return out;
}

double kernel_support_h_max(const ImmersedCurve& curve, const FrameData& frame, Complex x0, double tau) {
  const double reach2 = 64.0 * tau;
  double inside = 0.0;
  double global = 0.0;
  const auto& p = curve.points;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double h = frame.edge_length[j];
    global = std::max(global, h);
    const Complex mid = 0.5 * (p[j] + next_point(p, j, curve.period));
    if (std::norm(mid - x0) <= reach2) inside = std::max(inside, h);
  }
  return inside > 0.0 ? inside : global;
}

bool kernel_resolved(const ImmersedCurve& curve, const FrameData& frame, Complex x0, double tau) {
  return tau > 0.0 && std::sqrt(tau) >= 3.0 * kernel_support_h_max(curve, frame, x0, tau);
}

BudgetSample budget_sample(const ImmersedCurve& curve, const FrameData& frame, const AmbientSpace& space,
                           const DensityProbe& probe) {
  BudgetSample out;
  out.t = curve.t;
  const double tau = checked_tau(probe, curve.t);
  out.tau = tau;
  const auto& p = curve.points;
  const auto& K = frame.velocity;
  const std::size_t n = p.size();
  const bool flat = space.flat_weight();
  const bool angle_weight = probe.f != WeightKind::kOne;

  // Edge vectors and the rate of change of each edge length.
  std::vector<Complex> e(n);
  std::vector<double> dlen(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t jp = j + 1 < n ? j + 1 : 0;
    e[j] = next_point(p, j, curve.period) - p[j];
    dlen[j] = dot(e[j], K[jp] - K[j]) / frame.edge_length[j];
  }

  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t jm = j == 0 ? n - 1 : j - 1;
    const std::size_t jp = j + 1 < n ? j + 1 : 0;
    const Complex x = p[j] - probe.x0;
    const double theta = frame.theta[j];
    const double f = probe.weight(theta);
    const double phi = cutoff_phi(p[j], probe);
    const double rho = heat_kernel(std::norm(x), tau);
    const double d = frame.dual_length[j];
    const double w = f * phi * rho * d;

    const double rho_rate = rho * (0.5 / tau - std::norm(x) / (4.0 * tau * tau) - dot(x, K[j]) / (2.0 * tau));
    const double phi_rate = dot(cutoff_gradient(p[j], probe), K[j]);
    const double d_rate = 0.5 * (dlen[jm] + dlen[j]);
    double dphi = f * (phi_rate * rho * d + phi * rho_rate * d + phi * rho * d_rate);

    const Complex grad = flat ? Complex(0.0, 0.0) : space.grad(p[j]);
    const double theta_s = dot(K[j], frame.normal[j]);
    if (angle_weight) {
      // theta_j = arg(e_{j-1} + e_j) + Im W(F_j).
      const Complex chord = e[jm] + e[j];
      const double theta_rate = ((K[jp] - K[jm]) / chord).imag() + cross(grad, K[j]);
      dphi += probe.weight_derivative(theta) * theta_rate * phi * rho * d;
      const double psi_s = dot(grad, frame.tangent[j]);
      out.source += (probe.weight_derivative(theta) * psi_s * theta_s -
                     probe.weight_second_derivative(theta) * theta_s * theta_s) *
                    phi * rho * d;
    }

    const Complex perp = dot(x, frame.normal[j]) * frame.normal[j];
    out.phi += w;
    out.dphi += dphi;
    out.defect += w * std::norm(K[j] + perp / (2.0 * tau));
    out.kinetic += w * std::norm(K[j]);
  }
  out.slack = probe.eps * out.kinetic;
  out.excess = out.dphi - out.source + out.defect - out.slack;
  out.b1 = out.phi / (2.0 * std::sqrt(tau));
  out.b2 = std::pow(tau, -0.75);
  out.h_max = kernel_support_h_max(curve, frame, probe.x0, tau);
  out.resolved = std::sqrt(tau) >= 3.0 * out.h_max;
  return out;
}

BudgetFit fit_budget(const std::vector<BudgetSample>& samples) {
  // Hildreth's dual coordinate ascent for min |c|^2 subject to G c >= h,
  // with rows (b1, b2, 1) -> excess and the three sign constraints.
  struct Row {
    double g[3];
    double h;
    double norm2;
  };
  std::vector<Row> rows;
  BudgetFit fit;
  for (const BudgetSample& s : samples) {
    if (!s.resolved) continue;
    ++fit.samples_used;
    Row r{{s.b1, s.b2, 1.0}, s.excess, 0.0};
    r.norm2 = s.b1 * s.b1 + s.b2 * s.b2 + 1.0;
    rows.push_back(r);
  }
  for (int k = 0; k < 3; ++k) {
    Row r{{0.0, 0.0, 0.0}, 0.0, 1.0};
    r.g[k] = 1.0;
    rows.push_back(r);
  }
  std::vector<double> lambda(rows.size(), 0.0);
  double c[3] = {0.0, 0.0, 0.0};
  double scale = 0.0;
  for (const Row& r : rows) scale = std::max(scale, std::abs(r.h));
  const double tol = 1e-13 * std::max(scale, 1e-300);
  for (int sweep = 0; sweep < 200000; ++sweep) {
    double change = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Row& r = rows[i];
      const double gc = r.g[0] * c[0] + r.g[1] * c[1] + r.g[2] * c[2];
      const double next = std::max(0.0, lambda[i] + (r.h - gc) / r.norm2);
      const double delta = next - lambda[i];
      if (delta != 0.0) {
        for (int k = 0; k < 3; ++k) c[k] += delta * r.g[k];
        lambda[i] = next;
        change = std::max(change, std::abs(delta) * std::sqrt(r.norm2));
      }
    }
    if (change <= tol) break;
  }
  for (double& v : c) v = std::max(v, 0.0);
  double violation = 0.0;
  for (std::size_t i = 0; i + 3 < rows.size(); ++i) {
    const Row& r = rows[i];
    violation = std::max(violation, r.h - (r.g[0] * c[0] + r.g[1] * c[1] + r.g[2] * c[2]));
  }
  fit.c1 = c[0];
  fit.c2 = c[1];
  fit.c3 = c[2] + violation;
  fit.residual_violation = violation;
  fit.feasible = std::isfinite(fit.c1) && std::isfinite(fit.c2) && std::isfinite(fit.c3);
  return fit;
}

MonotonicityBudget monotonicity_budget(const std::vector<Snapshot>& snapshots, const AmbientSpace& space,
                                       const DensityProbe& probe, const std::vector<double>& sample_times) {
  probe.validate();
  for (double t : sample_times) {
    if (!(t < probe.t0)) throw Error("probe t0 lies inside the sample range of the monotonicity budget");
  }
  std::vector<int> picked;
  for (double t : sample_times) {
    int best = -1;
    double best_gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < static_cast<int>(snapshots.size()); ++i) {
      if (!(snapshots[i].curve.t < probe.t0)) continue;
      const double gap = std::abs(snapshots[i].curve.t - t);
      if (gap < best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    if (best >= 0 && std::find(picked.begin(), picked.end(), best) == picked.end()) picked.push_back(best);
  }
  if (static_cast<int>(picked.size()) < kMinBudgetSamples) {
    throw Error("monotonicity budget needs at least " + std::to_string(kMinBudgetSamples) +
                " distinct snapshots before t0, got " + std::to_string(picked.size()));
  }
  std::sort(picked.begin(), picked.end(),
            [&](int a, int b) { return snapshots[a].curve.t < snapshots[b].curve.t; });
  MonotonicityBudget out;
  FrameData frame;
  for (int i : picked) {
    compute_frame(snapshots[i].curve, space, frame);
    out.samples.push_back(budget_sample(snapshots[i].curve, frame, space, probe));
  }
  out.fit = fit_budget(out.samples);
  return out;
}

DensityRecorder::DensityRecorder(const AmbientSpace& space, DensityProbe probe)
    : space_(&space), probe_(std::move(probe)) {
  probe_.validate();
}

void DensityRecorder::operator()(const ImmersedCurve& curve, const FrameData& frame) {
  if (!(curve.t < probe_.t0)) return;
  t_.push_back(curve.t);
  phi_.push_back(weighted_integral(curve, frame, probe_, curve.t));
}

double DensityRecorder::max_relative_increase() const {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < phi_.size(); ++k) {
    worst = std::max(worst, (phi_[k + 1] - phi_[k]) / phi_[k]);
  }
  return worst;
}

RescaledSnapshot rescale(const Snapshot& snapshot, const AmbientSpace& space, double lambda, Complex x0,
                         double T) {
  if (!(lambda > 0.0)) throw Error("rescaling factor must be positive");
  const ImmersedCurve& c = snapshot.curve;
  if (!(c.t < T)) throw Error("cannot rescale a snapshot at or after the singular time");
  const FrameData frame = compute_frame(c, space);
  RescaledSnapshot out;
  out.lambda = lambda;
  out.t = c.t;
  out.s = lambda * lambda * (c.t - T);
  out.source_index = snapshot.index;
  out.period = lambda * c.period;
  out.maslov = frame.maslov;
  const std::size_t n = c.points.size();
  out.points.resize(n);
  out.weights.resize(n);
  out.mean_curvature.resize(n);
  out.velocity.resize(n);
  out.theta = frame.theta;
  out.normal = frame.normal;
  double drift = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    out.points[j] = lambda * (c.points[j] - x0);
    out.weights[j] = lambda * frame.dual_length[j];
    out.mean_curvature[j] = frame.mean_curvature[j] / lambda;
    out.velocity[j] = frame.velocity[j] / lambda;
    if (!space.flat_weight()) drift = std::max(drift, std::abs(space.grad(c.points[j])));
  }
  out.drift_magnitude = drift / lambda;
  return out;
}

std::vector<RescaledSnapshot> rescale(const std::vector<Snapshot>& snapshots, const AmbientSpace& space,
                                      double lambda, Complex x0, double T) {
  std::vector<RescaledSnapshot> out;
  for (const Snapshot& s : snapshots) {
    if (s.curve.t < T) out.push_back(rescale(s, space, lambda, x0, T));
  }
  return out;
}

double weighted_integral(const RescaledSnapshot& snap, const DensityProbe& probe) {
  const double tau = checked_tau(probe, snap.s);
  double sum = 0.0;
  for (std::size_t j = 0; j < snap.points.size(); ++j) {
    const Complex x = snap.points[j];
    sum += probe.weight(snap.theta[j]) * cutoff_phi(x, probe) * heat_kernel(std::norm(x - probe.x0), tau) *
           snap.weights[j];
  }
  return sum;
}

double segment_length_in_disk(Complex a, Complex b, double R) {
  const Complex d = b - a;
  const double A = std::norm(d);
  if (A == 0.0) return 0.0;
  const double B = 2.0 * dot(a, d);
  const double C = std::norm(a) - R * R;
  const double disc = B * B - 4.0 * A * C;
  if (disc <= 0.0) return 0.0;
  const double root = std::sqrt(disc);
  const double u1 = std::max(0.0, (-B - root) / (2.0 * A));
  const double u2 = std::min(1.0, (-B + root) / (2.0 * A));
  return u2 > u1 ? (u2 - u1) * std::sqrt(A) : 0.0;
}

std::vector<double> ball_weights(const RescaledSnapshot& snap, double R) {
  const auto& p = snap.points;
  const std::size_t n = p.size();
  std::vector<double> half(n);  // clipped length of [p_j, midpoint of edge j]
  std::vector<double> back(n);  // clipped length of [midpoint of edge j, p_{j+1}]
  for (std::size_t j = 0; j < n; ++j) {
    const Complex q = next_point(p, j, snap.period);
    const Complex mid = 0.5 * (p[j] + q);
    half[j] = segment_length_in_disk(p[j], mid, R);
    back[j] = segment_length_in_disk(mid, q, R);
  }
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) w[j] = half[j] + back[j == 0 ? n - 1 : j - 1];
  return w;
}

SpaceTimeIntegrals spacetime_integrals(const std::vector<RescaledSnapshot>& seq, double s1, double s2, double R) {
  if (!(s1 < s2 && s2 < 0.0)) throw Error("space-time integrals need s1 < s2 < 0");
  struct Point {
    double s;
    double v[3];
  };
  std::vector<Point> pts;
  for (const RescaledSnapshot& snap : seq) {
    const std::vector<double> w = ball_weights(snap, R);
    Point pt{snap.s, {0.0, 0.0, 0.0}};
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (w[j] == 0.0) continue;
      const double perp = dot(snap.points[j], snap.normal[j]);
      pt.v[0] += perp * perp * w[j];
      pt.v[1] += std::norm(snap.mean_curvature[j]) * w[j];
      pt.v[2] += std::norm(snap.velocity[j]) * w[j];
    }
    pts.push_back(pt);
  }
  std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.s < b.s; });
  pts.erase(std::unique(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.s == b.s; }),
            pts.end());
  if (pts.size() < 2 || pts.front().s > s1 || pts.back().s < s2) {
    throw Error("rescaled snapshots do not bracket [" + std::to_string(s1) + ", " + std::to_string(s2) + "]");
  }
  double out[3] = {0.0, 0.0, 0.0};
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Point& a = pts[i];
    const Point& b = pts[i + 1];
    const double lo = std::max(a.s, s1);
    const double hi = std::min(b.s, s2);
    if (!(hi > lo)) continue;
    const double span = b.s - a.s;
    for (int k = 0; k < 3; ++k) {
      const double vlo = a.v[k] + (b.v[k] - a.v[k]) * (lo - a.s) / span;
      const double vhi = a.v[k] + (b.v[k] - a.v[k]) * (hi - a.s) / span;
      out[k] += 0.5 * (vlo + vhi) * (hi - lo);
    }
  }
  return {out[0], out[1], out[2]};
}

double volume_ratio(const ImmersedCurve& curve, Complex x0, double R) {
  if (!(R > 0.0)) throw Error("volume ratio radius must be positive");
  double len = 0.0;
  const auto& p = curve.points;
  for (std::size_t j = 0; j < p.size(); ++j) {
    len += segment_length_in_disk(p[j] - x0, next_point(p, j, curve.period) - x0, R);
  }
  return len / R;
}

double volume_ratio(const RescaledSnapshot& snap, double R) {
  if (!(R > 0.0)) throw Error("volume ratio radius must be positive");
  double len = 0.0;
  const auto& p = snap.points;
  for (std::size_t j = 0; j < p.size(); ++j) len += segment_length_in_disk(p[j], next_point(p, j, snap.period), R);
  return len / R;
}

double angle_moments(const RescaledSnapshot& snap, const DensityProbe& probe) {
  if (probe.f != WeightKind::kMoment) throw Error("angle moments need the moment weight");
  return weighted_integral(snap, probe);
}

KernelBoundResult kernel_bound_check(double alpha, double beta, int n, const std::vector<double>& s_min_levels,
                                     double growth) {
  KernelBoundResult out;
  out.alpha = alpha;
  out.beta = beta;
  constexpr int kXPerDecade = 200;
  constexpr int kSPerDecade = 40;
  std::vector<double> xs{0.0};
  for (int i = 0; i <= 7 * kXPerDecade; ++i) xs.push_back(1e-6 * std::pow(10.0, static_cast<double>(i) / kXPerDecade));
  for (double s_min : s_min_levels) {
    if (!(s_min > 0.0 && s_min <= 1.0)) throw Error("kernel bound grid needs 0 < s_min <= 1");
    const int steps = static_cast<int>(std::ceil(-std::log10(s_min) * kSPerDecade));
    double c = 0.0;
    for (int i = 0; i <= steps; ++i) {
      const double s = steps == 0 ? 1.0 : s_min * std::pow(1.0 / s_min, static_cast<double>(i) / steps);
      const double scale = std::pow(s, -0.5 * n);
      for (double x : xs) {
        const double g = std::exp(-x * x / s) * scale;
        const double lhs = x * x * std::pow(s, -alpha) * g;
        const double rhs = 1.0 + std::pow(s, -beta) * g;
        c = std::max(c, lhs / rhs);
      }
    }
    out.levels.push_back({s_min, c});
  }
  if (!out.levels.empty()) out.c = out.levels.back().c;
  const std::size_t m = out.levels.size();
  out.divergent = !std::isfinite(out.c) || (m >= 2 && out.levels[m - 1].c > growth * out.levels[m - 2].c);
  out.passed = !out.divergent;
  return out;
}

}  // namespace lmcf
