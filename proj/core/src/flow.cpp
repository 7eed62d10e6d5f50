#include "lmcf/flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "lmcf/errors.hpp"

namespace lmcf {

void FlowConfig::validate() const {
  if (!(cfl > 0.0 && cfl <= 0.5)) throw ConfigError(0, "cfl must lie in (0, 0.5]");
  if (!(dt_floor > 0.0)) throw ConfigError(0, "dt_floor must be positive");
  if (!(a2_ceiling > 0.0)) throw ConfigError(0, "A2_ceiling must be positive");
  if (!(t_end > 0.0)) throw ConfigError(0, "t_end must be positive");
  if (remesh && remesh_interval < 1) throw ConfigError(0, "remesh_interval must be >= 1");
  if (snapshot_stride < 1) throw ConfigError(0, "snapshot_stride must be >= 1");
  if (snapshots_per_decade < 0) throw ConfigError(0, "snapshots_per_decade must be >= 0");
}

std::string termination_name(Termination kind) {
  switch (kind) {
    case Termination::kReachedEnd: return "reached_t_end";
    case Termination::kBlowUpCeiling: return "blowup_a2_ceiling";
    case Termination::kBlowUpDtFloor: return "blowup_dt_floor";
    case Termination::kBlowUpCusp: return "blowup_cusp";
    case Termination::kMeshDegenerate: return "mesh_degenerate";
  }
  return "reached_t_end";
}

Termination parse_termination(const std::string& name) {
  for (auto k : {Termination::kReachedEnd, Termination::kBlowUpCeiling, Termination::kBlowUpDtFloor,
                 Termination::kBlowUpCusp, Termination::kMeshDegenerate}) {
    if (termination_name(k) == name) return k;
  }
  throw Error("unknown termination event '" + name + "'");
}

namespace {

// RK4 with the first stage supplied by the caller.
ImmersedCurve rk4(const ImmersedCurve& curve, const AmbientSpace& space, double dt,
                  const std::vector<Complex>& k0) {
  const std::size_t n = curve.points.size();
  const auto& p = curve.points;
  thread_local std::array<std::vector<Complex>, 3> k;
  thread_local std::vector<Complex> stage;
  stage.resize(n);

  for (std::size_t j = 0; j < n; ++j) stage[j] = p[j] + 0.5 * dt * k0[j];
  flow_velocity(stage, space, k[0], curve.period);
  for (std::size_t j = 0; j < n; ++j) stage[j] = p[j] + 0.5 * dt * k[0][j];
  flow_velocity(stage, space, k[1], curve.period);
  for (std::size_t j = 0; j < n; ++j) stage[j] = p[j] + dt * k[1][j];
  flow_velocity(stage, space, k[2], curve.period);

  ImmersedCurve out;
  out.t = curve.t + dt;
  out.period = curve.period;
  out.points.resize(n);
  const double w = dt / 6.0;
  for (std::size_t j = 0; j < n; ++j) {
    out.points[j] = p[j] + w * (k0[j] + 2.0 * k[0][j] + 2.0 * k[1][j] + k[2][j]);
  }
  return out;
}

}  // namespace

ImmersedCurve step(const ImmersedCurve& curve, const AmbientSpace& space, double dt) {
  if (!(dt > 0.0)) throw Error("step needs dt > 0");
  std::vector<Complex> k0;
  flow_velocity(curve.points, space, k0, curve.period);
  return rk4(curve, space, dt, k0);
}

StepSize adapt_dt(const FrameData& frame, const FlowConfig& config) {
  const double h_min = *std::min_element(frame.edge_length.begin(), frame.edge_length.end());
  if (!(h_min > 0.0)) throw Error("adapt_dt: degenerate mesh (h_min = 0)");
  const double u = *std::max_element(frame.a2.begin(), frame.a2.end());
  double limit = h_min * h_min;
  if (u > 0.0) limit = std::min(limit, 1.0 / u);
  StepSize s{config.cfl * limit, false};
  if (s.dt < config.dt_floor) {
    s.dt = config.dt_floor;
    s.hit_floor = true;
  }
  return s;
}

namespace {

// Periodic cubic spline through complex samples with knot spacing h.
// A translation period P enters as y_{j+N} = y_j + P.
struct PeriodicSpline {
  std::vector<double> h;       // segment lengths in the parameter
  std::vector<Complex> y;      // values
  std::vector<Complex> m;      // second derivatives
  Complex period{0.0, 0.0};

  Complex next_value(std::size_t j) const {
    return j + 1 == y.size() ? y[0] + period : y[j + 1];
  }

  Complex value(std::size_t j, double u) const {
    const std::size_t jp = (j + 1) % y.size();
    const double hj = h[j];
    const double a = (hj - u) / hj;
    const double b = u / hj;
    return a * y[j] + b * next_value(j) +
           ((a * a * a - a) * m[j] + (b * b * b - b) * m[jp]) * (hj * hj / 6.0);
  }

  Complex derivative(std::size_t j, double u) const {
    const std::size_t jp = (j + 1) % y.size();
    const double hj = h[j];
    const double a = (hj - u) / hj;
    const double b = u / hj;
    return (next_value(j) - y[j]) / hj +
           (-(3.0 * a * a - 1.0) * m[j] + (3.0 * b * b - 1.0) * m[jp]) * (hj / 6.0);
  }

  // Arclength of segment j up to parameter u, 5-point Gauss-Legendre.
  double arclength(std::size_t j, double u) const {
    static constexpr std::array<double, 5> x = {0.0, -0.5384693101056831, 0.5384693101056831,
                                                -0.9061798459386640, 0.9061798459386640};
    static constexpr std::array<double, 5> w = {0.5688888888888889, 0.4786286704993665,
                                                0.4786286704993665, 0.2369268850561891,
                                                0.2369268850561891};
    double sum = 0.0;
    for (std::size_t q = 0; q < 5; ++q) sum += w[q] * std::abs(derivative(j, 0.5 * u * (x[q] + 1.0)));
    return 0.5 * u * sum;
  }
};

PeriodicSpline fit_spline(const std::vector<Complex>& pts, Complex period) {
  const std::size_t n = pts.size();
  PeriodicSpline s;
  s.y = pts;
  s.period = period;
  s.h.resize(n);
  std::vector<Complex> e(n);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = s.next_value(j) - pts[j];
    s.h[j] = std::abs(e[j]);
  }

  // Cyclic tridiagonal system for the second derivatives:
  //   h_{j-1} M_{j-1} + 2 (h_{j-1} + h_j) M_j + h_j M_{j+1} = rhs_j
  std::vector<double> a(n), b(n), c(n);
  std::vector<Complex> r(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t jm = (j + n - 1) % n;
    a[j] = s.h[jm];
    b[j] = 2.0 * (s.h[jm] + s.h[j]);
    c[j] = s.h[j];
    r[j] = 6.0 * (e[j] / s.h[j] - e[jm] / s.h[jm]);
  }
  // Sherman-Morrison on the corner entries.
  const double gamma = -b[0];
  std::vector<double> bb = b;
  bb[0] = b[0] - gamma;
  bb[n - 1] = b[n - 1] - a[0] * c[n - 1] / gamma;

  auto thomas = [&](std::vector<Complex> d) {
    std::vector<double> cp(n);
    cp[0] = c[0] / bb[0];
    d[0] /= bb[0];
    for (std::size_t j = 1; j < n; ++j) {
      const double den = bb[j] - a[j] * cp[j - 1];
      cp[j] = c[j] / den;
      d[j] = (d[j] - a[j] * d[j - 1]) / den;
    }
    for (std::size_t j = n - 1; j-- > 0;) d[j] -= cp[j] * d[j + 1];
    return d;
  };

  std::vector<Complex> x = thomas(r);
  std::vector<Complex> uvec(n, Complex(0.0, 0.0));
  uvec[0] = gamma;
  uvec[n - 1] = c[n - 1];
  std::vector<Complex> z = thomas(uvec);
  const Complex num = x[0] + (a[0] / gamma) * x[n - 1];
  const Complex den = 1.0 + z[0] + (a[0] / gamma) * z[n - 1];
  const Complex factor = num / den;
  s.m.resize(n);
  for (std::size_t j = 0; j < n; ++j) s.m[j] = x[j] - factor * z[j];
  return s;
}

std::vector<Complex> resample_equal_arclength(const std::vector<Complex>& pts, Complex period) {
  const std::size_t n = pts.size();
  const PeriodicSpline s = fit_spline(pts, period);
  std::vector<double> cum(n + 1, 0.0);
  for (std::size_t j = 0; j < n; ++j) cum[j + 1] = cum[j] + s.arclength(j, s.h[j]);
  const double total = cum[n];

  std::vector<Complex> out(n);
  out[0] = pts[0];
  std::size_t seg = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const double target = total * static_cast<double>(i) / static_cast<double>(n);
    while (seg + 1 < n && cum[seg + 1] < target) ++seg;
    const double local = target - cum[seg];
    // Newton on the arclength within the segment, safeguarded by bisection.
    double lo = 0.0, hi = s.h[seg];
    double u = s.h[seg] * local / (cum[seg + 1] - cum[seg]);
    for (int it = 0; it < 50; ++it) {
      const double f = s.arclength(seg, u) - local;
      if (f > 0.0) hi = u; else lo = u;
      const double step = f / std::abs(s.derivative(seg, u));
      double next = u - step;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - u) <= 1e-15 * s.h[seg]) {
        u = next;
        break;
      }
      u = next;
    }
    out[i] = s.value(seg, u);
  }
  return out;
}

}  // namespace

ImmersedCurve redistribute(const ImmersedCurve& curve) {
  curve.validate();
  ImmersedCurve out;
  out.t = curve.t;
  out.period = curve.period;
  out.points = resample_equal_arclength(curve.points, curve.period);
  // One more pass settles the chord-length knots onto the resampled spacing.
  out.points = resample_equal_arclength(out.points, curve.period);
  return out;
}

double spline_length(const ImmersedCurve& curve) {
  const PeriodicSpline s = fit_spline(curve.points, curve.period);
  double total = 0.0;
  for (std::size_t j = 0; j < s.h.size(); ++j) total += s.arclength(j, s.h[j]);
  return total;
}

TraceRow make_row(const ImmersedCurve& curve, const FrameData& frame, double dt) {
  TraceRow row;
  row.t = curve.t;
  row.dt = dt;
  for (double l : frame.edge_length) row.area += l;
  row.u = *std::max_element(frame.a2.begin(), frame.a2.end());
  for (const Complex& k : frame.velocity) row.max_k = std::max(row.max_k, std::norm(k));
  row.max_k = std::sqrt(row.max_k);
  auto [lo, hi] = std::minmax_element(frame.theta.begin(), frame.theta.end());
  row.theta_min = *lo;
  row.theta_max = *hi;
  row.maslov = frame.maslov;
  return row;
}

FlowResult run(const ImmersedCurve& initial, const AmbientSpace& space, const FlowConfig& config,
               const FlowObserver& observer) {
  config.validate();
  initial.validate();

  FlowResult result;
  FlowTrace& trace = result.trace;
  trace.redistributed = config.remesh;

  ImmersedCurve curve = initial;
  FrameData frame = compute_frame(curve, space);

  auto add_snapshot = [&](const ImmersedCurve& c) {
    if (!trace.snapshots.empty() && trace.snapshots.back().t == c.t) return;
    trace.snapshots.push_back({static_cast<int>(trace.snapshots.size()), c.t, c});
  };

  // Next U threshold 10^(j / per_decade) that triggers a snapshot.
  auto next_threshold = [&](double u) {
    if (config.snapshots_per_decade == 0) return std::numeric_limits<double>::infinity();
    const double per = config.snapshots_per_decade;
    const double j = std::floor(std::log10(std::max(u, 1e-300)) * per) + 1.0;
    return std::pow(10.0, j / per);
  };

  const double t_eps = 1e-14 * std::max(1.0, config.t_end);
  double threshold = next_threshold(0.0);
  long long steps = 0;

  for (;;) {
    const StepSize proposed = adapt_dt(frame, config);
    TraceRow row = make_row(curve, frame, proposed.dt);

    const bool at_end = curve.t >= config.t_end - t_eps;
    double dt = at_end ? 0.0 : std::min(proposed.dt, config.t_end - curve.t);
    row.dt = dt;
    trace.rows.push_back(row);
    if (observer) observer(curve, frame);

    if (steps % config.snapshot_stride == 0) add_snapshot(curve);
    if (row.u >= threshold) {
      add_snapshot(curve);
      threshold = next_threshold(row.u);
    }

    auto finish = [&](Termination kind, std::string detail) {
      add_snapshot(curve);
      result.event = {kind, curve.t, std::move(detail)};
    };

    if (at_end) {
      finish(Termination::kReachedEnd, "reached t_end");
      break;
    }
    if (row.u >= config.a2_ceiling) {
      finish(Termination::kBlowUpCeiling, "U_t reached A2_ceiling");
      break;
    }
    if (proposed.hit_floor) {
      finish(Termination::kBlowUpDtFloor, "time step fell below dt_floor");
      break;
    }

    try {
      ImmersedCurve next = rk4(curve, space, dt, frame.velocity);
      if (at_end || curve.t + dt >= config.t_end - t_eps) next.t = std::max(next.t, config.t_end);
      ++steps;
      if (config.remesh && steps % config.remesh_interval == 0) {
        next = redistribute(next);
        if (next.quality() < config.quality_floor) {
          curve = std::move(next);
          finish(Termination::kMeshDegenerate, "mesh quality below floor after remesh");
          break;
        }
      }
      compute_frame(next, space, frame);
      curve = std::move(next);
    } catch (const GeometryError& e) {
      if (e.kind() == GeometryError::Kind::kCusp) {
        finish(Termination::kBlowUpCusp, e.what());
      } else {
        finish(Termination::kMeshDegenerate, e.what());
      }
      break;
    }
  }
  return result;
}

}  // namespace lmcf
