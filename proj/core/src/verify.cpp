#include "lmcf/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

#include "lmcf/errors.hpp"

namespace lmcf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double max_curvature(const FrameData& f) {
  double m = 0.0;
  for (double k : f.curvature) m = std::max(m, std::abs(k));
  return m;
}

// Residual of a quantity with units length^-power, measured at curvature scale 1.
void set_unit(IdentityResidual& r, const FrameData& f, int power) {
  const double kappa = max_curvature(f);
  r.unit_linf = kappa > 0.0 ? r.linf / std::pow(kappa, power) : r.linf;
}

IdentityResidual summarize(std::vector<double> r, double scale) {
  IdentityResidual out;
  out.scale = scale;
  double sum = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) {
    const double a = std::abs(r[j]);
    if (!(a <= out.linf)) {
      out.linf = a;
      out.worst = static_cast<int>(j);
    }
    sum += a * a;
  }
  out.l2 = r.empty() ? 0.0 : std::sqrt(sum / static_cast<double>(r.size()));
  out.residual = std::move(r);
  return out;
}

struct PairFrames {
  FrameData a;
  FrameData b;
};

PairFrames frames_of(const StepPair& pair, const AmbientSpace& space) {
  if (pair.before.size() != pair.after.size()) {
    throw Error("state pair has mismatched vertex counts " + std::to_string(pair.before.size()) +
                " and " + std::to_string(pair.after.size()));
  }
  if (!(pair.dt > 0.0)) throw Error("state pair needs dt > 0");
  return {compute_frame(pair.before, space), compute_frame(pair.after, space)};
}

// <K, H> = (k - V) k per vertex.
std::vector<double> k_dot_h(const FrameData& f) {
  std::vector<double> out(f.curvature.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double v = (f.velocity[j] * std::conj(f.normal[j])).real();
    out[j] = v * f.curvature[j];
  }
  return out;
}

// Round-off of a difference quotient of values up to `magnitude` over `step`.
double roundoff(double magnitude, double step) {
  return 64.0 * std::numeric_limits<double>::epsilon() * magnitude / step;
}

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

double theta_jump(const FrameData& f) { return f.theta_closure - f.theta.front(); }

std::vector<double> theta_rhs(const FrameData& f, const ImmersedCurve& c, const AmbientSpace& space) {
  const double jump = theta_jump(f);
  const auto lap = arclength_laplacian(f.theta, f.edge_length, jump);
  const auto ds = arclength_derivative(f.theta, f.edge_length, jump);
  std::vector<double> out(lap.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const Complex g = space.grad(c.points[j]);
    const double psi_s = g.real() * f.tangent[j].real() + g.imag() * f.tangent[j].imag();
    out[j] = lap[j] + psi_s * ds[j];
  }
  return out;
}

std::vector<double> a2_rhs(const FrameData& f, const ImmersedCurve& c, const AmbientSpace& space) {
  const auto sfd = second_fundamental_derivatives(f, c, space);
  const auto lap = arclength_laplacian(f.a2, f.edge_length);
  std::vector<double> out(lap.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double k = f.curvature[j];
    const double ks = sfd.curvature_derivative[j];
    const double v = sfd.drift_scalar[j];
    out[j] = lap[j] - 2.0 * ks * ks + 2.0 * k * k * k * k - 2.0 * k * sfd.drift_second[j] -
             2.0 * v * k * k * k;
  }
  return out;
}

double max_abs(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  for (double x : b) m = std::max(m, std::abs(x));
  return m;
}

ResidualLevel level_of(const LevelState& s, const IdentityResidual& r) {
  return {s.vertices, s.pair.before.t, s.pair.dt, r.linf, r.l2, r.scale, r.noise, r.worst, r.unit_linf};
}

template <typename Fn>
ResidualReport check_with(const std::string& name, const std::vector<LevelState>& levels, double tolerance,
                          Fn residual) {
  ResidualReport report;
  report.identity = name;
  report.tolerance = tolerance;
  for (const LevelState& s : levels) report.levels.push_back(level_of(s, residual(s)));
  assess(report);
  return report;
}

}  // namespace

StepPair make_step_pair(const ImmersedCurve& curve, const AmbientSpace& space, double dt) {
  return {curve, step(curve, space, dt), dt};
}

IdentityResidual metric_residual(const StepPair& pair, const AmbientSpace& space) {
  const auto [fa, fb] = frames_of(pair, space);
  const auto ka = k_dot_h(fa);
  const auto kb = k_dot_h(fb);
  const std::size_t n = ka.size();
  std::vector<double> r(n);
  double scale = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t jp = (j + 1) % n;
    const double la = fa.edge_length[j] * fa.edge_length[j];
    const double lb = fb.edge_length[j] * fb.edge_length[j];
    const double lhs = (lb - la) / pair.dt / (0.5 * (la + lb));
    const double rhs = -0.5 * ((ka[j] + ka[jp]) + (kb[j] + kb[jp]));
    r[j] = lhs - rhs;
    scale = std::max(scale, std::abs(rhs));
  }
  auto out = summarize(std::move(r), scale);
  out.noise = roundoff(1.0, pair.dt);
  set_unit(out, fa, 2);
  return out;
}

IdentityResidual area_element_residual(const StepPair& pair, const AmbientSpace& space) {
  const auto [fa, fb] = frames_of(pair, space);
  const auto ka = k_dot_h(fa);
  const auto kb = k_dot_h(fb);
  const std::size_t n = ka.size();
  std::vector<double> r(n + 1);
  double scale = 0.0;
  double len_a = 0.0, len_b = 0.0, int_a = 0.0, int_b = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double da = fa.dual_length[j];
    const double db = fb.dual_length[j];
    const double lhs = (db - da) / pair.dt / (0.5 * (da + db));
    const double rhs = -0.5 * (ka[j] + kb[j]);
    r[j] = lhs - rhs;
    scale = std::max(scale, std::abs(rhs));
    len_a += da;
    len_b += db;
    int_a += ka[j] * da;
    int_b += kb[j] * db;
  }
  const double lhs = (len_b - len_a) / pair.dt / (0.5 * (len_a + len_b));
  const double rhs = -0.5 * (int_a / len_a + int_b / len_b);
  r[n] = lhs - rhs;
  auto out = summarize(std::move(r), std::max(scale, std::abs(rhs)));
  out.noise = roundoff(1.0, pair.dt);
  set_unit(out, fa, 2);
  return out;
}

IdentityResidual theta_residual(const StepPair& pair, const AmbientSpace& space) {
  const auto [fa, fb] = frames_of(pair, space);
  const std::size_t n = fa.theta.size();
  // Align the two unwrappings at vertex 0, then demand continuity per vertex.
  const double shift = kTwoPi * std::round((fb.theta[0] - fa.theta[0]) / kTwoPi);
  std::vector<double> lhs(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double d = fb.theta[j] - shift - fa.theta[j];
    if (std::abs(d) > std::numbers::pi) {
      throw Error("theta branch mismatch at vertex " + std::to_string(j) + " (jump " + std::to_string(d) +
                  ")");
    }
    lhs[j] = d / pair.dt;
  }
  const auto ra = theta_rhs(fa, pair.before, space);
  const auto rb = theta_rhs(fb, pair.after, space);
  std::vector<double> r(n);
  for (std::size_t j = 0; j < n; ++j) r[j] = lhs[j] - 0.5 * (ra[j] + rb[j]);
  auto out = summarize(std::move(r), max_abs(ra, rb));
  out.noise = roundoff(std::max(max_abs(fa.theta), max_abs(fb.theta)), pair.dt);
  set_unit(out, fa, 2);
  return out;
}

IdentityResidual a2_residual(const StepPair& pair, const AmbientSpace& space) {
  const auto [fa, fb] = frames_of(pair, space);
  const auto ra = a2_rhs(fa, pair.before, space);
  const auto rb = a2_rhs(fb, pair.after, space);
  const std::size_t n = ra.size();
  std::vector<double> r(n);
  for (std::size_t j = 0; j < n; ++j) {
    r[j] = (fb.a2[j] - fa.a2[j]) / pair.dt - 0.5 * (ra[j] + rb[j]);
  }
  auto out = summarize(std::move(r), max_abs(ra, rb));
  out.noise = roundoff(std::max(max_abs(fa.a2), max_abs(fb.a2)), pair.dt);
  set_unit(out, fa, 4);
  return out;
}

IdentityResidual k_identity_residual(const ImmersedCurve& curve, const AmbientSpace& space) {
  const FrameData f = compute_frame(curve, space);
  const auto kg = generalized_mean_curvature_geometric(f, curve, space);
  const auto ka = generalized_mean_curvature_angle(f);
  std::vector<double> r(kg.size());
  double scale = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) {
    r[j] = std::abs(kg[j] - ka[j]);
    scale = std::max(scale, std::abs(kg[j]));
  }
  auto out = summarize(std::move(r), scale);
  const double h = *std::min_element(f.edge_length.begin(), f.edge_length.end());
  out.noise = roundoff(max_abs(f.theta), h);
  set_unit(out, f, 1);
  return out;
}

void assess(ResidualReport& report) {
  const auto& lv = report.levels;
  if (lv.empty()) {
    report.passed = false;
    report.reason = "no refinement levels";
    return;
  }
  report.exact = std::all_of(lv.begin(), lv.end(),
                             [](const ResidualLevel& l) { return l.linf <= kExactResidual + l.noise; });
  if (lv.size() >= 2 && !report.exact) {
    // Least-squares slope of log linf against log N.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double m = static_cast<double>(lv.size());
    for (const auto& l : lv) {
      const double x = std::log(static_cast<double>(l.vertices));
      const double y = std::log(std::max(l.linf, std::numeric_limits<double>::min()));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    report.order = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
  } else {
    report.order = 0.0;
  }
  const bool small = lv.back().unit_linf <= report.tolerance;
  const bool order_ok = lv.size() >= 2 && report.order >= report.order_min &&
                        (report.order_max <= 0.0 || report.order <= report.order_max);
  report.passed = report.exact || (small && order_ok);
  if (report.passed) {
    report.reason = report.exact ? "identity exact: residual within the round-off floor on every level" : "";
  } else if (lv.size() < 2) {
    report.reason = "order needs at least two refinement levels";
  } else if (!small) {
    report.reason = "finest unit-scale residual " + std::to_string(lv.back().unit_linf) +
                    " above tolerance at sample " +
                    std::to_string(lv.back().worst);
  } else {
    report.reason = "convergence order " + std::to_string(report.order) + " outside the accepted range";
  }
}

ResidualReport skipped_report(const std::string& identity, const std::string& reason) {
  ResidualReport r;
  r.identity = identity;
  r.skipped = true;
  r.reason = reason;
  return r;
}

std::vector<LevelState> advance_levels(const RefinementCase& c, std::vector<int>* maslov_seen) {
  std::vector<LevelState> out;
  for (int n : c.levels) {
    CurveSpec spec = c.curve;
    spec.vertices = n;
    ImmersedCurve curve = make_curve(spec);
    FlowConfig cfg;
    cfg.t_end = c.t_check;
    cfg.cfl = c.cfl;
    cfg.a2_ceiling = std::numeric_limits<double>::max();
    cfg.remesh = false;
    cfg.snapshot_stride = std::numeric_limits<int>::max();
    cfg.snapshots_per_decade = 0;
    FlowResult r = run(curve, c.space, cfg);
    if (r.event.kind != Termination::kReachedEnd) {
      throw Error("refinement level N=" + std::to_string(n) + " stopped early: " + r.event.detail);
    }
    if (maslov_seen) {
      for (const auto& row : r.trace.rows) maslov_seen->push_back(row.maslov);
    }
    const ImmersedCurve& last = r.trace.snapshots.back().curve;
    const auto len = last.edge_lengths();
    const double h = *std::min_element(len.begin(), len.end());
    out.push_back({n, make_step_pair(last, c.space, c.cfl * h * h)});
  }
  return out;
}

ResidualReport check_metric_evolution(const std::vector<LevelState>& levels, const AmbientSpace& space,
                                      double tolerance) {
  return check_with("metric_evolution", levels, tolerance,
                    [&](const LevelState& s) { return metric_residual(s.pair, space); });
}

ResidualReport check_area_element(const std::vector<LevelState>& levels, const AmbientSpace& space,
                                  double tolerance) {
  return check_with("area_element", levels, tolerance,
                    [&](const LevelState& s) { return area_element_residual(s.pair, space); });
}

ResidualReport check_theta_evolution(const std::vector<LevelState>& levels, const AmbientSpace& space,
                                     double tolerance) {
  return check_with("theta_evolution", levels, tolerance,
                    [&](const LevelState& s) { return theta_residual(s.pair, space); });
}

ResidualReport check_A2_evolution(const std::vector<LevelState>& levels, const AmbientSpace& space,
                                  double tolerance) {
  return check_with("A2_evolution", levels, tolerance,
                    [&](const LevelState& s) { return a2_residual(s.pair, space); });
}

ResidualReport check_k_identity(const std::vector<LevelState>& levels, const AmbientSpace& space) {
  ResidualReport report;
  report.identity = "K_identity";
  report.tolerance = std::numeric_limits<double>::infinity();
  report.order_min = 1.5;
  report.order_max = 2.5;
  for (const LevelState& s : levels) {
    report.levels.push_back(level_of(s, k_identity_residual(s.pair.before, space)));
  }
  assess(report);
  return report;
}

std::vector<ResidualReport> check_identities(const RefinementCase& c, double tolerance) {
  const auto levels = advance_levels(c);
  return {check_metric_evolution(levels, c.space, tolerance), check_area_element(levels, c.space, tolerance),
          check_theta_evolution(levels, c.space, tolerance), check_A2_evolution(levels, c.space, tolerance),
          check_k_identity(levels, c.space)};
}

BlowupBound check_blowup_bound(const FlowTrace& trace, const TerminationEvent& event, double t_est,
                               double uncertainty, double resolution) {
  BlowupBound out;
  if (!event.blow_up()) {
    out.reason = "not applicable: run ended without blow-up";
    return out;
  }
  out.applicable = true;
  const double t_low = t_est - uncertainty;
  out.margin = std::numeric_limits<double>::infinity();
  for (const TraceRow& row : trace.rows) {
    const double gap = t_est - row.t;
    if (!(gap < 0.1) || gap < resolution) continue;
    const double m = row.u * (t_low - row.t) * 8.0 * std::numbers::sqrt2;
    out.margin = std::min(out.margin, m);
    ++out.rows_checked;
  }
  if (out.rows_checked == 0) {
    out.applicable = false;
    out.margin = 0.0;
    out.reason = "not applicable: no resolved rows within 0.1 of T_est";
    return out;
  }
  out.passed = out.margin >= 1.0;
  return out;
}

}  // namespace lmcf
