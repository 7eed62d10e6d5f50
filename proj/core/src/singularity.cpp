#include "lmcf/singularity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "lmcf/errors.hpp"

namespace lmcf {

namespace {

// Smallest growth of Q per e-fold of T - t, relative to mean Q, that counts as
// growing rather than flat.
constexpr double kMinGrowth = 0.01;

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kResolvedSigmas = 20.0;

struct LineFit {
  double intercept_t = 0.0;  // t where the line crosses zero
  double sigma = 0.0;        // standard error of intercept_t
  double r2 = 0.0;
  double slope = 0.0;
  int n = 0;
};

// Least squares y = a + b (x - mean x).
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit out;
  const std::size_t n = x.size();
  out.n = static_cast<int>(n);
  if (n < 3) return out;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) return out;
  const double b = sxy / sxx;
  const double a = my;
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (a + b * (x[i] - mx));
    sse += r * r;
  }
  const double s2 = sse / static_cast<double>(n - 2);
  out.slope = b;
  out.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  out.intercept_t = mx - a / b;
  const double var = s2 / (static_cast<double>(n) * b * b) + a * a * s2 / (b * b * b * b * sxx);
  out.sigma = std::sqrt(std::max(var, 0.0));
  return out;
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r -= kTwoPi;
  return r;
}

// Signed difference a - b folded into (-pi, pi].
double angle_gap(double a, double b) { return std::remainder(a - b, kTwoPi); }

double rescaled_h_max(const RescaledSnapshot& snap, double tau) {
  const auto& p = snap.points;
  const double reach2 = 64.0 * tau;
  double inside = 0.0;
  double global = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const Complex q = j + 1 < p.size() ? p[j + 1] : p[0] + snap.period;
    const double h = std::abs(q - p[j]);
    global = std::max(global, h);
    if (std::norm(0.5 * (p[j] + q)) <= reach2) inside = std::max(inside, h);
  }
  return inside > 0.0 ? inside : global;
}

}  // namespace

SingularTimeEstimate estimate_T(const FlowTrace& trace, const TerminationEvent& event, double dt_floor) {
  SingularTimeEstimate out;
  if (!event.blow_up() || trace.rows.size() < 4) return out;
  out.blow_up = true;

  std::vector<double> us;
  us.reserve(trace.rows.size());
  for (const TraceRow& r : trace.rows) us.push_back(r.u);
  std::vector<double> sorted = us;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  out.u_threshold = 100.0 * sorted[sorted.size() / 2];
  const double u_max = *std::max_element(us.begin(), us.end());

  std::vector<double> t_tail;
  std::vector<double> y_tail;
  double u_tail_min = std::numeric_limits<double>::infinity();
  for (const TraceRow& r : trace.rows) {
    if (r.u >= out.u_threshold && r.u > 0.0) {
      t_tail.push_back(r.t);
      y_tail.push_back(1.0 / r.u);
      u_tail_min = std::min(u_tail_min, r.u);
    }
  }
  out.tail_rows = static_cast<int>(t_tail.size());
  const double t_last = trace.rows.back().t;
  const double dt_last = trace.rows.back().dt;

  const LineFit tail = fit_line(t_tail, y_tail);
  out.fit_quality = tail.r2;
  if (tail.n < 3 || !(tail.r2 >= 0.9) || !(tail.slope < 0.0)) {
    out.fallback = true;
    out.T_est = t_last + dt_floor;
    out.T_tail = out.T_upper = out.T_est;
    out.uncertainty = std::max(dt_last, dt_floor);
    out.resolution = kResolvedSigmas * out.uncertainty;
    return out;
  }
  out.T_tail = tail.intercept_t;

  const double u_split = std::sqrt(u_tail_min * u_max);
  std::vector<double> t_up;
  std::vector<double> y_up;
  for (std::size_t i = 0; i < t_tail.size(); ++i) {
    if (1.0 / y_tail[i] >= u_split) {
      t_up.push_back(t_tail[i]);
      y_up.push_back(y_tail[i]);
    }
  }
  const LineFit upper = fit_line(t_up, y_up);
  const bool upper_ok = upper.n >= 3 && upper.slope < 0.0 && std::isfinite(upper.intercept_t);
  out.T_upper = upper_ok ? upper.intercept_t : tail.intercept_t;
  out.T_est = out.T_upper;
  // The singular time cannot precede the last state that was reached.
  if (out.T_est <= t_last) out.T_est = t_last + std::max(dt_last, dt_floor);
  out.uncertainty = std::max({upper_ok ? upper.sigma : tail.sigma, std::abs(out.T_tail - out.T_upper), dt_last});
  out.resolution = kResolvedSigmas * out.uncertainty;
  return out;
}

std::string type_name(SingularityType type) {
  switch (type) {
    case SingularityType::kTypeI: return "TypeI";
    case SingularityType::kTypeII: return "not Type-I at resolved scales";
    case SingularityType::kIndeterminate: return "Indeterminate";
    case SingularityType::kNoSingularity: return "NoSingularity";
  }
  return "NoSingularity";
}

Classification classify(const FlowTrace& trace, const SingularTimeEstimate& estimate, double c_max) {
  Classification out;
  out.c_max = c_max;
  if (!estimate.blow_up) {
    out.type = SingularityType::kNoSingularity;
    out.evidence = "run ended without blow-up";
    return out;
  }
  for (const TraceRow& r : trace.rows) {
    const double tau = estimate.T_est - r.t;
    if (r.u < estimate.u_threshold || tau < estimate.resolution || !(tau > 0.0)) continue;
    out.q.push_back({r.t, tau, tau * r.u});
  }
  if (out.q.size() < 3) {
    out.type = SingularityType::kIndeterminate;
    out.evidence = "fewer than three resolved tail rows";
    return out;
  }
  std::vector<double> lx;
  std::vector<double> qs;
  double sum = 0.0;
  for (const QSample& s : out.q) {
    lx.push_back(std::log(s.tau));
    qs.push_back(s.q);
    sum += s.q;
    out.q_max = std::max(out.q_max, s.q);
  }
  out.q_mean = sum / static_cast<double>(qs.size());
  std::vector<double> sorted = qs;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  out.c_est = sorted[sorted.size() / 2];
  out.slope = ols_slope(lx, qs);

  // Finest decade: tau within a factor 10 of the smallest resolved tau.
  const double tau_min = out.q.back().tau;
  std::vector<double> fx;
  std::vector<double> fq;
  for (const QSample& s : out.q) {
    if (s.tau <= 10.0 * tau_min) {
      fx.push_back(std::log(s.tau));
      fq.push_back(s.q);
    }
  }
  out.fine_slope = ols_slope(fx, fq);

  std::ostringstream ev;
  ev.precision(4);
  ev << "Q in [" << *std::min_element(qs.begin(), qs.end()) << ", " << out.q_max << "] over " << qs.size()
     << " resolved tail rows; dQ/dln(T-t) = " << out.slope << " overall, " << out.fine_slope
     << " over the finest decade";
  if (out.q_max <= c_max && std::abs(out.slope) <= 0.05 * out.q_mean) {
    out.type = SingularityType::kTypeI;
    ev << "; bounded by C_max = " << c_max << " and flat";
  } else if (out.q_max > c_max && out.fine_slope < -kMinGrowth * out.q_mean) {
    out.type = SingularityType::kTypeII;
    ev << "; exceeds C_max = " << c_max << " and still grows as T - t shrinks";
  } else {
    out.type = SingularityType::kIndeterminate;
    ev << "; neither bounded and flat nor growing past C_max = " << c_max;
  }
  out.evidence = ev.str();
  return out;
}

Spectrum extract_spectrum(std::span<const RescaledSnapshot> components, const SpectrumOptions& options) {
  Spectrum out;
  if (components.empty()) {
    out.rejected = true;
    out.reason = "no components";
    return out;
  }
  if (!(options.delta > 0.0)) throw Error("cluster gap delta must be positive");
  out.s = components.front().s;
  const double tau = -out.s;
  if (!(tau > 0.0)) throw Error("spectrum needs s < 0");
  if (options.require_resolved) {
    for (const RescaledSnapshot& c : components) {
      const double h = rescaled_h_max(c, tau);
      if (std::sqrt(tau) < 3.0 * h) {
        out.rejected = true;
        std::ostringstream msg;
        msg << "snapshot at s = " << out.s << " is not kernel resolved (h_max = " << h << ")";
        out.reason = msg.str();
        return out;
      }
    }
  }

  DensityProbe probe;
  probe.r = options.r;
  struct Sample {
    double angle;  // mod 2 pi
    double raw;
    double mass;
  };
  std::vector<Sample> samples;
  for (const RescaledSnapshot& c : components) {
    for (std::size_t j = 0; j < c.points.size(); ++j) {
      const Complex x = c.points[j];
      const double m = cutoff_phi(x, probe) * heat_kernel(std::norm(x), tau) * c.weights[j];
      samples.push_back({wrap_angle(c.theta[j]), c.theta[j], m});
      out.total_mass += m;
    }
  }
  const double width = options.delta / 4.0;
  const int bins = static_cast<int>(std::ceil(kTwoPi / width));
  std::vector<double> mass(bins, 0.0);
  auto bin_of = [&](double a) { return std::min(bins - 1, static_cast<int>(a / width)); };
  for (const Sample& s : samples) mass[bin_of(s.angle)] += s.mass;
  std::vector<bool> occupied(bins);
  bool any = false;
  for (int b = 0; b < bins; ++b) {
    occupied[b] = mass[b] > options.mass_threshold * out.total_mass;
    any = any || occupied[b];
  }
  if (!any) {
    out.rejected = true;
    out.reason = "no histogram bin carries mass";
    return out;
  }

  // An empty arc joins two clusters unless it is longer than delta.
  const int max_gap_bins = static_cast<int>(std::floor(options.delta / width + 1e-9));
  std::vector<int> label(bins, -1);
  int start = 0;
  while (!occupied[start]) ++start;
  // Walk once around the circle from an occupied bin.
  int clusters = 0;
  int gap = 0;
  label[start] = clusters;
  std::vector<int> pending;
  for (int step = 1; step < bins; ++step) {
    const int b = (start + step) % bins;
    if (occupied[b]) {
      if (gap > max_gap_bins) ++clusters;
      for (int p : pending) label[p] = gap > max_gap_bins ? -1 : clusters;
      pending.clear();
      label[b] = clusters;
      gap = 0;
    } else {
      pending.push_back(b);
      ++gap;
    }
  }
  // The arc that closes the loop back to `start`.
  const bool closes = gap <= max_gap_bins;
  for (int p : pending) label[p] = closes ? clusters : -1;
  int count = clusters + 1;
  if (closes && count > 1) {
    for (int& l : label) {
      if (l == clusters) l = 0;
    }
    --count;
  }

  std::vector<double> sx(count, 0.0), sy(count, 0.0), sm(count, 0.0), sr(count, 0.0);
  for (const Sample& s : samples) {
    const int l = label[bin_of(s.angle)];
    if (l < 0) {
      out.unassigned_mass += s.mass;
      continue;
    }
    sx[l] += s.mass * std::cos(s.angle);
    sy[l] += s.mass * std::sin(s.angle);
    sm[l] += s.mass;
    sr[l] += s.mass * s.raw;
  }
  std::vector<double> centers(count, 0.0), spread(count, 0.0);
  for (int l = 0; l < count; ++l) centers[l] = wrap_angle(std::atan2(sy[l], sx[l]));
  for (const Sample& s : samples) {
    const int l = label[bin_of(s.angle)];
    if (l < 0) continue;
    const double d = angle_gap(s.angle, centers[l]);
    spread[l] += s.mass * d * d;
  }
  for (int l = 0; l < count; ++l) {
    if (!(sm[l] > 0.0)) continue;
    SpectrumCluster c;
    c.center = centers[l];
    c.unwrapped_center = sr[l] / sm[l];
    c.mass = sm[l];
    c.spread = std::sqrt(spread[l] / sm[l]);
    out.clusters.push_back(c);
  }
  std::sort(out.clusters.begin(), out.clusters.end(),
            [](const SpectrumCluster& a, const SpectrumCluster& b) { return a.center < b.center; });
  return out;
}

Spectrum extract_spectrum(const RescaledSnapshot& snap, const SpectrumOptions& options) {
  return extract_spectrum(std::span<const RescaledSnapshot>(&snap, 1), options);
}

double cone_alignment(const RescaledSnapshot& snap, double r) {
  const double tau = -snap.s;
  if (!(tau > 0.0)) throw Error("cone alignment needs s < 0");
  DensityProbe probe;
  probe.r = r;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < snap.points.size(); ++j) {
    const Complex x = snap.points[j];
    const double w = cutoff_phi(x, probe) * heat_kernel(std::norm(x), tau) * snap.weights[j];
    const double perp = x.real() * snap.normal[j].real() + x.imag() * snap.normal[j].imag();
    num += perp * perp * w;
    den += w;
  }
  return den > 0.0 ? num / den : 0.0;
}

double spectrum_distance(const Spectrum& a, const Spectrum& b) {
  if (a.clusters.size() != b.clusters.size() || a.clusters.empty()) return std::numeric_limits<double>::infinity();
  // Match each cluster of a to the nearest cluster of b.
  double worst = 0.0;
  for (const SpectrumCluster& ca : a.clusters) {
    double best = std::numeric_limits<double>::infinity();
    for (const SpectrumCluster& cb : b.clusters) best = std::min(best, std::abs(angle_gap(ca.center, cb.center)));
    worst = std::max(worst, best);
  }
  return worst;
}

Complex curvature_centroid(const ImmersedCurve& curve, const AmbientSpace& space) {
  const FrameData f = compute_frame(curve, space);
  const double top = *std::max_element(f.a2.begin(), f.a2.end());
  Complex sum{0.0, 0.0};
  double weight = 0.0;
  for (int j = 0; j < curve.size(); ++j) {
    if (f.a2[j] < 0.5 * top) continue;
    const double w = f.a2[j] * f.dual_length[j];
    sum += w * curve.points[j];
    weight += w;
  }
  return weight > 0.0 ? sum / weight : curve.points.front();
}

int nearest_snapshot(const std::vector<Snapshot>& snapshots, double t) {
  int best = -1;
  double gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(snapshots.size()); ++i) {
    const double g = std::abs(snapshots[i].t - t);
    if (g < gap) {
      gap = g;
      best = i;
    }
  }
  return best;
}

namespace {

SpectrumLevel spectrum_level(const std::vector<Snapshot>& snapshots, const AmbientSpace& space, double lambda,
                             Complex x0, double T, const ReportOptions& options) {
  SpectrumLevel level;
  level.lambda = lambda;
  const double target = T + options.s / (lambda * lambda);
  int idx = -1;
  double gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(snapshots.size()); ++i) {
    const double t = snapshots[i].curve.t;
    if (!(t < T)) continue;
    if (std::abs(t - target) < gap) {
      gap = std::abs(t - target);
      idx = i;
    }
  }
  level.snapshot = idx;
  if (idx < 0) {
    level.spectrum.rejected = true;
    level.spectrum.reason = "no snapshot before T_est";
    return level;
  }
  const RescaledSnapshot snap = rescale(snapshots[idx], space, lambda, x0, T);
  level.s = snap.s;
  level.t = snap.t;
  level.drift_magnitude = snap.drift_magnitude;
  level.spectrum = extract_spectrum(snap, options.spectrum);
  level.cone_alignment = cone_alignment(snap, options.spectrum.r);
  return level;
}

}  // namespace

SingularityReport report(const FlowResult& result, const AmbientSpace& space, const ReportOptions& options) {
  SingularityReport out;
  const FlowTrace& trace = result.trace;
  out.time = estimate_T(trace, result.event, options.dt_floor);
  out.classification = classify(trace, out.time, options.c_max);
  for (const TraceRow& r : trace.rows) {
    if (r.maslov != 0) {
      out.maslov = r.maslov;
      break;
    }
  }
  if (!out.time.blow_up) {
    out.rate_bound = check_blowup_bound(trace, result.event, 0.0, 0.0, 0.0);
    out.spectrum_rejected = true;
    out.spectrum_reason = "no singularity";
    return out;
  }
  out.rate_bound = check_blowup_bound(trace, result.event, out.time.T_est, out.time.uncertainty, out.time.resolution);

  // Last snapshot that is still resolved in time.
  int last = -1;
  for (int i = 0; i < static_cast<int>(trace.snapshots.size()); ++i) {
    const double tau = out.time.T_est - trace.snapshots[i].curve.t;
    if (tau >= out.time.resolution && tau > 0.0) {
      if (last < 0 || trace.snapshots[i].curve.t > trace.snapshots[last].curve.t) last = i;
    }
  }
  if (last < 0) {
    out.spectrum_rejected = true;
    out.spectrum_reason = "no resolved snapshot";
    return out;
  }
  out.t_last_resolved = trace.snapshots[last].curve.t;
  out.x0 = options.x0 ? *options.x0 : curvature_centroid(trace.snapshots[last].curve, space);
  out.lambda0 = 1.0 / std::sqrt(2.0 * (out.time.T_est - out.t_last_resolved));

  for (int i = 1; i <= options.levels; ++i) {
    const double lambda = out.lambda0 * std::pow(2.0, -i);
    out.rescales_used.push_back(lambda);
    out.levels.push_back(spectrum_level(trace.snapshots, space, lambda, out.x0, out.time.T_est, options));
    out.alt_levels.push_back(
        spectrum_level(trace.snapshots, space, options.alt_factor * lambda, out.x0, out.time.T_est, options));
  }

  if (out.maslov != 0) {
    out.spectrum_rejected = true;
    out.spectrum_reason = "non-zero Maslov index " + std::to_string(out.maslov) +
                          ": the angle spectrum is only defined for zero-Maslov flows";
  }
  const SpectrumLevel* finest = nullptr;
  for (const SpectrumLevel& l : out.levels) {
    if (!l.spectrum.rejected) {
      finest = &l;
      break;
    }
  }
  if (finest == nullptr) {
    if (!out.spectrum_rejected) {
      out.spectrum_rejected = true;
      out.spectrum_reason = "every rescaled level was rejected";
    }
    return out;
  }
  out.cone_alignment = finest->cone_alignment;
  if (!out.spectrum_rejected) out.spectrum = finest->spectrum;
  double stability = 0.0;
  for (const auto* seq : {&out.levels, &out.alt_levels}) {
    for (const SpectrumLevel& l : *seq) {
      if (l.spectrum.rejected) continue;
      stability = std::max(stability, spectrum_distance(finest->spectrum, l.spectrum));
    }
  }
  out.spectrum_stability = stability;
  return out;
}

}  // namespace lmcf
