#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "lmcf/cli.hpp"

namespace lmcf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw ArchiveError("cannot write " + path.string());
}

int exit_for(const TerminationEvent& event) {
  if (event.kind == Termination::kReachedEnd) return kExitOk;
  if (event.blow_up()) return kExitBlowUp;
  return kExitFailure;
}

// Evenly spaced snapshot frames, always including the first and the last.
void write_frames(const fs::path& dir, const FlowTrace& trace, const AmbientSpace& space, const RunConfig& config) {
  const auto& snaps = trace.snapshots;
  if (snaps.empty() || config.output.frames == 0) return;
  const ImmersedCurve& first = snaps.front().curve;
  SvgOptions options;
  Complex centroid{0.0, 0.0};
  for (Complex z : first.points) centroid += z;
  centroid /= static_cast<double>(first.size());
  options.center = centroid;
  if (config.output.viewport > 0.0) {
    options.viewport = config.output.viewport;
  } else {
    double reach = 0.0;
    for (Complex z : first.points) reach = std::max(reach, std::abs(z - centroid));
    options.viewport = 1.1 * std::max(reach, 1e-12);
  }
  const int count = std::min<int>(config.output.frames, static_cast<int>(snaps.size()));
  std::vector<int> picks;
  for (int i = 0; i < count; ++i) {
    const int k = count == 1 ? static_cast<int>(snaps.size()) - 1
                             : static_cast<int>(std::lround(static_cast<double>(i) * (snaps.size() - 1) / (count - 1)));
    if (picks.empty() || picks.back() != k) picks.push_back(k);
  }
  for (int k : picks) {
    const Snapshot& s = snaps[k];
    FrameData frame;
    try {
      frame = compute_frame(s.curve, space);
    } catch (const GeometryError&) {
      continue;
    }
    options.t = s.t;
    options.u = frame.a2.empty() ? 0.0 : *std::max_element(frame.a2.begin(), frame.a2.end());
    options.maslov = frame.maslov;
    write_text(dir / ("frame_" + std::to_string(s.index) + ".svg"), svg_frame(s.curve, frame, options));
  }
}

ResidualReport maslov_record(const FlowTrace& trace) {
  ResidualReport r;
  r.identity = "maslov_constant";
  r.order_min = 0.0;
  if (trace.rows.empty()) {
    r.skipped = true;
    r.reason = "empty trace";
    return r;
  }
  const int first = trace.rows.front().maslov;
  int changes = 0;
  for (const TraceRow& row : trace.rows) changes += row.maslov != first;
  r.passed = changes == 0;
  r.exact = true;
  r.reason = "maslov " + std::to_string(first) + " on the first row; " + std::to_string(changes) + " of " +
             std::to_string(trace.rows.size()) + " rows differ";
  return r;
}

ResidualReport blowup_record(const FlowResult& result) {
  ResidualReport r;
  r.identity = "blowup_lower_bound";
  r.order_min = 0.0;
  if (!result.event.blow_up()) {
    r.skipped = true;
    r.reason = "run did not blow up";
    return r;
  }
  const SingularTimeEstimate est = estimate_T(result.trace, result.event);
  const BlowupBound b = check_blowup_bound(result.trace, result.event, est.T_est, est.uncertainty, est.resolution);
  if (!b.applicable) {
    r.skipped = true;
    r.reason = b.reason;
    return r;
  }
  r.passed = b.passed;
  r.reason = "min U (T - t) 8 sqrt2 = " + format_double(b.margin) + " over " + std::to_string(b.rows_checked) +
             " rows, T_est = " + format_double(est.T_est);
  return r;
}

struct Analysis {
  SingularityReport report;
};

double nearest_time_tau_floor(const FlowTrace& trace, double t0) {
  double latest = -std::numeric_limits<double>::infinity();
  for (const Snapshot& s : trace.snapshots) {
    if (s.t < t0) latest = std::max(latest, s.t);
  }
  return t0 - latest;
}

// Budget samples at tau geometric between t0 - t_first and the finest
// resolved scale.
std::vector<double> budget_times(const FlowResult& result, double t0, double tau_floor, int per_decade) {
  std::vector<double> times;
  if (result.trace.snapshots.empty()) return times;
  const double tau_max = t0 - result.trace.snapshots.front().t;
  const double tau_min = std::max(tau_floor, nearest_time_tau_floor(result.trace, t0));
  if (!(tau_max > 0.0) || !(tau_min > 0.0) || tau_min > tau_max) return times;
  const int count = std::max(1, static_cast<int>(std::ceil(std::log10(tau_max / tau_min) * per_decade)));
  for (int i = 0; i <= count; ++i) {
    const double tau = tau_max * std::pow(tau_min / tau_max, static_cast<double>(i) / count);
    times.push_back(t0 - tau);
  }
  return times;
}

Analysis analyze(const fs::path& dir, const LoadedRun& run, std::ostream& log) {
  const RunConfig& config = run.config;
  const ProbeSection& p = config.probe;
  const AmbientSpace space = make_space(config);
  const FlowResult& result = run.result;

  ReportOptions options;
  options.c_max = p.c_max;
  options.s = p.s;
  options.levels = p.levels;
  options.alt_factor = p.alt_factor;
  if (!p.x0_auto) options.x0 = p.x0;
  options.dt_floor = config.flow.dt_floor;
  options.spectrum.delta = p.delta;
  options.spectrum.r = p.r;

  Analysis a;
  a.report = report(result, space, options);
  const SingularityReport& rep = a.report;
  json doc = json::parse(report_json(rep));
  log << "verdict: " << type_name(rep.classification.type) << "\n";

  // spectrum.csv
  {
    std::ostringstream o;
    o << "sequence,lambda,s,t,cluster,center,unwrapped_center,mass,spread\n";
    auto emit = [&](const char* name, const std::vector<SpectrumLevel>& levels) {
      for (const SpectrumLevel& l : levels) {
        for (std::size_t k = 0; k < l.spectrum.clusters.size(); ++k) {
          const SpectrumCluster& c = l.spectrum.clusters[k];
          o << name << ',' << format_double(l.lambda) << ',' << format_double(l.s) << ',' << format_double(l.t) << ','
            << k << ',' << format_double(c.center) << ',' << format_double(c.unwrapped_center) << ','
            << format_double(c.mass) << ',' << format_double(c.spread) << "\n";
        }
      }
    };
    emit("primary", rep.levels);
    emit("alternate", rep.alt_levels);
    write_text(dir / "spectrum.csv", o.str());
  }

  const bool have_t = rep.time.blow_up || !p.t0_auto;
  const double T = rep.time.blow_up ? rep.time.T_est : 0.0;

  // density.csv: the monotonicity budget along the archived snapshots.
  {
    std::ostringstream o;
    o << "t,tau,phi,dphi,source,defect,kinetic,slack,excess,b1,b2,h_max,resolved\n";
    json budget = {{"available", false}};
    if (have_t) {
      DensityProbe probe;
      probe.x0 = p.x0_auto ? rep.x0 : p.x0;
      probe.t0 = p.t0_auto ? T : p.t0;
      probe.r = p.r;
      probe.f = p.f;
      probe.y = p.y;
      probe.q = p.q;
      probe.eps = p.eps;
      const double tau_floor = rep.time.blow_up ? std::max(rep.time.resolution, 0.0) : 0.0;
      try {
        const auto times = budget_times(result, probe.t0, tau_floor, p.budget_per_decade);
        const MonotonicityBudget mb = monotonicity_budget(result.trace.snapshots, space, probe, times);
        for (const BudgetSample& s : mb.samples) {
          o << format_double(s.t) << ',' << format_double(s.tau) << ',' << format_double(s.phi) << ','
            << format_double(s.dphi) << ',' << format_double(s.source) << ',' << format_double(s.defect) << ','
            << format_double(s.kinetic) << ',' << format_double(s.slack) << ',' << format_double(s.excess) << ','
            << format_double(s.b1) << ',' << format_double(s.b2) << ',' << format_double(s.h_max) << ','
            << (s.resolved ? 1 : 0) << "\n";
        }
        budget = {{"available", true},
                  {"x0", json::array({probe.x0.real(), probe.x0.imag()})},
                  {"t0", probe.t0},
                  {"weight", weight_name(probe.f)},
                  {"c1", mb.fit.c1},
                  {"c2", mb.fit.c2},
                  {"c3", mb.fit.c3},
                  {"residual_violation", mb.fit.residual_violation},
                  {"samples_used", mb.fit.samples_used},
                  {"feasible", mb.fit.feasible}};
      } catch (const Error& e) {
        budget["reason"] = e.what();
        log << "density budget skipped: " << e.what() << "\n";
      }
    } else {
      budget["reason"] = "no blow-up and t0 = auto";
    }
    doc["density_budget"] = std::move(budget);
    write_text(dir / "density.csv", o.str());
  }

  // spacetime.csv: integrals and volume ratios of the rescalings.
  {
    std::ostringstream o;
    o << "lambda,normal_part,mean_curvature,velocity,volume_ratio_max\n";
    if (rep.time.blow_up) {
      for (double lambda : p.lambdas) {
        const auto seq = rescale(result.trace.snapshots, space, lambda, rep.x0, T);
        try {
          const SpaceTimeIntegrals li = spacetime_integrals(seq, p.s1, p.s2, p.radius);
          double ratio = 0.0;
          for (const RescaledSnapshot& s : seq) {
            if (s.s < p.s1 || s.s > p.s2) continue;
            for (int i = 0; i <= 20; ++i) ratio = std::max(ratio, volume_ratio(s, 0.1 * std::pow(100.0, i / 20.0)));
          }
          o << format_double(lambda) << ',' << format_double(li.normal_part) << ','
            << format_double(li.mean_curvature) << ',' << format_double(li.velocity) << ',' << format_double(ratio)
            << "\n";
        } catch (const Error& e) {
          log << "lambda " << format_double(lambda) << " skipped: " << e.what() << "\n";
        }
      }
    }
    write_text(dir / "spacetime.csv", o.str());
  }

  if (config.output.svg) {
    for (std::size_t i = 0; i < rep.levels.size(); ++i) {
      const SpectrumLevel& l = rep.levels[i];
      if (l.snapshot < 0) continue;
      const RescaledSnapshot snap =
          rescale(result.trace.snapshots[l.snapshot], space, l.lambda, rep.x0, rep.time.T_est);
      write_text(dir / "frames" / ("rescaled_" + std::to_string(i + 1) + ".svg"), svg_rescaled(snap, p.radius));
    }
  }

  write_text(dir / "report.json", doc.dump(2) + "\n");
  return a;
}

// Numbers compare numerically, anything else lexicographically.
bool param_less(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    if (a[i] == b[i]) continue;
    try {
      const double x = parse_double(a[i]);
      const double y = parse_double(b[i]);
      if (x != y) return x < y;
    } catch (const ConfigError&) {
    }
    return a[i] < b[i];
  }
  return a.size() < b.size();
}

std::string spectrum_summary(const Spectrum& s) {
  std::string out;
  for (const SpectrumCluster& c : s.clusters) {
    if (!out.empty()) out += '|';
    out += format_double(c.center) + ":" + format_double(c.mass);
  }
  return out;
}

}  // namespace

int cmd_run(const RunConfig& config, std::ostream& log) {
  try {
    validate_config(config);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  ImmersedCurve initial;
  try {
    initial = make_curve(config.curve);
  } catch (const ConfigError& e) {
    log << "config error: [curve] " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    const fs::path dir = config.output.out_dir;
    fs::create_directories(dir);
    write_text(dir / "config.resolved", render_config(config));
    const AmbientSpace space = make_space(config);
    const FlowResult result = run(initial, space, config.flow);
    write_trace_csv(dir / "trace.csv", result.trace);
    write_snapshots(dir / "snapshots", result.trace, result.event, space);
    if (config.output.svg) write_frames(dir / "frames", result.trace, space, config);
    const TraceRow last = result.trace.rows.empty() ? TraceRow{} : result.trace.rows.back();
    log << termination_name(result.event.kind) << " at t = " << format_double(result.event.t) << ", "
        << result.trace.rows.size() << " rows, " << result.trace.snapshots.size() << " snapshots, final U = "
        << format_double(last.u) << "\n";
    if (!result.event.detail.empty()) log << result.event.detail << "\n";
    return exit_for(result.event);
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const fs::filesystem_error& e) {
    log << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

int cmd_verify(const fs::path& run_dir, std::ostream& log) {
  LoadedRun run;
  try {
    run = load_run(run_dir);
  } catch (const ArchiveError& e) {
    log << "archive error: " << e.what() << "\n";
    return kExitArchive;
  } catch (const ConfigError& e) {
    log << "archive error: config.resolved: " << e.what() << "\n";
    return kExitArchive;
  }
  if (run.result.trace.snapshots.empty()) {
    log << "archive error: no snapshots\n";
    return kExitArchive;
  }

  std::vector<ResidualReport> reports;
  const RunConfig& c = run.config;
  const char* identities[] = {"metric_evolution", "area_element", "theta_evolution", "A2_evolution", "K_identity"};
  if (c.flow.remesh || run.result.trace.redistributed) {
    for (const char* id : identities) {
      reports.push_back(skipped_report(
          id, "redistribution enabled: vertex labels are not material points, so pointwise time derivatives of "
              "the archived flow are undefined"));
    }
  } else if (c.curve.preset == CurvePreset::kCustom || c.curve.vertices / 4 < ImmersedCurve::kMinVertices) {
    for (const char* id : identities) {
      reports.push_back(skipped_report(id, "refinement needs a preset curve with N/4 >= " +
                                               std::to_string(ImmersedCurve::kMinVertices)));
    }
  } else {
    RefinementCase rc;
    rc.name = preset_name(c.curve.preset);
    rc.curve = c.curve;
    rc.space = make_space(c);
    const int n = c.curve.vertices;
    rc.levels = {n / 4, n / 2, n};
    const double t_last = run.result.trace.rows.empty() ? 0.0 : run.result.trace.rows.back().t;
    rc.t_check = std::min(0.05, 0.25 * t_last);
    try {
      reports = check_identities(rc);
    } catch (const Error& e) {
      for (const char* id : identities) reports.push_back(skipped_report(id, std::string("failed: ") + e.what()));
      for (auto& r : reports) r.skipped = false;
    }
  }
  reports.push_back(maslov_record(run.result.trace));
  reports.push_back(blowup_record(run.result));

  bool ok = true;
  for (const ResidualReport& r : reports) {
    log << r.identity << ": " << (r.skipped ? "skipped" : r.passed ? "pass" : "FAIL");
    if (!r.skipped && !r.levels.empty()) log << " (order " << format_double(r.order) << ")";
    if (!r.reason.empty()) log << " - " << r.reason;
    log << "\n";
    ok = ok && (r.skipped || r.passed);
  }
  try {
    write_text(run_dir / "verify_report.json", verify_json(reports) + "\n");
  } catch (const ArchiveError& e) {
    log << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return ok ? kExitOk : kExitFailure;
}

int cmd_analyze(const fs::path& run_dir, const std::vector<std::string>& probe_overrides, std::ostream& log) {
  LoadedRun run;
  try {
    run = load_run(run_dir);
  } catch (const ArchiveError& e) {
    log << "archive error: " << e.what() << "\n";
    return kExitArchive;
  } catch (const ConfigError& e) {
    log << "archive error: config.resolved: " << e.what() << "\n";
    return kExitArchive;
  }
  try {
    for (const std::string& o : probe_overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw ConfigError(0, "probe override must be key=value, got '" + o + "'");
      set_value(run.config, "probe", o.substr(0, eq), o.substr(eq + 1));
    }
    validate_config(run.config);
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    analyze(run_dir, run, log);
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

GridAxis parse_grid_axis(const std::string& text) {
  const auto eq = text.find('=');
  const auto dot = text.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError(0, "grid axis must be section.key=v1,v2,..., got '" + text + "'");
  }
  GridAxis axis;
  axis.section = text.substr(0, dot);
  axis.key = text.substr(dot + 1, eq - dot - 1);
  std::stringstream ss(text.substr(eq + 1));
  std::string v;
  while (std::getline(ss, v, ',')) {
    if (!v.empty()) axis.values.push_back(v);
  }
  if (axis.values.empty()) throw ConfigError(0, "grid axis '" + axis.section + "." + axis.key + "' has no values");
  return axis;
}

int cmd_sweep(const RunConfig& base, const std::vector<GridAxis>& grid, std::ostream& log, int threads) {
  const fs::path root = base.output.out_dir;
  std::string header;
  for (const GridAxis& a : grid) header += a.section + "." + a.key + ",";
  header += "verdict,T_est,uncertainty,C_est,Q_max,maslov,clusters,spectrum,exit_code\n";

  // Cartesian product; no axes means no points.
  std::vector<std::vector<std::string>> points;
  if (!grid.empty()) {
    points.emplace_back();
    for (const GridAxis& a : grid) {
      std::vector<std::vector<std::string>> next;
      for (const auto& p : points) {
        for (const std::string& v : a.values) {
          next.push_back(p);
          next.back().push_back(v);
        }
      }
      points = std::move(next);
    }
  }

  std::vector<RunConfig> configs;
  try {
    for (std::size_t k = 0; k < points.size(); ++k) {
      RunConfig c = base;
      for (std::size_t i = 0; i < grid.size(); ++i) set_value(c, grid[i].section, grid[i].key, points[k][i]);
      c.output.out_dir = (root / "runs" / ("p" + std::to_string(k))).string();
      validate_config(c);
      configs.push_back(std::move(c));
    }
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::vector<AtlasRow> rows(points.size());
  std::vector<std::string> logs(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < points.size(); k = next++) {
      std::ostringstream plog;
      AtlasRow& row = rows[k];
      row.params = points[k];
      row.exit_code = cmd_run(configs[k], plog);
      if (row.exit_code == kExitOk || row.exit_code == kExitBlowUp) {
        try {
          const fs::path dir = configs[k].output.out_dir;
          const Analysis a = analyze(dir, load_run(dir), plog);
          const SingularityReport& r = a.report;
          row.verdict = type_name(r.classification.type);
          row.t_est = r.time.T_est;
          row.uncertainty = r.time.uncertainty;
          row.c_est = r.classification.c_est;
          row.q_max = r.classification.q_max;
          row.maslov = r.maslov;
          row.clusters = r.spectrum_rejected ? 0 : static_cast<int>(r.spectrum.clusters.size());
          row.spectrum = r.spectrum_rejected ? "rejected" : spectrum_summary(r.spectrum);
        } catch (const Error& e) {
          plog << "analysis failed: " << e.what() << "\n";
          row.verdict = "analysis_failed";
          row.exit_code = kExitFailure;
        }
      } else {
        row.verdict = "run_failed";
      }
      logs[k] = plog.str();
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t n_threads =
      std::min<std::size_t>(points.size(), threads > 0 ? static_cast<std::size_t>(threads) : hw);
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  if (!points.empty()) worker();
  for (auto& t : pool) t.join();

  bool ok = true;
  for (std::size_t k = 0; k < points.size(); ++k) {
    log << "p" << k << ":";
    for (std::size_t i = 0; i < grid.size(); ++i) log << ' ' << grid[i].section << '.' << grid[i].key << '=' << points[k][i];
    log << " -> " << rows[k].verdict << " (exit " << rows[k].exit_code << ")\n" << logs[k];
    ok = ok && (rows[k].exit_code == kExitOk || rows[k].exit_code == kExitBlowUp);
  }

  std::sort(rows.begin(), rows.end(), [](const AtlasRow& a, const AtlasRow& b) { return param_less(a.params, b.params); });
  std::ostringstream o;
  o << header;
  for (const AtlasRow& r : rows) {
    for (const std::string& p : r.params) o << p << ',';
    o << r.verdict << ',' << format_double(r.t_est) << ',' << format_double(r.uncertainty) << ','
      << format_double(r.c_est) << ',' << format_double(r.q_max) << ',' << r.maslov << ',' << r.clusters << ','
      << r.spectrum << ',' << r.exit_code << "\n";
  }
  try {
    write_text(root / "atlas.csv", o.str());
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return ok ? kExitOk : kExitFailure;
}

}  // namespace lmcf::cli
