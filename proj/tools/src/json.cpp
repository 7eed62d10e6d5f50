#include <json.hpp>

#include "lmcf/cli.hpp"

namespace lmcf::cli {

using nlohmann::json;

namespace {

json point(Complex z) { return json::array({z.real(), z.imag()}); }

json spectrum_json(const Spectrum& s) {
  json clusters = json::array();
  for (const SpectrumCluster& c : s.clusters) {
    clusters.push_back(
        {{"center", c.center}, {"unwrapped_center", c.unwrapped_center}, {"mass", c.mass}, {"spread", c.spread}});
  }
  return {{"s", s.s},
          {"total_mass", s.total_mass},
          {"unassigned_mass", s.unassigned_mass},
          {"rejected", s.rejected},
          {"reason", s.reason},
          {"clusters", std::move(clusters)}};
}

json levels_json(const std::vector<SpectrumLevel>& levels) {
  json out = json::array();
  for (const SpectrumLevel& l : levels) {
    out.push_back({{"lambda", l.lambda},
                   {"s", l.s},
                   {"t", l.t},
                   {"snapshot", l.snapshot},
                   {"cone_alignment", l.cone_alignment},
                   {"drift_magnitude", l.drift_magnitude},
                   {"spectrum", spectrum_json(l.spectrum)}});
  }
  return out;
}

}  // namespace

std::string report_json(const SingularityReport& r, int indent) {
  const SingularTimeEstimate& e = r.time;
  const Classification& c = r.classification;
  json q = json::array();
  for (const QSample& s : c.q) q.push_back({s.t, s.tau, s.q});
  json doc = {
      {"singular_time",
       {{"blow_up", e.blow_up},
        {"T_est", e.T_est},
        {"uncertainty", e.uncertainty},
        {"fit_quality", e.fit_quality},
        {"fallback", e.fallback},
        {"T_tail", e.T_tail},
        {"T_upper", e.T_upper},
        {"u_threshold", e.u_threshold},
        {"tail_rows", e.tail_rows},
        {"resolution", e.resolution}}},
      {"classification",
       {{"verdict", type_name(c.type)},
        {"C_est", c.c_est},
        {"Q_max", c.q_max},
        {"Q_mean", c.q_mean},
        {"slope", c.slope},
        {"fine_slope", c.fine_slope},
        {"C_max", c.c_max},
        {"evidence", c.evidence},
        {"q_columns", json::array({"t", "tau", "Q"})},
        {"q", std::move(q)}}},
      {"blowup_bound",
       {{"applicable", r.rate_bound.applicable},
        {"reason", r.rate_bound.reason},
        {"margin", r.rate_bound.margin},
        {"rows_checked", r.rate_bound.rows_checked},
        {"passed", r.rate_bound.passed}}},
      {"x0", point(r.x0)},
      {"t_last_resolved", r.t_last_resolved},
      {"lambda0", r.lambda0},
      {"rescales_used", r.rescales_used},
      {"levels", levels_json(r.levels)},
      {"alt_levels", levels_json(r.alt_levels)},
      {"spectrum", spectrum_json(r.spectrum)},
      {"cone_alignment", r.cone_alignment},
      {"spectrum_stability", r.spectrum_stability},
      {"maslov", r.maslov},
      {"spectrum_rejected", r.spectrum_rejected},
      {"spectrum_reason", r.spectrum_reason},
  };
  return doc.dump(indent);
}

std::string verify_json(const std::vector<ResidualReport>& reports, int indent) {
  json doc = json::array();
  for (const ResidualReport& r : reports) {
    json levels = json::array();
    for (const ResidualLevel& l : r.levels) {
      levels.push_back({{"vertices", l.vertices},
                        {"t", l.t},
                        {"dt", l.dt},
                        {"linf", l.linf},
                        {"l2", l.l2},
                        {"scale", l.scale},
                        {"noise", l.noise},
                        {"worst", l.worst},
                        {"unit_linf", l.unit_linf}});
    }
    doc.push_back({{"identity", r.identity},
                   {"levels", std::move(levels)},
                   {"order", r.order},
                   {"tolerance", r.tolerance},
                   {"order_min", r.order_min},
                   {"order_max", r.order_max},
                   {"exact", r.exact},
                   {"passed", r.passed},
                   {"skipped", r.skipped},
                   {"reason", r.reason}});
  }
  return doc.dump(indent);
}

}  // namespace lmcf::cli
