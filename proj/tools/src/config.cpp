#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "lmcf/cli.hpp"

namespace lmcf::cli {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

int parse_int(const std::string& s) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError(0, "expected an integer, got '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError(0, "expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(0, "expected true or false, got '" + s + "'");
}

Complex parse_point(const std::string& s) {
  const auto parts = split(s, ',');
  if (parts.size() != 2) throw ConfigError(0, "expected a point 'x,y', got '" + s + "'");
  return {parse_double(parts[0]), parse_double(parts[1])};
}

std::vector<Complex> parse_points(const std::string& s) {
  std::vector<Complex> out;
  if (trim(s).empty()) return out;
  for (const std::string& p : split(s, ';')) out.push_back(parse_point(p));
  return out;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  if (trim(s).empty()) return out;
  for (const std::string& p : split(s, ',')) out.push_back(parse_double(p));
  return out;
}

std::string format_point(Complex z) { return format_double(z.real()) + "," + format_double(z.imag()); }

std::string format_bool(bool b) { return b ? "true" : "false"; }

const std::set<std::string>& section_names() {
  static const std::set<std::string> names{"ambient", "curve", "flow", "probe", "output"};
  return names;
}

}  // namespace

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

double parse_double(std::string_view text) {
  const std::string s = trim(text);
  if (s == "inf" || s == "+inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  if (s == "-inf" || s == "-infinity") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* begin = s.data();
  if (!s.empty() && s.front() == '+') ++begin;
  const auto [p, ec] = std::from_chars(begin, s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError(0, "expected a number, got '" + s + "'");
  }
  return v;
}

void set_value(RunConfig& c, const std::string& section, const std::string& key, const std::string& raw, int line) {
  const std::string v = unquote(trim(raw));
  try {
    if (section == "ambient") {
      if (key == "n") c.ambient.n = parse_int(v);
      else if (key == "W") {
        (void)HolomorphicPolynomial::parse(c.ambient.n, v);
        c.ambient.w = v;
      }
      else if (key == "degree_cap") c.ambient.degree_cap = parse_int(v);
      else throw ConfigError(0, "unknown key '" + key + "' in [ambient]");
    } else if (section == "curve") {
      if (key == "preset") c.curve.preset = parse_preset(v);
      else if (key == "R") c.curve.radius = parse_double(v);
      else if (key == "a") c.curve.aspect = parse_double(v);
      else if (key == "N") c.curve.vertices = parse_int(v);
      else if (key == "perturb_amp") c.curve.perturb_amp = parse_double(v);
      else if (key == "perturb_mode") c.curve.perturb_mode = parse_int(v);
      else if (key == "seed") c.curve.seed = parse_u64(v);
      else if (key == "clockwise") c.curve.clockwise = parse_bool(v);
      else if (key == "center") c.curve.center = parse_point(v);
      else if (key == "points") c.curve.custom_points = parse_points(v);
      else if (key == "period") c.curve.custom_period = parse_point(v);
      else throw ConfigError(0, "unknown key '" + key + "' in [curve]");
    } else if (section == "flow") {
      if (key == "t_end") c.flow.t_end = parse_double(v);
      else if (key == "cfl") c.flow.cfl = parse_double(v);
      else if (key == "dt_floor") c.flow.dt_floor = parse_double(v);
      else if (key == "A2_ceiling") c.flow.a2_ceiling = parse_double(v);
      else if (key == "remesh") c.flow.remesh = parse_bool(v);
      else if (key == "remesh_interval") c.flow.remesh_interval = parse_int(v);
      else if (key == "quality_floor") c.flow.quality_floor = parse_double(v);
      else if (key == "snapshot_stride") c.flow.snapshot_stride = parse_int(v);
      else if (key == "snapshots_per_decade") c.flow.snapshots_per_decade = parse_int(v);
      else throw ConfigError(0, "unknown key '" + key + "' in [flow]");
    } else if (section == "probe") {
      if (key == "x0") {
        c.probe.x0_auto = v == "auto";
        if (!c.probe.x0_auto) c.probe.x0 = parse_point(v);
      } else if (key == "t0") {
        c.probe.t0_auto = v == "auto";
        if (!c.probe.t0_auto) c.probe.t0 = parse_double(v);
      } else if (key == "r") c.probe.r = parse_double(v);
      else if (key == "f") c.probe.f = parse_weight(v);
      else if (key == "y") c.probe.y = parse_double(v);
      else if (key == "q") c.probe.q = parse_int(v);
      else if (key == "eps") c.probe.eps = parse_double(v);
      else if (key == "C_max") c.probe.c_max = parse_double(v);
      else if (key == "delta") c.probe.delta = parse_double(v);
      else if (key == "s") c.probe.s = parse_double(v);
      else if (key == "levels") c.probe.levels = parse_int(v);
      else if (key == "alt_factor") c.probe.alt_factor = parse_double(v);
      else if (key == "lambdas") c.probe.lambdas = parse_list(v);
      else if (key == "s1") c.probe.s1 = parse_double(v);
      else if (key == "s2") c.probe.s2 = parse_double(v);
      else if (key == "R") c.probe.radius = parse_double(v);
      else if (key == "budget_per_decade") c.probe.budget_per_decade = parse_int(v);
      else throw ConfigError(0, "unknown key '" + key + "' in [probe]");
    } else if (section == "output") {
      if (key == "out_dir") c.output.out_dir = v;
      else if (key == "svg") c.output.svg = parse_bool(v);
      else if (key == "frames") c.output.frames = parse_int(v);
      else if (key == "viewport") c.output.viewport = parse_double(v);
      else throw ConfigError(0, "unknown key '" + key + "' in [output]");
    } else {
      throw ConfigError(0, "unknown section [" + section + "]");
    }
  } catch (const ConfigError& e) {
    if (line > 0 && e.line() == 0) throw ConfigError(line, e.what());
    throw;
  } catch (const Error& e) {
    throw ConfigError(line, e.what());
  }
}

RunConfig parse_config(std::string_view text) {
  RunConfig c;
  std::string section;
  std::set<std::string> seen;
  // Line of each key and section header, for semantic errors found later.
  std::map<std::string, int> lines;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#' || line.front() == ';') {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line_no, "malformed section header '" + line + "'");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!section_names().contains(section)) throw ConfigError(line_no, "unknown section [" + section + "]");
      lines.emplace(section, line_no);
    } else {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError(line_no, "expected 'key = value', got '" + line + "'");
      if (section.empty()) throw ConfigError(line_no, "key outside of any section");
      const std::string key = trim(std::string_view(line).substr(0, eq));
      if (key.empty()) throw ConfigError(line_no, "empty key");
      if (!seen.insert(section + "." + key).second) {
        throw ConfigError(line_no, "duplicate key '" + key + "' in [" + section + "]");
      }
      set_value(c, section, key, line.substr(eq + 1), line_no);
      lines[section + "." + key] = line_no;
    }
    if (end == text.size()) break;
  }
  try {
    validate_config(c);
  } catch (const ConfigError& e) {
    // Attribute the error to the key it names, else to its section.
    const std::string msg = e.what();
    int where = 0;
    for (const auto& [name, ln] : lines) {
      const auto dot = name.find('.');
      if (dot == std::string::npos) continue;
      const std::string key = name.substr(dot + 1);
      if (msg.find(key + " ") == 0 || msg.find(" " + key + " ") != std::string::npos ||
          msg.find("'" + key + "'") != std::string::npos || msg.find(" " + key + ":") != std::string::npos || msg.find(key + " must") != std::string::npos) {
        where = ln;
        break;
      }
    }
    if (where == 0) {
      for (const char* s : {"ambient", "curve", "flow", "probe", "output"}) {
        if (msg.find(std::string("[") + s + "]") != std::string::npos && lines.contains(s)) where = lines[s];
      }
    }
    throw ConfigError(where, e.line() > 0 ? msg.substr(msg.find(':') + 2) : msg);
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(0, "cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate_config(const RunConfig& c) {
  if (c.ambient.n != 1) throw ConfigError(0, "[ambient] n must be 1: the flow evolves curves in C");
  if (c.ambient.degree_cap < 1) throw ConfigError(0, "[ambient] degree_cap must be >= 1");
  try {
    (void)make_space(c);
  } catch (const Error& e) {
    throw ConfigError(0, std::string("[ambient] W: ") + e.what());
  }
  const CurveSpec& k = c.curve;
  if (k.preset == CurvePreset::kCustom) {
    if (static_cast<int>(k.custom_points.size()) < ImmersedCurve::kMinVertices) {
      throw ConfigError(0, "[curve] custom points need at least " + std::to_string(ImmersedCurve::kMinVertices) +
                               " vertices");
    }
  } else {
    if (!(k.radius > 0.0)) throw ConfigError(0, "[curve] R must be positive");
    if (!(k.aspect > 0.0)) throw ConfigError(0, "[curve] a must be positive");
    if (k.vertices < ImmersedCurve::kMinVertices) {
      throw ConfigError(0, "[curve] N must be at least " + std::to_string(ImmersedCurve::kMinVertices));
    }
    if (k.perturb_mode < 1) throw ConfigError(0, "[curve] perturb_mode must be >= 1");
  }
  try {
    c.flow.validate();
  } catch (const Error& e) {
    throw ConfigError(0, std::string("[flow] ") + e.what());
  }
  const ProbeSection& p = c.probe;
  if (!(p.r > 0.0)) throw ConfigError(0, "[probe] r must be positive");
  if (p.q < 1) throw ConfigError(0, "[probe] q must be >= 1");
  if (!(p.eps >= 0.0)) throw ConfigError(0, "[probe] eps must be non-negative");
  if (!(p.c_max > 0.0)) throw ConfigError(0, "[probe] C_max must be positive");
  if (!(p.delta > 0.0)) throw ConfigError(0, "[probe] delta must be positive");
  if (!(p.s < 0.0)) throw ConfigError(0, "[probe] s must be negative");
  if (p.levels < 1) throw ConfigError(0, "[probe] levels must be >= 1");
  if (!(p.alt_factor > 0.0)) throw ConfigError(0, "[probe] alt_factor must be positive");
  if (!(p.s1 < p.s2 && p.s2 < 0.0)) throw ConfigError(0, "[probe] s1 < s2 < 0 is required");
  if (!(p.radius > 0.0)) throw ConfigError(0, "[probe] R must be positive");
  for (double l : p.lambdas) {
    if (!(l > 0.0)) throw ConfigError(0, "[probe] lambdas must be positive");
  }
  if (p.budget_per_decade < 1) throw ConfigError(0, "[probe] budget_per_decade must be >= 1");
  if (c.output.frames < 0) throw ConfigError(0, "[output] frames must be >= 0");
  if (!(c.output.viewport >= 0.0)) throw ConfigError(0, "[output] viewport must be >= 0");
  if (c.output.out_dir.empty()) throw ConfigError(0, "[output] out_dir must not be empty");
}

AmbientSpace make_space(const RunConfig& c) {
  return AmbientSpace(c.ambient.n, HolomorphicPolynomial::parse(c.ambient.n, c.ambient.w), c.ambient.degree_cap);
}

std::string render_config(const RunConfig& c) {
  std::ostringstream o;
  auto kv = [&](const char* key, const std::string& value) { o << key << " = " << value << "\n"; };
  o << "[ambient]\n";
  kv("n", std::to_string(c.ambient.n));
  kv("W", "\"" + c.ambient.w + "\"");
  kv("degree_cap", std::to_string(c.ambient.degree_cap));

  o << "\n[curve]\n";
  kv("preset", preset_name(c.curve.preset));
  kv("R", format_double(c.curve.radius));
  kv("a", format_double(c.curve.aspect));
  kv("N", std::to_string(c.curve.vertices));
  kv("perturb_amp", format_double(c.curve.perturb_amp));
  kv("perturb_mode", std::to_string(c.curve.perturb_mode));
  kv("seed", std::to_string(c.curve.seed));
  kv("clockwise", format_bool(c.curve.clockwise));
  kv("center", "\"" + format_point(c.curve.center) + "\"");
  std::string pts;
  for (std::size_t i = 0; i < c.curve.custom_points.size(); ++i) {
    if (i > 0) pts += ";";
    pts += format_point(c.curve.custom_points[i]);
  }
  kv("points", "\"" + pts + "\"");
  kv("period", "\"" + format_point(c.curve.custom_period) + "\"");

  o << "\n[flow]\n";
  kv("t_end", format_double(c.flow.t_end));
  kv("cfl", format_double(c.flow.cfl));
  kv("dt_floor", format_double(c.flow.dt_floor));
  kv("A2_ceiling", format_double(c.flow.a2_ceiling));
  kv("remesh", format_bool(c.flow.remesh));
  kv("remesh_interval", std::to_string(c.flow.remesh_interval));
  kv("quality_floor", format_double(c.flow.quality_floor));
  kv("snapshot_stride", std::to_string(c.flow.snapshot_stride));
  kv("snapshots_per_decade", std::to_string(c.flow.snapshots_per_decade));

  o << "\n[probe]\n";
  kv("x0", c.probe.x0_auto ? "auto" : "\"" + format_point(c.probe.x0) + "\"");
  kv("t0", c.probe.t0_auto ? "auto" : format_double(c.probe.t0));
  kv("r", format_double(c.probe.r));
  kv("f", weight_name(c.probe.f));
  kv("y", format_double(c.probe.y));
  kv("q", std::to_string(c.probe.q));
  kv("eps", format_double(c.probe.eps));
  kv("C_max", format_double(c.probe.c_max));
  kv("delta", format_double(c.probe.delta));
  kv("s", format_double(c.probe.s));
  kv("levels", std::to_string(c.probe.levels));
  kv("alt_factor", format_double(c.probe.alt_factor));
  std::string lam;
  for (std::size_t i = 0; i < c.probe.lambdas.size(); ++i) {
    if (i > 0) lam += ",";
    lam += format_double(c.probe.lambdas[i]);
  }
  kv("lambdas", "\"" + lam + "\"");
  kv("s1", format_double(c.probe.s1));
  kv("s2", format_double(c.probe.s2));
  kv("R", format_double(c.probe.radius));
  kv("budget_per_decade", std::to_string(c.probe.budget_per_decade));

  o << "\n[output]\n";
  kv("out_dir", "\"" + c.output.out_dir + "\"");
  kv("svg", format_bool(c.output.svg));
  kv("frames", std::to_string(c.output.frames));
  kv("viewport", format_double(c.output.viewport));
  return o.str();
}

}  // namespace lmcf::cli
