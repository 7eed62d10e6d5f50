#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lmcf/cli.hpp"

namespace lmcf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArchiveError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArchiveError("missing or unreadable " + path.string());
  return in;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double cell_double(const std::string& s, const fs::path& path, int line) {
  try {
    return parse_double(s);
  } catch (const ConfigError&) {
    throw ArchiveError(path.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
  }
}

// Reads a CSV with the exact header; returns the numeric rows.
std::vector<std::vector<double>> read_numeric_csv(const fs::path& path, const std::string& header) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || line != header) throw ArchiveError(path.string() + ": unexpected header");
  std::vector<std::vector<double>> rows;
  const std::size_t cols = split_csv(header).size();
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != cols) throw ArchiveError(path.string() + ":" + std::to_string(line_no) + ": wrong column count");
    std::vector<double> row;
    row.reserve(cols);
    for (const auto& c : cells) row.push_back(cell_double(c, path, line_no));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

void write_trace_csv(const fs::path& path, const FlowTrace& trace) {
  std::ofstream out = open_out(path);
  out << kTraceHeader << "\n";
  for (const TraceRow& r : trace.rows) {
    out << format_double(r.t) << ',' << format_double(r.dt) << ',' << format_double(r.area) << ','
        << format_double(r.u) << ',' << format_double(r.max_k) << ',' << format_double(r.theta_min) << ','
        << format_double(r.theta_max) << ',' << r.maslov << "\n";
  }
  if (!out) throw ArchiveError("write failed: " + path.string());
}

std::vector<TraceRow> read_trace_csv(const fs::path& path) {
  std::vector<TraceRow> rows;
  for (const auto& v : read_numeric_csv(path, kTraceHeader)) {
    TraceRow r;
    r.t = v[0];
    r.dt = v[1];
    r.area = v[2];
    r.u = v[3];
    r.max_k = v[4];
    r.theta_min = v[5];
    r.theta_max = v[6];
    r.maslov = static_cast<int>(v[7]);
    rows.push_back(r);
  }
  return rows;
}

void write_snapshots(const fs::path& dir, const FlowTrace& trace, const TerminationEvent& event,
                     const AmbientSpace& space) {
  fs::create_directories(dir);
  json index;
  index["termination"] = termination_name(event.kind);
  index["termination_t"] = event.t;
  index["termination_detail"] = event.detail;
  index["redistributed"] = trace.redistributed;
  json entries = json::array();
  for (const Snapshot& s : trace.snapshots) {
    const std::string name = "s_" + std::to_string(s.index) + ".csv";
    std::ofstream out = open_out(dir / name);
    out << kSnapshotHeader << "\n";
    FrameData frame;
    bool have_frame = true;
    try {
      frame = compute_frame(s.curve, space);
    } catch (const GeometryError&) {
      have_frame = false;  // a degenerate final state still gets its points archived
    }
    for (int j = 0; j < s.curve.size(); ++j) {
      const double theta = have_frame ? frame.theta[j] : 0.0;
      const double k = have_frame ? frame.curvature[j] : 0.0;
      out << format_double(s.curve.points[j].real()) << ',' << format_double(s.curve.points[j].imag()) << ','
          << format_double(theta) << ',' << format_double(k) << "\n";
    }
    if (!out) throw ArchiveError("write failed: " + (dir / name).string());
    entries.push_back({{"index", s.index},
                       {"t", s.t},
                       {"file", name},
                       {"period", {s.curve.period.real(), s.curve.period.imag()}}});
  }
  index["snapshots"] = std::move(entries);
  std::ofstream out = open_out(dir / "index.json");
  out << index.dump(2) << "\n";
}

LoadedRun load_run(const fs::path& dir) {
  LoadedRun run;
  {
    std::ifstream in = open_in(dir / "config.resolved");
    std::ostringstream ss;
    ss << in.rdbuf();
    run.config = parse_config(ss.str());
  }
  run.result.trace.rows = read_trace_csv(dir / "trace.csv");

  const fs::path snap_dir = dir / "snapshots";
  json index;
  try {
    std::ifstream in = open_in(snap_dir / "index.json");
    index = json::parse(in);
  } catch (const json::exception& e) {
    throw ArchiveError((snap_dir / "index.json").string() + ": " + e.what());
  }
  try {
    run.result.event.kind = parse_termination(index.at("termination").get<std::string>());
    run.result.event.t = index.at("termination_t").get<double>();
    run.result.event.detail = index.value("termination_detail", std::string());
    run.result.trace.redistributed = index.at("redistributed").get<bool>();
    for (const json& e : index.at("snapshots")) {
      Snapshot s;
      s.index = e.at("index").get<int>();
      s.t = e.at("t").get<double>();
      const auto period = e.at("period");
      s.curve.period = {period.at(0).get<double>(), period.at(1).get<double>()};
      s.curve.t = s.t;
      const fs::path file = snap_dir / e.at("file").get<std::string>();
      for (const auto& v : read_numeric_csv(file, kSnapshotHeader)) s.curve.points.emplace_back(v[0], v[1]);
      run.result.trace.snapshots.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw ArchiveError((snap_dir / "index.json").string() + ": " + e.what());
  } catch (const ArchiveError&) {
    throw;
  } catch (const Error& e) {
    throw ArchiveError((snap_dir / "index.json").string() + ": " + e.what());
  }
  return run;
}

}  // namespace lmcf::cli
