#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lmcf/density.hpp"
#include "lmcf/errors.hpp"
#include "lmcf/flow.hpp"
#include "lmcf/presets.hpp"
#include "lmcf/singularity.hpp"

namespace lmcf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitArchive = 3;
inline constexpr int kExitBlowUp = 10;

/// A run directory is missing a file or holds one that cannot be read.
class ArchiveError : public Error {
 public:
  using Error::Error;
};

struct AmbientSection {
  int n = 1;
  std::string w;  // "<multi-index>:<re>,<im>;..."
  int degree_cap = AmbientSpace::kDefaultDegreeCap;

  bool operator==(const AmbientSection&) const = default;
};

/// `[probe]`: the density probe plus the analysis knobs.
struct ProbeSection {
  bool x0_auto = true;
  Complex x0{0.0, 0.0};
  bool t0_auto = true;
  double t0 = 0.0;
  double r = std::numeric_limits<double>::infinity();
  WeightKind f = WeightKind::kOne;
  double y = 0.0;
  int q = 1;
  double eps = 0.01;
  double c_max = 5.0;
  double delta = 0.1;
  double s = -1.0;
  int levels = 4;
  double alt_factor = 1.5;
  std::vector<double> lambdas{10.0, 20.0, 40.0, 80.0};  // rescalings for the space-time integrals and volume ratios
  double s1 = -2.0;
  double s2 = -1.0;
  double radius = 2.0;  // R of the ball restricted integrals
  int budget_per_decade = 8;

  bool operator==(const ProbeSection&) const = default;
};

struct OutputSection {
  std::string out_dir = "out";
  bool svg = false;
  int frames = 8;
  double viewport = 0.0;  // half width of the SVG viewport; 0 fits the initial curve

  bool operator==(const OutputSection&) const = default;
};

struct RunConfig {
  AmbientSection ambient;
  CurveSpec curve;
  FlowConfig flow;
  ProbeSection probe;
  OutputSection output;

  bool operator==(const RunConfig&) const = default;
};

/// Parses the sectioned key = value text. Throws ConfigError carrying the
/// 1-based line of the offending entry.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Assigns one key; `line` is only used for error messages.
void set_value(RunConfig& config, const std::string& section, const std::string& key, const std::string& value,
               int line = 0);

/// Canonical text of the configuration; parse_config(render_config(c)) == c.
std::string render_config(const RunConfig& config);

/// Throws ConfigError when sections are inconsistent (bad W, invalid flow
/// settings, unusable curve).
void validate_config(const RunConfig& config);

AmbientSpace make_space(const RunConfig& config);

/// Shortest round-trip decimal form; "inf" and "-inf" for infinities.
std::string format_double(double v);
double parse_double(std::string_view text);

// Archive files.
inline constexpr const char* kTraceHeader = "t,dt,area,U,maxK,theta_min,theta_max,maslov";
inline constexpr const char* kSnapshotHeader = "x,y,theta,k";

void write_trace_csv(const std::filesystem::path& path, const FlowTrace& trace);
std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path);

/// snapshots/s_<index>.csv for every snapshot plus snapshots/index.json,
/// which also records the termination event and the redistribution flag.
void write_snapshots(const std::filesystem::path& dir, const FlowTrace& trace, const TerminationEvent& event,
                     const AmbientSpace& space);

struct LoadedRun {
  RunConfig config;
  FlowResult result;
};

/// Reads config.resolved, trace.csv and the snapshot archive of a run.
/// Throws ArchiveError on a missing or unreadable file.
LoadedRun load_run(const std::filesystem::path& dir);

struct SvgOptions {
  double viewport = 1.5;  // half width; the view is [-viewport, viewport]^2 around `center`
  Complex center{0.0, 0.0};
  double t = 0.0;
  double u = 0.0;
  int maslov = 0;
};

/// One path through the vertices (closed for closed curves), vertex dots
/// coloured by theta, and a legend with t, U_t and the Maslov index.
std::string svg_frame(const ImmersedCurve& curve, const FrameData& frame, const SvgOptions& options);
/// Rescaled snapshot in the viewport [-R, R]^2.
std::string svg_rescaled(const RescaledSnapshot& snap, double R);

std::string report_json(const SingularityReport& report, int indent = 2);
std::string verify_json(const std::vector<ResidualReport>& reports, int indent = 2);

/// Integrates the configured flow and writes config.resolved, trace.csv,
/// snapshots/ and, with output.svg, frames/*.svg.
/// Returns kExitOk on t_end, kExitBlowUp on blow-up, kExitFailure otherwise.
int cmd_run(const RunConfig& config, std::ostream& log);

/// Convergence checks for the archived configuration at N/4, N/2 and N.
/// Writes verify_report.json. Returns kExitArchive if the archive is
/// incomplete and kExitFailure if a check fails.
int cmd_verify(const std::filesystem::path& run_dir, std::ostream& log);

/// Writes report.json, spectrum.csv, density.csv and spacetime.csv.
/// `probe_overrides` are "key=value" entries of the [probe] section.
int cmd_analyze(const std::filesystem::path& run_dir, const std::vector<std::string>& probe_overrides,
                std::ostream& log);

/// One axis of a sweep: "section.key=v1,v2,...".
struct GridAxis {
  std::string section;
  std::string key;
  std::vector<std::string> values;
};

GridAxis parse_grid_axis(const std::string& text);

struct AtlasRow {
  std::vector<std::string> params;
  std::string verdict;
  double t_est = 0.0;
  double uncertainty = 0.0;
  double c_est = 0.0;
  double q_max = 0.0;
  int maslov = 0;
  int clusters = 0;
  std::string spectrum;
  int exit_code = 0;
};

/// Runs and analyzes every grid point into out_dir/runs/p<k>/ (concurrently
/// over `threads` workers) and writes out_dir/atlas.csv sorted by the
/// parameter tuple. An empty grid writes a header-only atlas.
int cmd_sweep(const RunConfig& base, const std::vector<GridAxis>& grid, std::ostream& log, int threads = 0);

}  // namespace lmcf::cli
