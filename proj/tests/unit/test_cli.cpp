#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <gtest/gtest.h>

#include "lmcf/cli.hpp"

using namespace lmcf;
using namespace lmcf::cli;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("lmcf_unit_" + name);
  fs::remove_all(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count(const std::string& text, const std::string& needle) {
  int n = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

RunConfig short_ellipse(const fs::path& dir) {
  RunConfig c;
  c.curve.preset = CurvePreset::kEllipse;
  c.curve.aspect = 0.7;
  c.curve.vertices = 64;
  c.flow.t_end = 0.01;
  c.flow.snapshot_stride = 50;
  c.output.out_dir = dir.string();
  return c;
}

}  // namespace

TEST(Config, ParsesSectionsCommentsAndQuotes) {
  const RunConfig c = parse_config(R"(# comment
[ambient]
W = "1:0.3,0"   
; another comment
[curve]
preset = figure_eight
N = 512
center = "0.5,-1"
[flow]
A2_ceiling = 1e9
remesh = true
[probe]
x0 = "0.1,0.2"
t0 = auto
r = inf
f = moment
lambdas = "10,20"
[output]
out_dir = "runs/f8"
svg = true
)");
  EXPECT_EQ(c.ambient.w, "1:0.3,0");
  EXPECT_EQ(c.curve.preset, CurvePreset::kFigureEight);
  EXPECT_EQ(c.curve.vertices, 512);
  EXPECT_EQ(c.curve.center, Complex(0.5, -1.0));
  EXPECT_EQ(c.flow.a2_ceiling, 1e9);
  EXPECT_TRUE(c.flow.remesh);
  EXPECT_FALSE(c.probe.x0_auto);
  EXPECT_EQ(c.probe.x0, Complex(0.1, 0.2));
  EXPECT_TRUE(c.probe.t0_auto);
  EXPECT_TRUE(std::isinf(c.probe.r));
  EXPECT_EQ(c.probe.f, WeightKind::kMoment);
  EXPECT_EQ(c.probe.lambdas, (std::vector<double>{10, 20}));
  EXPECT_EQ(c.output.out_dir, "runs/f8");
  EXPECT_TRUE(c.output.svg);
}

TEST(Config, RenderRoundTrips) {
  RunConfig c;
  c.ambient.w = "1:0.3,0;2:0.05,0.02";
  c.curve.preset = CurvePreset::kCustom;
  for (int j = 0; j < 20; ++j) c.curve.custom_points.push_back(std::polar(1.0 + 0.1 * j, 0.3 * j));
  c.curve.custom_period = {0.0, 0.1};
  c.curve.seed = 123456789012345ULL;
  c.flow.cfl = 0.1 + 0.2;  // not exactly representable in short decimal form
  c.probe.x0_auto = false;
  c.probe.x0 = {1.0 / 3.0, -2.0 / 7.0};
  c.probe.t0_auto = false;
  c.probe.t0 = 0.15089565558120946;
  c.probe.r = 0.75;
  c.output.viewport = 2.5;
  const std::string text = render_config(c);
  EXPECT_EQ(parse_config(text), c);
  EXPECT_EQ(render_config(parse_config(text)), text);
  EXPECT_EQ(parse_config(render_config(RunConfig{})), RunConfig{});
}

TEST(Config, ErrorsCarryLineNumbers) {
  auto line_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.line();
    }
    return -1;
  };
  EXPECT_EQ(line_of("[curve]\nN = 64\nbogus = 1\n"), 3);
  EXPECT_EQ(line_of("[curve]\nN = 64\nN = 65\n"), 3);
  EXPECT_EQ(line_of("[flow]\n\ncfl = fast\n"), 3);
  EXPECT_EQ(line_of("N = 64\n"), 1);
  EXPECT_EQ(line_of("[nowhere]\n"), 1);
  EXPECT_EQ(line_of("[curve\n"), 1);
  EXPECT_EQ(line_of("[curve]\nN\n"), 2);
  // Semantic errors found after parsing point at the offending key.
  EXPECT_EQ(line_of("[curve]\nN = 64\n[flow]\nt_end = 1\ncfl = 0.9\n"), 5);
  EXPECT_EQ(line_of("[ambient]\nW = \"1:x,0\"\n"), 2);
  try {
    parse_config("[curve]\n\nbogus = 1\n");
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("line 3:", 0), 0u) << e.what();
  }
}

TEST(Config, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1e9), "1e+09");
  EXPECT_EQ(format_double(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(parse_double("inf"), std::numeric_limits<double>::infinity());
  EXPECT_EQ(parse_double(" +2.5 "), 2.5);
  EXPECT_THROW(parse_double("2.5x"), ConfigError);
  const double v = 0.15089565558120946;
  EXPECT_EQ(parse_double(format_double(v)), v);
}

TEST(Config, GridAxis) {
  const GridAxis a = parse_grid_axis("curve.a=0.8,1.0,1.2");
  EXPECT_EQ(a.section, "curve");
  EXPECT_EQ(a.key, "a");
  EXPECT_EQ(a.values, (std::vector<std::string>{"0.8", "1.0", "1.2"}));
  EXPECT_THROW(parse_grid_axis("a=1,2"), ConfigError);
  EXPECT_THROW(parse_grid_axis("curve.a="), ConfigError);
}

TEST(Archive, RunWritesCompleteArchive) {
  const fs::path dir = fresh_dir("archive");
  RunConfig c = short_ellipse(dir);
  c.output.svg = true;
  c.output.frames = 3;
  c.flow.snapshot_stride = 5;
  std::ostringstream log;
  ASSERT_EQ(cmd_run(c, log), kExitOk) << log.str();
  EXPECT_EQ(slurp(dir / "config.resolved"), render_config(c));
  const std::string trace = slurp(dir / "trace.csv");
  EXPECT_EQ(trace.substr(0, trace.find('\n')), kTraceHeader);
  const LoadedRun run = load_run(dir);
  EXPECT_EQ(run.config, c);
  EXPECT_EQ(run.result.event.kind, Termination::kReachedEnd);
  ASSERT_GE(run.result.trace.snapshots.size(), 2u);
  // Snapshots round-trip exactly.
  const ImmersedCurve initial = make_curve(c.curve);
  EXPECT_EQ(run.result.trace.snapshots.front().curve.points, initial.points);
  for (const Snapshot& s : run.result.trace.snapshots) {
    const std::string file = slurp(dir / "snapshots" / ("s_" + std::to_string(s.index) + ".csv"));
    EXPECT_EQ(file.substr(0, file.find('\n')), kSnapshotHeader);
  }
  int frames = 0;
  for (const auto& e : fs::directory_iterator(dir / "frames")) frames += e.path().extension() == ".svg";
  EXPECT_EQ(frames, 3);
}

TEST(Archive, TraceCsvRoundTrip) {
  const fs::path dir = fresh_dir("trace");
  FlowTrace t;
  for (int i = 0; i < 5; ++i) t.rows.push_back({0.1 * i, 1.0 / 3.0, 6.28, 1e6 + i, 1e3, -0.5, 7.8, i % 2});
  write_trace_csv(dir / "trace.csv", t);
  const auto rows = read_trace_csv(dir / "trace.csv");
  ASSERT_EQ(rows.size(), 5u);
  for (int i = 0; i < 5; ++i) {
    EXPECT_EQ(rows[i].t, t.rows[i].t);
    EXPECT_EQ(rows[i].dt, t.rows[i].dt);
    EXPECT_EQ(rows[i].u, t.rows[i].u);
    EXPECT_EQ(rows[i].maslov, t.rows[i].maslov);
  }
  std::ofstream(dir / "bad.csv") << "t,dt\n1,2\n";
  EXPECT_THROW(read_trace_csv(dir / "bad.csv"), ArchiveError);
  EXPECT_THROW(read_trace_csv(dir / "missing.csv"), ArchiveError);
}

TEST(Commands, RunExitCodes) {
  std::ostringstream log;
  RunConfig c = short_ellipse(fresh_dir("exit_ok"));
  EXPECT_EQ(cmd_run(c, log), kExitOk);
  c.flow.cfl = 2.0;
  EXPECT_EQ(cmd_run(c, log), kExitConfig);
  RunConfig circle;
  circle.curve.vertices = 64;
  circle.flow.t_end = 1.0;
  circle.flow.cfl = 0.5;
  circle.flow.a2_ceiling = 1e4;
  circle.output.out_dir = fresh_dir("exit_blowup").string();
  EXPECT_EQ(cmd_run(circle, log), kExitBlowUp);
  EXPECT_GE(read_trace_csv(fs::path(circle.output.out_dir) / "trace.csv").back().u, 1e4 / 2);
}

TEST(Commands, VerifyMissingSnapshotsIsAnArchiveError) {
  const fs::path dir = fresh_dir("verify_missing");
  std::ostringstream log;
  ASSERT_EQ(cmd_run(short_ellipse(dir), log), kExitOk);
  fs::remove_all(dir / "snapshots");
  EXPECT_EQ(cmd_verify(dir, log), kExitArchive);
  EXPECT_EQ(cmd_analyze(dir, {}, log), kExitArchive);
  EXPECT_EQ(cmd_verify(fresh_dir("verify_nothing"), log), kExitArchive);
}

TEST(Commands, VerifySkipsPointwiseChecksWithRedistribution) {
  const fs::path dir = fresh_dir("verify_remesh");
  RunConfig c = short_ellipse(dir);
  c.flow.remesh = true;
  c.flow.remesh_interval = 5;
  std::ostringstream log;
  ASSERT_EQ(cmd_run(c, log), kExitOk);
  EXPECT_EQ(cmd_verify(dir, log), kExitOk) << log.str();
  const std::string report = slurp(dir / "verify_report.json");
  EXPECT_EQ(count(report, "\"skipped\": true"), 6);  // five identities plus the blow-up bound
  EXPECT_NE(report.find("redistribution enabled"), std::string::npos);
  EXPECT_NE(report.find("maslov_constant"), std::string::npos);
}

TEST(Commands, AnalyzeWithoutBlowUp) {
  const fs::path dir = fresh_dir("analyze_none");
  std::ostringstream log;
  ASSERT_EQ(cmd_run(short_ellipse(dir), log), kExitOk);
  EXPECT_EQ(cmd_analyze(dir, {"C_max=4"}, log), kExitOk) << log.str();
  const std::string report = slurp(dir / "report.json");
  EXPECT_NE(report.find("\"verdict\": \"NoSingularity\""), std::string::npos);
  EXPECT_EQ(slurp(dir / "density.csv"), "t,tau,phi,dphi,source,defect,kinetic,slack,excess,b1,b2,h_max,resolved\n");
  EXPECT_EQ(cmd_analyze(dir, {"bogus=1"}, log), kExitConfig);
  EXPECT_EQ(cmd_analyze(dir, {"C_max"}, log), kExitConfig);
}

TEST(Commands, EmptySweep) {
  const fs::path dir = fresh_dir("sweep_empty");
  RunConfig c;
  c.output.out_dir = dir.string();
  std::ostringstream log;
  EXPECT_EQ(cmd_sweep(c, {}, log), kExitOk);
  EXPECT_EQ(slurp(dir / "atlas.csv"), "verdict,T_est,uncertainty,C_est,Q_max,maslov,clusters,spectrum,exit_code\n");
}

TEST(Commands, SweepRowsSortedByParameters) {
  const fs::path dir = fresh_dir("sweep_sorted");
  RunConfig c = short_ellipse(dir);
  std::ostringstream log;
  EXPECT_EQ(cmd_sweep(c, {parse_grid_axis("curve.a=1.2,0.8,1.0"), parse_grid_axis("curve.N=64,32")}, log, 3),
            kExitOk)
      << log.str();
  std::istringstream atlas(slurp(dir / "atlas.csv"));
  std::string line;
  std::getline(atlas, line);
  EXPECT_EQ(line.rfind("curve.a,curve.N,verdict", 0), 0u);
  std::vector<std::string> keys;
  while (std::getline(atlas, line)) keys.push_back(line.substr(0, line.find(',', line.find(',') + 1)));
  EXPECT_EQ(keys, (std::vector<std::string>{"0.8,32", "0.8,64", "1.0,32", "1.0,64", "1.2,32", "1.2,64"}));
  EXPECT_EQ(cmd_sweep(c, {parse_grid_axis("curve.bogus=1")}, log), kExitConfig);
}

TEST(Svg, CircleIsOneClosedPath) {
  CurveSpec s;
  const ImmersedCurve c = make_curve(s);
  const FrameData f = compute_frame(c, AmbientSpace());
  SvgOptions o;
  o.maslov = f.maslov;
  const std::string svg = svg_frame(c, f, o);
  EXPECT_EQ(count(svg, "<path"), 1);
  const std::string d = svg.substr(svg.find(" d=\""));
  EXPECT_EQ(count(d.substr(0, d.find("\"/>")), " L"), 255);
  EXPECT_NE(svg.find(" Z\""), std::string::npos);
  EXPECT_EQ(count(svg, "<circle"), 256);
  EXPECT_NE(svg.find("maslov = 1"), std::string::npos);
}

TEST(Svg, RescaledViewport) {
  ImmersedCurve line;
  for (int j = 0; j < 32; ++j) line.points.emplace_back(j * 0.25 - 4.0, 0.0);
  line.period = {8.0, 0.0};
  line.t = -1.0;
  const RescaledSnapshot r = rescale(Snapshot{0, -1.0, line}, AmbientSpace(), 1.0, {0, 0}, 0.0);
  const std::string svg = svg_rescaled(r, 2.0);
  // x = -R maps to the left edge and x = 0 to the middle of the 800 px frame.
  EXPECT_NE(svg.find("M-400.00 400.00"), std::string::npos);
  EXPECT_NE(svg.find("cx=\"400.00\" cy=\"400.00\""), std::string::npos);
  EXPECT_EQ(count(svg, "<path"), 1);
}

namespace {

std::vector<std::vector<std::string>> atlas_rows(const fs::path& path) {
  std::istringstream in(slurp(path));
  std::string line;
  std::vector<std::vector<std::string>> rows;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST(Commands, SweepOverCircleRadius) {
  const fs::path dir = fresh_dir("sweep_circle");
  RunConfig c;
  c.curve.vertices = 128;
  c.flow.t_end = 10.0;
  c.flow.cfl = 0.5;
  c.flow.a2_ceiling = 1e6;
  c.output.out_dir = dir.string();
  std::ostringstream log;
  ASSERT_EQ(cmd_sweep(c, {parse_grid_axis("curve.R=0.5,1,2")}, log), kExitOk) << log.str();
  const auto rows = atlas_rows(dir / "atlas.csv");
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    const double radius = parse_double(r[0]);
    EXPECT_EQ(r[1], "TypeI");
    EXPECT_NEAR(parse_double(r[2]), radius * radius / 2, 1e-3 * radius * radius);
    EXPECT_NEAR(parse_double(r[4]), 0.5, 0.01);
    EXPECT_EQ(r[6], "1");
  }
}

TEST(Commands, SweepOverFigureEightAspect) {
  const fs::path dir = fresh_dir("sweep_eight");
  RunConfig c;
  c.curve.preset = CurvePreset::kFigureEight;
  c.curve.vertices = 512;
  c.flow.t_end = 10.0;
  c.flow.cfl = 0.5;
  c.flow.a2_ceiling = 1e9;
  c.flow.remesh = true;
  c.flow.remesh_interval = 50;
  c.output.out_dir = dir.string();
  std::ostringstream log;
  ASSERT_EQ(cmd_sweep(c, {parse_grid_axis("curve.a=0.8,1.0,1.2")}, log), kExitOk) << log.str();
  const auto rows = atlas_rows(dir / "atlas.csv");
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_NE(r[1], "TypeI") << "a = " << r[0];
    EXPECT_EQ(r[6], "0");
    EXPECT_LE(std::stoi(r[7]), 4);
  }
}
