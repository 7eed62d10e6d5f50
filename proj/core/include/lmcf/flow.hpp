#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lmcf/curve.hpp"

namespace lmcf {

struct FlowConfig {
  double t_end = 1.0;
  double cfl = 0.2;
  double dt_floor = 1e-12;
  double a2_ceiling = 1e8;
  bool remesh = false;
  int remesh_interval = 100;
  double quality_floor = 0.05;
  int snapshot_stride = 1000;
  /// Extra snapshots each time U_t crosses 10^(j / snapshots_per_decade).
  int snapshots_per_decade = 16;

  void validate() const;

  bool operator==(const FlowConfig&) const = default;
};

struct TraceRow {
  double t = 0.0;
  double dt = 0.0;
  double area = 0.0;   // total length
  double u = 0.0;      // U_t = max |A|^2
  double max_k = 0.0;  // max |K|
  double theta_min = 0.0;
  double theta_max = 0.0;
  int maslov = 0;
};

struct Snapshot {
  int index = 0;
  double t = 0.0;
  ImmersedCurve curve;
};

enum class Termination { kReachedEnd, kBlowUpCeiling, kBlowUpDtFloor, kBlowUpCusp, kMeshDegenerate };

struct TerminationEvent {
  Termination kind = Termination::kReachedEnd;
  double t = 0.0;
  std::string detail;

  bool blow_up() const {
    return kind == Termination::kBlowUpCeiling || kind == Termination::kBlowUpDtFloor ||
           kind == Termination::kBlowUpCusp;
  }
};

std::string termination_name(Termination kind);
Termination parse_termination(const std::string& name);

struct FlowTrace {
  std::vector<TraceRow> rows;
  std::vector<Snapshot> snapshots;
  bool redistributed = false;
};

struct FlowResult {
  FlowTrace trace;
  TerminationEvent event;
};

/// Called on every accepted state, including the initial one.
using FlowObserver = std::function<void(const ImmersedCurve&, const FrameData&)>;

/// One classical RK4 step of dF/dt = K, frame recomputed at every stage.
ImmersedCurve step(const ImmersedCurve& curve, const AmbientSpace& space, double dt);

struct StepSize {
  double dt = 0.0;
  bool hit_floor = false;
};

/// dt = cfl * min(h_min^2, 1/U_t), clamped below by dt_floor.
StepSize adapt_dt(const FrameData& frame, const FlowConfig& config);

/// Resamples at equal arclength of the periodic cubic spline through the
/// vertices (chord-length knots). Vertex 0 and N are kept.
ImmersedCurve redistribute(const ImmersedCurve& curve);

/// Length of the periodic cubic spline through the vertices.
double spline_length(const ImmersedCurve& curve);

TraceRow make_row(const ImmersedCurve& curve, const FrameData& frame, double dt);

FlowResult run(const ImmersedCurve& initial, const AmbientSpace& space, const FlowConfig& config,
               const FlowObserver& observer = {});

}  // namespace lmcf
