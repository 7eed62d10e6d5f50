#pragma once

#include <string>
#include <vector>

#include "lmcf/flow.hpp"
#include "lmcf/presets.hpp"

namespace lmcf {

/// Two states of one flow a fixed step apart, with matched vertex labels.
struct StepPair {
  ImmersedCurve before;
  ImmersedCurve after;
  double dt = 0.0;
};

/// Advances `curve` by one RK4 step of size dt.
StepPair make_step_pair(const ImmersedCurve& curve, const AmbientSpace& space, double dt);

/// Per-sample residual of one identity on one state pair. Time derivatives
/// are forward differences across the pair; right-hand sides are averaged
/// over both states, so both sides are centred at t + dt/2.
struct IdentityResidual {
  std::vector<double> residual;
  double linf = 0.0;
  double l2 = 0.0;     // sqrt(mean square)
  double scale = 0.0;  // largest |right-hand side| seen, for context
  double noise = 0.0;  // round-off floor of the finite differences
  int worst = -1;      // index of the largest residual
  /// linf in units where the largest |k| of the state is 1: linf / kappa^power.
  double unit_linf = 0.0;
};

/// d ln(l_j^2)/dt + 2 <K, H> averaged over the two ends of edge j.
IdentityResidual metric_residual(const StepPair& pair, const AmbientSpace& space);
/// d ln(dual_j)/dt + <K, H>_j per vertex; the last entry is the total length
/// version d ln L/dt + (sum <K,H> dual) / L.
IdentityResidual area_element_residual(const StepPair& pair, const AmbientSpace& space);
/// d theta/dt - (theta_ss + <grad psi, T> theta_s). Throws Error if a matched
/// vertex jumps by more than pi across the pair.
IdentityResidual theta_residual(const StepPair& pair, const AmbientSpace& space);
/// d k^2/dt - (Delta k^2 - 2 k_s^2 + 2 k^4 - 2 k V_{,11} - 2 V k^3).
IdentityResidual a2_residual(const StepPair& pair, const AmbientSpace& space);
/// |K_geometric - K_angle| per vertex on a single state.
IdentityResidual k_identity_residual(const ImmersedCurve& curve, const AmbientSpace& space);

struct ResidualLevel {
  int vertices = 0;
  double t = 0.0;
  double dt = 0.0;
  double linf = 0.0;
  double l2 = 0.0;
  double scale = 0.0;
  double noise = 0.0;
  int worst = -1;
  double unit_linf = 0.0;
};

struct ResidualReport {
  std::string identity;
  std::vector<ResidualLevel> levels;  // coarse to fine
  double order = 0.0;                 // least-squares slope of -log linf against log N
  double tolerance = 1e-3;
  double order_min = 1.5;
  double order_max = 0.0;             // 0: no upper bound
  bool exact = false;                 // every level within its round-off floor
  bool passed = false;
  bool skipped = false;
  std::string reason;
};

/// Residuals at or below this (plus the level's round-off floor) count as
/// exact, and the order test is waived.
inline constexpr double kExactResidual = 1e-10;

/// Fills order and verdict. Pass: finest unit_linf <= tolerance and the order
/// lies in [order_min, order_max], or every level is exact.
void assess(ResidualReport& report);

ResidualReport skipped_report(const std::string& identity, const std::string& reason);

/// A flow benchmark integrated at several resolutions to a common time.
struct RefinementCase {
  std::string name;
  CurveSpec curve;
  AmbientSpace space;
  std::vector<int> levels{256, 512, 1024};
  double t_check = 0.05;
  double cfl = 0.2;
};

struct LevelState {
  int vertices = 0;
  StepPair pair;
};

/// Runs each level without redistribution to t_check, then takes one more
/// step of size cfl * h_min^2. Maslov indices of every row are collected.
std::vector<LevelState> advance_levels(const RefinementCase& c, std::vector<int>* maslov_seen = nullptr);

ResidualReport check_metric_evolution(const std::vector<LevelState>& levels, const AmbientSpace& space,
                                      double tolerance = 1e-3);
ResidualReport check_area_element(const std::vector<LevelState>& levels, const AmbientSpace& space,
                                  double tolerance = 1e-3);
ResidualReport check_theta_evolution(const std::vector<LevelState>& levels, const AmbientSpace& space,
                                     double tolerance = 1e-3);
ResidualReport check_A2_evolution(const std::vector<LevelState>& levels, const AmbientSpace& space,
                                  double tolerance = 1e-3);
/// Discrepancy of the two K computations; passes when the order is 2 +- 0.5.
ResidualReport check_k_identity(const std::vector<LevelState>& levels, const AmbientSpace& space);

/// All four evolution checks plus the K identity for one case.
std::vector<ResidualReport> check_identities(const RefinementCase& c, double tolerance = 1e-3);

struct BlowupBound {
  bool applicable = false;
  std::string reason;
  double margin = 0.0;  // min U (T_low - t) 8 sqrt 2
  int rows_checked = 0;
  bool passed = false;
};

/// U_t >= 1/(8 sqrt2 (T - t)) on the rows with T_est - t < 0.1, evaluated at
/// the lower confidence bound T_est - uncertainty. Rows closer to T_est than
/// `resolution` are beyond the resolved scales and are skipped.
BlowupBound check_blowup_bound(const FlowTrace& trace, const TerminationEvent& event, double t_est,
                               double uncertainty, double resolution);

}  // namespace lmcf
