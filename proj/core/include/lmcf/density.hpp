#pragma once

#include <limits>
#include <string>
#include <vector>

#include "lmcf/flow.hpp"

namespace lmcf {

enum class WeightKind { kOne, kThetaSquared, kMoment };

std::string weight_name(WeightKind kind);
WeightKind parse_weight(const std::string& name);

/// Base point and time of the backward heat kernel, the cutoff radius and the
/// weight f(theta) of the Gaussian integral.
struct DensityProbe {
  Complex x0{0.0, 0.0};
  double t0 = 0.0;
  double r = std::numeric_limits<double>::infinity();  // infinite: phi == 1
  WeightKind f = WeightKind::kOne;
  double y = 0.0;  // centre of the moment weight (theta - y)^{2q}
  int q = 1;
  double eps = 0.01;

  /// Throws Error on r <= 0, q < 1 or a negative eps.
  void validate() const;

  double weight(double theta) const;
  double weight_derivative(double theta) const;
  double weight_second_derivative(double theta) const;
};

/// (4 pi tau)^{-n/2} exp(-dist2 / (4 tau)); tau > 0.
double heat_kernel(double dist2, double tau, int n = 1);

/// rho(X, t) for the probe's X0 and t0. Throws Error if t >= t0.
double backward_kernel(Complex x, const DensityProbe& probe, double t);

/// 6u^5 - 15u^4 + 10u^3 clamped to [0, 1].
double smoothstep(double u);

/// 1 on B_r(X0), 0 outside B_2r(X0), 1 - S((|X - X0| - r) / r) in between.
double cutoff_phi(Complex x, const DensityProbe& probe);

/// Sum_j f(theta_j) phi(F_j) rho(F_j, t) dual_j. Throws Error if t >= t0.
double weighted_integral(const ImmersedCurve& curve, const FrameData& frame, const DensityProbe& probe,
                         double t);

/// Per-vertex <F - X0, N> N.
std::vector<Complex> normal_component(const FrameData& frame, const ImmersedCurve& curve, Complex x0);

/// Largest edge length among edges whose midpoint lies within 8 sqrt(tau) of
/// X0, where the kernel carries all but ~1e-7 of its weight. Falls back to the
/// global maximum when no edge is that close.
double kernel_support_h_max(const ImmersedCurve& curve, const FrameData& frame, Complex x0, double tau);

/// sqrt(tau) >= 3 h_max over the kernel support.
bool kernel_resolved(const ImmersedCurve& curve, const FrameData& frame, Complex x0, double tau);

/// One row of the monotonicity budget. With tau = t0 - t, the inequality
///   Phi' - c1 Phi / (2 sqrt tau) <= S - D + eps E + c2 tau^{-3/4} + c3
/// is rearranged as excess <= c1 b1 + c2 b2 + c3.
struct BudgetSample {
  double t = 0.0;
  double tau = 0.0;
  double phi = 0.0;      // Phi
  double dphi = 0.0;     // dPhi/dt along the discrete flow, exact chain rule
  double source = 0.0;   // S = int (d/dt - Delta) f phi rho
  double defect = 0.0;   // D = int f phi rho |K + (F - X0)^perp / (2 tau)|^2
  double kinetic = 0.0;  // E = int f phi rho |K|^2
  double slack = 0.0;    // eps E
  double excess = 0.0;   // Phi' - S + D - eps E
  double b1 = 0.0;       // Phi / (2 sqrt tau)
  double b2 = 0.0;       // tau^{-3/4}
  double h_max = 0.0;
  bool resolved = true;
};

BudgetSample budget_sample(const ImmersedCurve& curve, const FrameData& frame, const AmbientSpace& space,
                           const DensityProbe& probe);

/// Smallest non-negative (c1, c2, c3) in the least-norm sense with
/// excess_i <= c1 b1_i + c2 b2_i + c3 on every resolved sample.
struct BudgetFit {
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  /// Largest excess_i - (c1 b1_i + c2 b2_i + c3) before the final c3 top-up.
  double residual_violation = 0.0;
  int samples_used = 0;
  bool feasible = true;
};

BudgetFit fit_budget(const std::vector<BudgetSample>& samples);

struct MonotonicityBudget {
  std::vector<BudgetSample> samples;
  BudgetFit fit;
};

/// Minimum number of samples before t0 the fit accepts.
inline constexpr int kMinBudgetSamples = 20;

/// Evaluates the budget on the snapshot nearest to each requested time
/// (duplicates dropped) and fits the constants. Throws Error when t0 does not
/// exceed every sample time or fewer than kMinBudgetSamples distinct
/// snapshots remain.
MonotonicityBudget monotonicity_budget(const std::vector<Snapshot>& snapshots, const AmbientSpace& space,
                                       const DensityProbe& probe, const std::vector<double>& sample_times);

/// Tracks Phi on every accepted state of a run, for the per-step
/// monotonicity check. States at or past t0 are ignored.
class DensityRecorder {
 public:
  DensityRecorder(const AmbientSpace& space, DensityProbe probe);

  void operator()(const ImmersedCurve& curve, const FrameData& frame);

  const std::vector<double>& times() const { return t_; }
  const std::vector<double>& values() const { return phi_; }
  /// Largest (Phi_{k+1} - Phi_k) / Phi_k over consecutive states.
  double max_relative_increase() const;

 private:
  const AmbientSpace* space_;
  DensityProbe probe_;
  std::vector<double> t_;
  std::vector<double> phi_;
};

/// F_lambda = lambda (F - X0) at s = lambda^2 (t - T).
struct RescaledSnapshot {
  double lambda = 1.0;
  double s = 0.0;
  double t = 0.0;
  int source_index = 0;
  Complex period{0.0, 0.0};
  std::vector<Complex> points;
  std::vector<double> theta;            // unchanged by scaling
  std::vector<double> weights;          // lambda * dual length
  std::vector<Complex> normal;
  std::vector<Complex> mean_curvature;  // H / lambda
  std::vector<Complex> velocity;        // K / lambda
  /// lambda^{-1} max |grad psi| over the vertices.
  double drift_magnitude = 0.0;
  int maslov = 0;
};

RescaledSnapshot rescale(const Snapshot& snapshot, const AmbientSpace& space, double lambda, Complex x0,
                         double T);
/// Rescales every snapshot with t < T.
std::vector<RescaledSnapshot> rescale(const std::vector<Snapshot>& snapshots, const AmbientSpace& space,
                                      double lambda, Complex x0, double T);

/// Sum_j f(theta_j) phi(X_j) rho(X_j) w_j on the rescaled curve, with the
/// kernel taken at time s against the probe's x0 and t0 (normally 0 and 0).
double weighted_integral(const RescaledSnapshot& snap, const DensityProbe& probe);

/// Length of the segment [a, b] inside the closed disk |z| <= R.
double segment_length_in_disk(Complex a, Complex b, double R);

/// Per-vertex measure inside B_R: the clipped lengths of the two half edges
/// meeting at each vertex.
std::vector<double> ball_weights(const RescaledSnapshot& snap, double R);

struct SpaceTimeIntegrals {
  double normal_part = 0.0;     // int int |F^perp|^2
  double mean_curvature = 0.0;  // int int |H|^2
  double velocity = 0.0;        // int int |K|^2
};

/// Trapezoid rule in s over [s1, s2] of the three ball-restricted integrals,
/// values at s1 and s2 linearly interpolated between neighbouring snapshots.
/// Throws Error unless s1 < s2 < 0 and the snapshots bracket [s1, s2].
SpaceTimeIntegrals spacetime_integrals(const std::vector<RescaledSnapshot>& seq, double s1, double s2, double R);

/// mu(L inside B_R(X0)) / R^n with exact segment clipping.
double volume_ratio(const ImmersedCurve& curve, Complex x0, double R);
double volume_ratio(const RescaledSnapshot& snap, double R);

/// int (theta - y)^{2q} phi rho over the rescaled curve. The probe must carry
/// the moment weight.
double angle_moments(const RescaledSnapshot& snap, const DensityProbe& probe);

struct KernelBoundLevel {
  double s_min = 0.0;
  double c = 0.0;  // smallest admissible C on the grid
};

struct KernelBoundResult {
  double alpha = 0.0;
  double beta = 0.0;
  std::vector<KernelBoundLevel> levels;  // s_min decreasing
  double c = 0.0;                        // value on the finest grid
  bool divergent = false;
  bool passed = false;
};

/// Smallest C with x^2 s^{-alpha} e^{-x^2/s} s^{-n/2} <= C (1 + s^{-beta} e^{-x^2/s} s^{-n/2})
/// on grids x in [0, 10], s in [s_min, 1] for each s_min. Divergent when C
/// keeps growing by more than `growth` between the two finest grids.
KernelBoundResult kernel_bound_check(double alpha, double beta, int n = 1,
                                     const std::vector<double>& s_min_levels = {1e-2, 1e-4, 1e-6, 1e-8},
                                     double growth = 1.5);

}  // namespace lmcf
