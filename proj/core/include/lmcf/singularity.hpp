#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lmcf/density.hpp"
#include "lmcf/flow.hpp"
#include "lmcf/verify.hpp"

namespace lmcf {

/// Singular time from the tail of the trace, where 1/U_t is close to linear.
struct SingularTimeEstimate {
  bool blow_up = false;
  double T_est = 0.0;
  double uncertainty = 0.0;
  double fit_quality = 0.0;  // R^2 of the tail fit
  bool fallback = false;     // fit too poor: T_est = last t + dt_floor
  double T_tail = 0.0;       // intercept of the whole tail
  double T_upper = 0.0;      // intercept of the upper half of the tail (in log U)
  double u_threshold = 0.0;  // tail = rows with U >= this
  int tail_rows = 0;
  /// Rows with T_est - t below this are not resolved: 20 uncertainties.
  double resolution = 0.0;
};

/// Tail: rows with U >= 100 median(U). The whole tail is fitted by least
/// squares of 1/U against t, then again on the rows with U above the
/// geometric mean of the tail's U range; the refit gives T_est. The
/// uncertainty is the larger of the residual-based standard error, the gap
/// between the two intercepts and the last step size.
SingularTimeEstimate estimate_T(const FlowTrace& trace, const TerminationEvent& event, double dt_floor = 1e-12);

enum class SingularityType { kTypeI, kTypeII, kIndeterminate, kNoSingularity };

std::string type_name(SingularityType type);

struct QSample {
  double t = 0.0;
  double tau = 0.0;  // T_est - t
  double q = 0.0;    // tau U_t
};

struct Classification {
  SingularityType type = SingularityType::kNoSingularity;
  double c_est = 0.0;       // median Q on the resolved tail
  double q_max = 0.0;
  double q_mean = 0.0;
  double slope = 0.0;       // dQ / d ln(T - t) over the resolved tail
  double fine_slope = 0.0;  // same over the finest decade of T - t
  double c_max = 5.0;
  std::string evidence;
  std::vector<QSample> q;  // resolved tail
};

/// Type-I: Q <= c_max and |slope| <= 0.05 mean Q. Type-II (reported as "not
/// Type-I at resolved scales"): Q exceeds c_max and still grows over the
/// finest resolved decade, by at least 1% of mean Q per e-fold of T - t.
/// Anything else is indeterminate.
Classification classify(const FlowTrace& trace, const SingularTimeEstimate& estimate, double c_max = 5.0);

struct SpectrumCluster {
  double center = 0.0;            // circular mean, in [0, 2 pi)
  double unwrapped_center = 0.0;  // mean of the raw unwrapped angles
  double mass = 0.0;
  double spread = 0.0;            // weighted standard deviation about the centre
};

struct SpectrumOptions {
  double delta = 0.1;           // cluster gap
  double mass_threshold = 1e-3;  // bins below this fraction of the total are empty
  double r = std::numeric_limits<double>::infinity();  // cutoff radius
  bool require_resolved = true;
};

struct Spectrum {
  std::vector<SpectrumCluster> clusters;
  double total_mass = 0.0;       // int phi rho over all components
  double unassigned_mass = 0.0;  // mass in bins outside every cluster
  double s = 0.0;
  bool rejected = false;
  std::string reason;
};

/// Gaussian-weighted histogram of theta mod 2 pi at the components' common
/// s, kernel centred at the origin. Bins of width delta / 4 carrying less
/// than the mass threshold are empty; runs of occupied bins separated by
/// empty arcs longer than delta form the clusters.
Spectrum extract_spectrum(std::span<const RescaledSnapshot> components, const SpectrumOptions& options = {});
Spectrum extract_spectrum(const RescaledSnapshot& snap, const SpectrumOptions& options = {});

/// int |F^perp|^2 phi rho / int phi rho on the rescaled curve.
double cone_alignment(const RescaledSnapshot& snap, double r = std::numeric_limits<double>::infinity());

/// Largest centre shift between matched clusters of two spectra (mod 2 pi).
/// Infinite when the cluster counts differ.
double spectrum_distance(const Spectrum& a, const Spectrum& b);

struct SpectrumLevel {
  double lambda = 0.0;
  double s = 0.0;
  double t = 0.0;
  int snapshot = -1;
  double cone_alignment = 0.0;
  double drift_magnitude = 0.0;
  Spectrum spectrum;
};

struct ReportOptions {
  double c_max = 5.0;
  double s = -1.0;
  int levels = 4;               // lambda_i = lambda_0 2^{-i}, i = 1..levels
  double alt_factor = 1.5;      // second sequence for the independence check
  std::optional<Complex> x0;    // rescaling centre override
  double dt_floor = 1e-12;
  SpectrumOptions spectrum;
};

struct SingularityReport {
  SingularTimeEstimate time;
  Classification classification;
  BlowupBound rate_bound;
  Complex x0{0.0, 0.0};
  double t_last_resolved = 0.0;
  double lambda0 = 0.0;
  std::vector<double> rescales_used;
  std::vector<SpectrumLevel> levels;      // primary sequence
  std::vector<SpectrumLevel> alt_levels;  // alt_factor times the primary
  Spectrum spectrum;                      // finest accepted primary level
  double cone_alignment = 0.0;
  double spectrum_stability = 0.0;        // max centre shift across both sequences
  int maslov = 0;
  bool spectrum_rejected = false;
  std::string spectrum_reason;
};

/// Weighted centroid (weight k^2 dual) of the vertices with k^2 at least half
/// the maximum.
Complex curvature_centroid(const ImmersedCurve& curve, const AmbientSpace& space);

/// Index of the snapshot closest in time to t, or -1 when there is none.
int nearest_snapshot(const std::vector<Snapshot>& snapshots, double t);

/// Runs estimate_T, classify and the blow-up bound, then rescales around X0
/// at lambda_0 2^{-i} and at alt_factor times that sequence and extracts the
/// spectrum at the configured s. A run that did not blow up yields a minimal
/// report with the NoSingularity verdict.
SingularityReport report(const FlowResult& result, const AmbientSpace& space, const ReportOptions& options = {});

}  // namespace lmcf
