#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lmcf/ambient.hpp"

namespace lmcf {

/// Closed discrete immersed curve in C: a periodic vertex list plus flow time.
/// A non-zero `period` P makes it a translation-periodic curve instead, with
/// F_{j+N} = F_j + P; one period of a straight line is the usual example.
struct ImmersedCurve {
  static constexpr int kMinVertices = 16;

  std::vector<Complex> points;
  double t = 0.0;
  Complex period{0.0, 0.0};

  bool closed() const { return period == Complex(0.0, 0.0); }

  int size() const { return static_cast<int>(points.size()); }

  /// Throws GeometryError(kInvalidMesh) on too few vertices or a zero edge.
  void validate() const;

  std::vector<double> edge_lengths() const;
  double length() const;
  /// Smallest over largest edge length.
  double quality() const;
};

/// Per-vertex geometry. Normal convention: N = iT (left normal), so a
/// counter-clockwise circle has k = +1/R and H points toward the center.
struct FrameData {
  std::vector<Complex> tangent;
  std::vector<Complex> normal;
  std::vector<double> curvature;   // signed k
  std::vector<double> theta;       // unwrapped Lagrangian angle
  std::vector<double> a2;          // |A|^2 = k^2
  std::vector<Complex> mean_curvature;  // H = kN
  std::vector<Complex> drift;           // V = <grad psi, N> N
  std::vector<Complex> velocity;        // K = H - V
  std::vector<double> edge_length;      // l_j = |F_{j+1} - F_j|
  std::vector<double> dual_length;      // (l_{j-1} + l_j) / 2
  /// theta continued once around the curve from the last vertex back to vertex 0.
  double theta_closure = 0.0;
  int maslov = 0;

  int size() const { return static_cast<int>(tangent.size()); }
};

inline constexpr double kCuspTolerance = 0.01;

FrameData compute_frame(const ImmersedCurve& curve, const AmbientSpace& space);
/// Same, reusing the storage of `out`.
void compute_frame(const ImmersedCurve& curve, const AmbientSpace& space, FrameData& out);

/// K_j = (k_j - <grad psi(F_j), N_j>) N_j.
std::vector<Complex> generalized_mean_curvature_geometric(const FrameData& frame,
                                                          const ImmersedCurve& curve,
                                                          const AmbientSpace& space);

/// K_j = (d theta / ds)_j N_j from centred differences over arclength.
std::vector<Complex> generalized_mean_curvature_angle(const FrameData& frame);

/// (theta_closure - theta_0) / 2 pi, rounded; throws if the residual exceeds 0.01.
int maslov_index(const FrameData& frame);

struct SecondFundamentalDerivatives {
  std::vector<double> curvature_derivative;  // k_s
  std::vector<double> drift_scalar;          // V = <grad psi, N>
  std::vector<double> drift_second;          // V_{,11}
};

/// Arclength derivative of k and the second normal derivative of the drift.
/// With T, N the frame and psi the potential:
///   V_{,11} = D^3 psi(T,T,N) + k (D^2 psi(N,N) - 2 D^2 psi(T,T)) - k_s <grad psi, T> - k^2 V.
SecondFundamentalDerivatives second_fundamental_derivatives(const FrameData& frame,
                                                            const ImmersedCurve& curve,
                                                            const AmbientSpace& space);

/// Generalized mean curvature only, for time stepping. `out` is resized to
/// match `points`. Throws GeometryError like compute_frame. Returns max k^2.
double flow_velocity(std::span<const Complex> points, const AmbientSpace& space,
                     std::vector<Complex>& out, Complex period = {});

/// Product of two curves in C^2 with separable weight W1(z1) + W2(z2).
struct ProductLagrangian {
  ImmersedCurve first;
  ImmersedCurve second;
  AmbientSpace first_space;
  AmbientSpace second_space;
};

struct ProductFrame {
  int rows = 0;
  int cols = 0;
  std::vector<double> theta;  // row-major theta(u_i, v_j)
  int maslov = 0;

  double at(int i, int j) const { return theta[static_cast<std::size_t>(i * cols + j)]; }
};

ProductFrame product_frame(const ProductLagrangian& p);

// Centred differences over arclength with periodic indexing; f_{j+N} = f_j + jump
// (jump = 2 pi maslov for the unwrapped angle).
std::vector<double> arclength_derivative(std::span<const double> f, std::span<const double> edge,
                                         double jump = 0.0);
/// Delta f_j = 2((f_{j+1}-f_j)/l_j - (f_j-f_{j-1})/l_{j-1}) / (l_j + l_{j-1}).
std::vector<double> arclength_laplacian(std::span<const double> f, std::span<const double> edge,
                                        double jump = 0.0);

}  // namespace lmcf
