#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmcf/curve.hpp"

namespace lmcf {

enum class CurvePreset { kCircle, kEllipse, kFigureEight, kPerturbedFigureEight, kCustom };

/// Parameters of the `[curve]` section.
struct CurveSpec {
  CurvePreset preset = CurvePreset::kCircle;
  double radius = 1.0;   // R: overall scale
  double aspect = 1.0;   // a: vertical stretch
  int vertices = 256;    // N
  double perturb_amp = 0.0;
  int perturb_mode = 3;
  std::uint64_t seed = 0;
  bool clockwise = false;
  Complex center{0.0, 0.0};
  std::vector<Complex> custom_points;
  Complex custom_period{0.0, 0.0};  // non-zero: translation-periodic custom curve

  bool operator==(const CurveSpec&) const = default;
};

CurvePreset parse_preset(const std::string& name);
std::string preset_name(CurvePreset p);

/// Samples the preset at N parameter values u_j = 2 pi j / N.
///   circle        R e^{iu}
///   ellipse       (R cos u, a R sin u)
///   figure_eight  (R cos u, a R sin u cos u)   (Gerono lemniscate)
///   perturbed     figure_eight displaced along its normal by
///                 amp R sum_m c_m sin(m u + phi_m), phases drawn from `seed`
ImmersedCurve make_curve(const CurveSpec& spec);

}  // namespace lmcf
