#include "lmcf/presets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "lmcf/errors.hpp"

namespace lmcf {

CurvePreset parse_preset(const std::string& name) {
  if (name == "circle") return CurvePreset::kCircle;
  if (name == "ellipse") return CurvePreset::kEllipse;
  if (name == "figure_eight") return CurvePreset::kFigureEight;
  if (name == "perturbed_figure_eight") return CurvePreset::kPerturbedFigureEight;
  if (name == "custom") return CurvePreset::kCustom;
  throw ConfigError(0, "unknown curve preset '" + name + "'");
}

std::string preset_name(CurvePreset p) {
  switch (p) {
    case CurvePreset::kCircle: return "circle";
    case CurvePreset::kEllipse: return "ellipse";
    case CurvePreset::kFigureEight: return "figure_eight";
    case CurvePreset::kPerturbedFigureEight: return "perturbed_figure_eight";
    case CurvePreset::kCustom: return "custom";
  }
  return "circle";
}

ImmersedCurve make_curve(const CurveSpec& spec) {
  ImmersedCurve curve;
  if (spec.preset == CurvePreset::kCustom) {
    curve.points = spec.custom_points;
    curve.period = spec.custom_period;
  } else {
    const int n = spec.vertices;
    if (n < ImmersedCurve::kMinVertices) {
      throw ConfigError(0, "N must be at least " + std::to_string(ImmersedCurve::kMinVertices));
    }
    const double r = spec.radius;
    const double a = spec.aspect;

    // Perturbation modes m = 1..perturb_mode with random phases, amplitudes 1/m.
    std::vector<double> phases;
    if (spec.preset == CurvePreset::kPerturbedFigureEight) {
      std::mt19937_64 rng(spec.seed);
      std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
      for (int m = 1; m <= spec.perturb_mode; ++m) phases.push_back(phase(rng));
    }

    curve.points.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      const double u = 2.0 * std::numbers::pi * j / n;
      Complex z;
      switch (spec.preset) {
        case CurvePreset::kCircle:
          z = r * Complex(std::cos(u), std::sin(u));
          break;
        case CurvePreset::kEllipse:
          z = Complex(r * std::cos(u), a * r * std::sin(u));
          break;
        case CurvePreset::kFigureEight:
        case CurvePreset::kPerturbedFigureEight:
          z = Complex(r * std::cos(u), a * r * std::sin(u) * std::cos(u));
          break;
        case CurvePreset::kCustom:
          break;
      }
      if (!phases.empty()) {
        const Complex d(-r * std::sin(u), a * r * std::cos(2.0 * u));
        const Complex normal = Complex(0.0, 1.0) * d / std::abs(d);
        double bump = 0.0;
        for (std::size_t m = 0; m < phases.size(); ++m) {
          const double mode = static_cast<double>(m + 1);
          bump += std::sin(mode * u + phases[m]) / mode;
        }
        z += spec.perturb_amp * r * bump * normal;
      }
      curve.points[static_cast<std::size_t>(j)] = z;
    }
  }
  if (spec.clockwise) std::reverse(curve.points.begin() + 1, curve.points.end());
  for (auto& z : curve.points) z += spec.center;
  curve.validate();
  return curve;
}

}  // namespace lmcf
