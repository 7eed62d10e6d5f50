#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "lmcf/cli.hpp"

namespace lmcf::cli {

namespace {

constexpr double kPixels = 800.0;
constexpr double kLegend = 60.0;

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Hue wheel on theta mod 2 pi.
std::string theta_colour(double theta) {
  const double two_pi = 2.0 * std::numbers::pi;
  double h = std::fmod(theta, two_pi);
  if (h < 0.0) h += two_pi;
  return "hsl(" + fixed(h / two_pi * 360.0, 1) + ",80%,45%)";
}

struct Mapper {
  Complex center;
  double half;
  double x(Complex z) const { return (z.real() - center.real() + half) / (2.0 * half) * kPixels; }
  double y(Complex z) const { return (center.imag() - z.imag() + half) / (2.0 * half) * kPixels; }
};

std::string render(const std::vector<Complex>& points, const std::vector<double>& theta, bool closed, Complex period,
                   const Mapper& m, const std::string& legend) {
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kPixels << "\" height=\"" << kPixels + kLegend
    << "\" viewBox=\"0 0 " << kPixels << ' ' << kPixels + kLegend << "\">\n";
  o << "<rect x=\"0\" y=\"0\" width=\"" << kPixels << "\" height=\"" << kPixels << "\" fill=\"white\" stroke=\"#999\"/>\n";
  o << "<path fill=\"none\" stroke=\"#333\" stroke-width=\"1\" d=\"";
  for (std::size_t j = 0; j < points.size(); ++j) {
    o << (j == 0 ? "M" : " L") << fixed(m.x(points[j])) << ' ' << fixed(m.y(points[j]));
  }
  if (closed) {
    o << " Z";
  } else if (!points.empty()) {
    const Complex end = points.front() + period;
    o << " L" << fixed(m.x(end)) << ' ' << fixed(m.y(end));
  }
  o << "\"/>\n";
  for (std::size_t j = 0; j < points.size(); ++j) {
    o << "<circle cx=\"" << fixed(m.x(points[j])) << "\" cy=\"" << fixed(m.y(points[j])) << "\" r=\"1.5\" fill=\""
      << theta_colour(theta[j]) << "\"/>\n";
  }
  o << "<text x=\"10\" y=\"" << kPixels + 25 << "\" font-family=\"monospace\" font-size=\"14\">" << legend
    << "</text>\n";
  o << "<text x=\"10\" y=\"" << kPixels + 48
    << "\" font-family=\"monospace\" font-size=\"12\">dot colour: theta mod 2pi (hue)</text>\n";
  o << "</svg>\n";
  return o.str();
}

}  // namespace

std::string svg_frame(const ImmersedCurve& curve, const FrameData& frame, const SvgOptions& options) {
  const Mapper m{options.center, options.viewport > 0.0 ? options.viewport : 1.0};
  const std::string legend =
      "t = " + sci(options.t) + "   U_t = " + sci(options.u) + "   maslov = " + std::to_string(options.maslov);
  return render(curve.points, frame.theta, curve.closed(), curve.period, m, legend);
}

std::string svg_rescaled(const RescaledSnapshot& snap, double R) {
  const Mapper m{{0.0, 0.0}, R > 0.0 ? R : 1.0};
  const std::string legend = "lambda = " + sci(snap.lambda) + "   s = " + sci(snap.s) + "   t = " + sci(snap.t) +
                             "   maslov = " + std::to_string(snap.maslov);
  return render(snap.points, snap.theta, snap.period == Complex(0.0, 0.0), snap.period, m, legend);
}

}  // namespace lmcf::cli
