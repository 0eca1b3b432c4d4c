#include <algorithm>
#include <cstdio>
#include <sstream>

#include "gridlayout/io.hpp"

namespace gridlayout {
namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", x);
  std::string s = buf;
  s.erase(s.find_last_not_of('0') + 1);
  if (s.back() == '.') s.pop_back();
  return s == "-0" ? "0" : s;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string hex(const Rgb& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

// Distinct coordinates; values within `tol` of their neighbour share a line.
std::vector<double> lines(std::vector<double> v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || x - out.back() > tol) out.push_back(x);
  return out;
}

void panel(std::ostringstream& out, const LayoutProblem& p, const LayoutSolution& s, const SvgStyle& style,
           double dx) {
  const double k = style.scale;
  out << "  <g transform=\"translate(" << fmt(dx) << " 0)\">\n";
  out << "    <path class=\"canvas\" d=\"M0 0H" << fmt(p.canvas.width * k) << "V" << fmt(p.canvas.height * k) << "H0Z\""
      << " fill=\"#ffffff\" stroke=\"#cccccc\"/>\n";
  for (const auto& pe : s.placements) {
    const auto idx = p.index_of(pe.id);
    const Rgb color = idx ? p.elements[*idx].color : Rgb{};
    out << "    <rect class=\"element\" data-id=\"" << escape(pe.id) << "\" x=\"" << fmt(pe.l * k) << "\" y=\""
        << fmt(pe.t * k) << "\" width=\"" << fmt(pe.width() * k) << "\" height=\"" << fmt(pe.height() * k)
        << "\" fill=\"" << hex(color) << "\" stroke=\"#333333\"/>\n";
    out << "    <text x=\"" << fmt((pe.l + 4) * k) << "\" y=\"" << fmt((pe.t + 14) * k)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(pe.id) << "</text>\n";
  }
  if (style.overlay && !s.placements.empty()) {
    const double tol = geometric_tolerance(p.canvas);
    std::vector<double> xs, ys;
    for (const auto& pe : s.placements) {
      xs.insert(xs.end(), {pe.l, pe.r});
      ys.insert(ys.end(), {pe.t, pe.b});
    }
    for (double x : lines(xs, tol))
      out << "    <line class=\"grid\" x1=\"" << fmt(x * k) << "\" y1=\"0\" x2=\"" << fmt(x * k) << "\" y2=\""
          << fmt(p.canvas.height * k) << "\" stroke=\"#d62728\" stroke-dasharray=\"4 3\"/>\n";
    for (double y : lines(ys, tol))
      out << "    <line class=\"grid\" x1=\"0\" y1=\"" << fmt(y * k) << "\" x2=\"" << fmt(p.canvas.width * k)
          << "\" y2=\"" << fmt(y * k) << "\" stroke=\"#d62728\" stroke-dasharray=\"4 3\"/>\n";
    const double l = *std::min_element(xs.begin(), xs.end()), r = *std::max_element(xs.begin(), xs.end());
    const double t = *std::min_element(ys.begin(), ys.end()), b = *std::max_element(ys.begin(), ys.end());
    out << "    <path class=\"outline\" d=\"M" << fmt(l * k) << " " << fmt(t * k) << "H" << fmt(r * k) << "V"
        << fmt(b * k) << "H" << fmt(l * k) << "Z\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n";
  }
  out << "  </g>\n";
}

}  // namespace

std::string render_svg(const LayoutProblem& p, const LayoutSolution& s, const SvgStyle& style) {
  return render_gallery(p, {s}, style);
}

std::string render_gallery(const LayoutProblem& p, const std::vector<LayoutSolution>& solutions,
                           const SvgStyle& style) {
  const double w = p.canvas.width * style.scale, h = p.canvas.height * style.scale;
  const double n = static_cast<double>(std::max<std::size_t>(solutions.size(), 1));
  const double total = w * n + style.spacing * (n - 1);
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(total) << "\" height=\"" << fmt(h)
      << "\" viewBox=\"0 0 " << fmt(total) << " " << fmt(h) << "\">\n";
  for (std::size_t i = 0; i < solutions.size(); ++i) panel(out, p, solutions[i], style, i * (w + style.spacing));
  out << "</svg>\n";
  return out.str();
}

}  // namespace gridlayout
