#include "svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace edc::cli {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 160, kTop = 40, kBottom = 60;
const char* const kColors[] = {"#c0392b", "#1f1f1f", "#2471a3", "#229954", "#8e44ad", "#d68910"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

}  // namespace

std::string line_plot_svg(const std::vector<PlotSeries>& series, const std::string& title,
                          const std::string& x_label, const std::string& y_label, const std::string& comment) {
  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        x_min = x_max = s.x[i];
        first = false;
      }
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  }
  if (x_max == x_min) x_max = x_min + 1;
  y_min = std::floor(y_min * 10.0) / 10.0;
  y_max = std::ceil(y_max * 10.0) / 10.0;
  if (y_max == y_min) y_max = y_min + 0.1;

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) { return kTop + (y_max - y) / (y_max - y_min) * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  if (!comment.empty()) svg << "<!-- " << escape(comment) << " -->\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << fmt(kLeft + plot_w / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"15\">" << escape(title) << "</text>\n";
  svg << "<g stroke=\"#444\" stroke-width=\"1\" fill=\"none\">\n"
      << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(kTop + plot_h) << "\" x2=\"" << fmt(kLeft + plot_w)
      << "\" y2=\"" << fmt(kTop + plot_h) << "\"/>\n"
      << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(kTop) << "\" x2=\"" << fmt(kLeft) << "\" y2=\""
      << fmt(kTop + plot_h) << "\"/>\n</g>\n";

  svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#222\">\n";
  const long x_lo = static_cast<long>(std::ceil(x_min)), x_hi = static_cast<long>(std::floor(x_max));
  for (long x = x_lo; x <= x_hi; ++x) {
    svg << "<text x=\"" << fmt(px(static_cast<double>(x))) << "\" y=\"" << fmt(kTop + plot_h + 16)
        << "\" text-anchor=\"middle\">" << x << "</text>\n";
  }
  const int y_steps = static_cast<int>(std::lround((y_max - y_min) / 0.1));
  const int y_stride = std::max(1, y_steps / 10);
  for (int t = 0; t <= y_steps; t += y_stride) {
    const double y = y_min + 0.1 * t;
    svg << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(py(y) + 4) << "\" text-anchor=\"end\">" << fmt(y)
        << "</text>\n";
  }
  svg << "<text x=\"" << fmt(kLeft + plot_w / 2) << "\" y=\"" << fmt(kHeight - 18) << "\" text-anchor=\"middle\">"
      << escape(x_label) << "</text>\n";
  svg << "<text x=\"18\" y=\"" << fmt(kTop + plot_h / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << fmt(kTop + plot_h / 2) << ")\">" << escape(y_label) << "</text>\n</g>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kColors[s % (sizeof kColors / sizeof kColors[0])];
    svg << "<g class=\"series\" data-label=\"" << escape(series[s].label) << "\">\n<polyline fill=\"none\" stroke=\""
        << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      svg << (i ? " " : "") << fmt(px(series[s].x[i])) << ',' << fmt(py(series[s].y[i]));
    }
    svg << "\"/>\n";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      svg << "<circle cx=\"" << fmt(px(series[s].x[i])) << "\" cy=\"" << fmt(py(series[s].y[i]))
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    }
    const double ly = kTop + 14 + 18 * static_cast<double>(s);
    svg << "<line x1=\"" << fmt(kWidth - kRight + 14) << "\" y1=\"" << fmt(ly) << "\" x2=\""
        << fmt(kWidth - kRight + 34) << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << fmt(kWidth - kRight + 40) << "\" y=\"" << fmt(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(series[s].label) << "</text>\n</g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace edc::cli
