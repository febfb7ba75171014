#include "atcor/evaluate/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace atcor::evaluate::svg {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Frame {
  double x0, x1, y0, y1;  // data range
  int left = 70, right = 20, top = 40, bottom = 50;
  int width = 0, height = 0;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

void widen(double& lo, double& hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) lo = 0.0, hi = 1.0;
  if (hi <= lo) hi = lo + 1.0;
}

void axes(std::ostringstream& o, const Frame& f, const std::string& title, const std::string& xl,
          const std::string& yl) {
  o << "<rect width=\"" << f.width << "\" height=\"" << f.height << "\" fill=\"white\"/>\n";
  o << "<text x=\"" << f.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << esc(title)
    << "</text>\n";
  const int bx = f.left, by = f.height - f.bottom;
  o << "<line x1=\"" << bx << "\" y1=\"" << by << "\" x2=\"" << f.width - f.right << "\" y2=\"" << by
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << bx << "\" y1=\"" << f.top << "\" x2=\"" << bx << "\" y2=\"" << by << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double yv = f.y0 + (f.y1 - f.y0) * i / 4.0;
    o << "<text x=\"" << bx - 6 << "\" y=\"" << fmt(f.py(yv) + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
      << fmt(yv) << "</text>\n";
    if (!xl.empty()) {
      const double xv = f.x0 + (f.x1 - f.x0) * i / 4.0;
      o << "<text x=\"" << fmt(f.px(xv)) << "\" y=\"" << by + 16 << "\" text-anchor=\"middle\" font-size=\"11\">"
        << fmt(xv) << "</text>\n";
    }
  }
  o << "<text x=\"" << f.width / 2 << "\" y=\"" << f.height - 8 << "\" text-anchor=\"middle\" font-size=\"12\">"
    << esc(xl) << "</text>\n";
  o << "<text x=\"14\" y=\"" << f.height / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 "
    << f.height / 2 << ")\">" << esc(yl) << "</text>\n";
}

void legend(std::ostringstream& o, const Frame& f, std::span<const Series> series) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    const int y = f.top + 14 * static_cast<int>(i);
    o << "<rect x=\"" << f.width - f.right - 150 << "\" y=\"" << y << "\" width=\"10\" height=\"10\" fill=\""
      << kPalette[i % 7] << "\"/>\n";
    o << "<text x=\"" << f.width - f.right - 135 << "\" y=\"" << y + 9 << "\" font-size=\"11\">"
      << esc(series[i].label) << "</text>\n";
  }
}

std::string open(int w, int h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(h) + "\" font-family=\"sans-serif\">\n";
}

}  // namespace

std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       std::span<const Series> series, int width, int height) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      x0 = std::min(x0, s.x[i]), x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]), y1 = std::max(y1, s.y[i]);
    }
  widen(x0, x1);
  widen(y0, y1);
  y0 = std::min(y0, 0.0);
  Frame f{x0, x1, y0, y1};
  f.width = width, f.height = height;
  std::ostringstream o;
  o << open(width, height);
  axes(o, f, title, x_label, y_label);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.points) {
      for (std::size_t i = 0; i < n; ++i)
        o << "<circle cx=\"" << fmt(f.px(s.x[i])) << "\" cy=\"" << fmt(f.py(s.y[i])) << "\" r=\"2.5\" fill=\""
          << kPalette[k % 7] << "\" fill-opacity=\"0.6\"/>\n";
    } else {
      o << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << kPalette[k % 7] << "\" points=\"";
      for (std::size_t i = 0; i < n; ++i) o << fmt(f.px(s.x[i])) << "," << fmt(f.py(s.y[i])) << " ";
      o << "\"/>\n";
    }
  }
  legend(o, f, series);
  o << "</svg>\n";
  return o.str();
}

std::string bar_chart(const std::string& title, const std::string& y_label, std::span<const std::string> categories,
                      std::span<const Series> series, int width, int height) {
  double y1 = 0.0;
  for (const auto& s : series)
    for (double v : s.y) y1 = std::max(y1, v);
  double y0 = 0.0;
  widen(y0, y1);
  Frame f{0.0, static_cast<double>(std::max<std::size_t>(categories.size(), 1)), y0, y1};
  f.width = width, f.height = height, f.bottom = 90;
  std::ostringstream o;
  o << open(width, height);
  axes(o, f, title, "", y_label);
  const double group = (f.px(1.0) - f.px(0.0));
  const double bar = group * 0.8 / static_cast<double>(std::max<std::size_t>(series.size(), 1));
  for (std::size_t c = 0; c < categories.size(); ++c) {
    for (std::size_t k = 0; k < series.size(); ++k) {
      const double v = c < series[k].y.size() ? series[k].y[c] : 0.0;
      const double x = f.px(static_cast<double>(c)) + group * 0.1 + bar * static_cast<double>(k);
      o << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(f.py(v)) << "\" width=\"" << fmt(bar) << "\" height=\""
        << fmt(f.py(0.0) - f.py(v)) << "\" fill=\"" << kPalette[k % 7] << "\"/>\n";
    }
    const double cx = f.px(static_cast<double>(c) + 0.5);
    const double cy = height - f.bottom + 12;
    o << "<text x=\"" << fmt(cx) << "\" y=\"" << fmt(cy) << "\" font-size=\"10\" text-anchor=\"end\" transform=\"rotate(-40 "
      << fmt(cx) << " " << fmt(cy) << ")\">" << esc(categories[c]) << "</text>\n";
  }
  legend(o, f, series);
  o << "</svg>\n";
  return o.str();
}

std::string grid_image(const std::string& title, int rows, int cols, std::span<const double> values, int cell) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values) lo = std::min(lo, v), hi = std::max(hi, v);
  widen(lo, hi);
  const int w = cols * cell + 40, h = rows * cell + 70;
  std::ostringstream o;
  o << open(w, h);
  o << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
  o << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << esc(title) << "</text>\n";
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double v = values[static_cast<std::size_t>(r * cols + c)];
      const double t = (v - lo) / (hi - lo);
      const int red = static_cast<int>(255 * t), blue = static_cast<int>(255 * (1.0 - t));
      o << "<rect x=\"" << 20 + c * cell << "\" y=\"" << 40 + r * cell << "\" width=\"" << cell << "\" height=\""
        << cell << "\" fill=\"rgb(" << red << ",60," << blue << ")\"><title>" << fmt(v) << "</title></rect>\n";
    }
  o << "<text x=\"20\" y=\"" << h - 10 << "\" font-size=\"11\">min " << fmt(lo) << ", max " << fmt(hi)
    << "</text>\n";
  o << "</svg>\n";
  return o.str();
}

}  // namespace atcor::evaluate::svg
