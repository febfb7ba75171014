#pragma once

#include <span>
#include <string>
#include <vector>

// Minimal SVG charts for the --plots output.
namespace atcor::evaluate::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool points = false;  // scatter instead of a polyline
};

std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       std::span<const Series> series, int width = 900, int height = 420);

// One group of bars per category, one bar per series (series[i].y[category]).
std::string bar_chart(const std::string& title, const std::string& y_label, std::span<const std::string> categories,
                      std::span<const Series> series, int width = 900, int height = 420);

// rows x cols values, row 0 drawn at the top; blue (low) to red (high).
std::string grid_image(const std::string& title, int rows, int cols, std::span<const double> values, int cell = 36);

}  // namespace atcor::evaluate::svg
