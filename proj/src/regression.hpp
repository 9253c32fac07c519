#pragma once

#include <cstddef>
#include <span>

namespace kickwell::detail {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double sse = 0.0;
  double r2 = 0.0;
};

// Ordinary least squares y = slope * x + intercept. R^2 is 1 for a
// constant response fitted exactly.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  LineFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    f.sse += r * r;
  }
  f.r2 = syy > 0.0 ? 1.0 - f.sse / syy : 1.0;
  if (f.r2 < 0.0) f.r2 = 0.0;
  return f;
}

}  // namespace kickwell::detail
