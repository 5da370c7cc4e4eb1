#pragma once

// Test-only reference computations. Nothing here calls into the library's
// numerical code paths.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

namespace oracle {

/// Adaptive Simpson quadrature with Richardson correction.
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 40) {
  struct Rec {
    static double run(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                      double whole, double tol, int depth) {
      const double m = 0.5 * (a + b);
      const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      const double flm = f(lm), frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      const double delta = left + right - whole;
      if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
      return run(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + run(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    }
  };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  return Rec::run(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, depth);
}

inline double normal_density(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

/// (E[θ | lo < θ ≤ hi], P(lo < θ ≤ hi)) for θ ~ N(mu, sigma²) by quadrature.
/// Infinite ends are truncated 40 sigma out, far below double resolution.
inline std::pair<double, double> truncated_moments(double lo, double hi, double mu, double sigma) {
  const double a = std::isinf(lo) ? mu - 40.0 * sigma : lo;
  const double b = std::isinf(hi) ? mu + 40.0 * sigma : hi;
  // Panels no wider than sigma / 4 so adaptive refinement never skips the bulk.
  auto integrate = [&](const std::function<double(double)>& f) {
    const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / (0.25 * sigma))));
    const double w = (b - a) / panels;
    double sum = 0.0;
    for (int i = 0; i < panels; ++i) sum += simpson(f, a + i * w, i + 1 == panels ? b : a + (i + 1) * w, 1e-15);
    return sum;
  };
  const double mass = integrate([&](double x) { return normal_density(x, mu, sigma); });
  const double first = integrate([&](double x) { return (x - mu) * normal_density(x, mu, sigma); });
  return {mu + first / mass, mass};
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Brute-force minimizer of f over a 2-D grid, refined by successive zooms.
inline std::pair<double, double> grid_minimize(const std::function<double(double, double)>& f, double x_lo,
                                               double x_hi, double y_lo, double y_hi, int steps = 200, int zooms = 6) {
  double bx = x_lo, by = y_lo, best = std::numeric_limits<double>::infinity();
  for (int z = 0; z < zooms; ++z) {
    const double dx = (x_hi - x_lo) / steps, dy = (y_hi - y_lo) / steps;
    for (int i = 0; i <= steps; ++i)
      for (int j = 0; j <= steps; ++j) {
        const double x = x_lo + i * dx, y = y_lo + j * dy;
        const double v = f(x, y);
        if (v < best) {
          best = v;
          bx = x;
          by = y;
        }
      }
    x_lo = bx - 4 * dx;
    x_hi = bx + 4 * dx;
    y_lo = by - 4 * dy;
    y_hi = by + 4 * dy;
  }
  return {bx, by};
}

/// Central-difference derivative of a scalar function along one coordinate.
inline double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace oracle
