#pragma once

#include <cmath>
#include <numbers>

namespace idm::normal {

inline double pdf(double z) {
  if (std::isinf(z)) return 0.0;
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

/// Standard normal CDF.
inline double cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Upper tail 1 - cdf(z) without cancellation.
inline double sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

/// P(lo < Z <= hi) for a standard normal Z, evaluated in whichever tail
/// avoids subtractive cancellation.
inline double interval_mass(double lo, double hi) {
  if (lo >= 0.0) return sf(lo) - sf(hi);
  if (hi <= 0.0) return cdf(hi) - cdf(lo);
  return 1.0 - cdf(lo) - sf(hi);
}

/// Inverse standard normal CDF (Wichura, AS 241, PPND16; ~1e-16 relative).
double quantile(double p);

}  // namespace idm::normal
