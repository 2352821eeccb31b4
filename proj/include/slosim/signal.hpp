#pragma once

#include <cmath>

namespace slosim {

// Logistic trend g(t) = C / (1 + exp(-k (t - m))); g(offset) == capacity / 2.
struct TrendParams {
  double capacity = 0.0;    // C, requests per interval
  double growth_rate = 0.0; // k, 1 / interval
  double offset = 0.0;      // m, intervals
};

inline double logistic_trend(const TrendParams& p, double t) {
  return p.capacity / (1.0 + std::exp(-p.growth_rate * (t - p.offset)));
}

// One sinusoidal component: a cos(2 pi t / period) + b sin(2 pi t / period).
struct Harmonic {
  double period = 0.0;  // intervals
  double cos_coeff = 0.0;
  double sin_coeff = 0.0;
};

inline double harmonic_value(const Harmonic& h, double t) {
  double w = 2.0 * M_PI * t / h.period;
  return h.cos_coeff * std::cos(w) + h.sin_coeff * std::sin(w);
}

}  // namespace slosim
