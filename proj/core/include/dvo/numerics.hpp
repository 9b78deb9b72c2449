#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dvo {

/// log(sum(exp(x_i))) with max-subtraction; stable for small temperatures.
double log_sum_exp(std::span<const double> xs);

/// softmax(x / temperature), max-subtracted. temperature must be positive.
std::vector<double> softmax_scaled(std::span<const double> xs,
                                   double temperature);

/// Numerically stable logistic sigmoid.
inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double z = std::exp(x);
  return z / (1.0 + z);
}

/// Index of the largest element; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> xs);

/// Shortest decimal form that round-trips the exact double (std::to_chars).
std::string format_double(double v);

}  // namespace dvo
