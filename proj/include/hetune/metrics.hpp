#pragma once

#include <cmath>

#include "hetune/error.hpp"

namespace hetune {

// Prediction accuracy: measured vs. predicted execution time.
inline double absolute_error(double measured_s, double predicted_s) {
  return std::abs(measured_s - predicted_s);
}

inline double percent_error(double measured_s, double predicted_s) {
  if (!(measured_s > 0.0)) throw Error("percent error needs a positive measured time");
  return 100.0 * absolute_error(measured_s, predicted_s) / measured_s;
}

// Search quality: exhaustive optimum vs. the time a method achieved.
inline double absolute_difference(double optimum_s, double achieved_s) {
  return std::abs(optimum_s - achieved_s);
}

inline double percent_difference(double optimum_s, double achieved_s) {
  if (!(optimum_s > 0.0)) throw Error("percent difference needs a positive optimum time");
  return 100.0 * absolute_difference(optimum_s, achieved_s) / optimum_s;
}

}  // namespace hetune
