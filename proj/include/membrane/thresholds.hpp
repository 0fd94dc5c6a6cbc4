#pragma once

// Verdict thresholds of every experiment, kept in one place so that stored
// raw series can be re-judged without re-solving.

#include <cmath>

namespace membrane::thresholds {

// energy-table
inline constexpr double kRatioTolerance = 1e-3;     // |W_k/W0 - ratio_k|
inline constexpr double kSpreadTolerance = 1e-3;    // max - min over random specs
inline constexpr double kW0AnchorTolerance = 1e-4;  // |W0 - 1/6| in 1D

// clog-width and generic-regular
inline constexpr double kLogBand = 4.0;  // max/min of width * (-ln r) / r
inline constexpr int kMinScales = 4;     // dyadic radii >= kMinRadiusCells * h
inline constexpr double kMinRadiusCells = 8.0;

/// width / r counts as constant when its max/min stays below the geometric
/// midpoint between the two hypotheses: a linear width gives ratio 1, an
/// r / |ln r| width gives |ln r_min| / |ln r_max|.
inline double constant_band(double r_min, double r_max) {
  return std::sqrt(std::log(r_min) / std::log(r_max));
}

// aux-function
inline constexpr double kAuxConstantTolerance = 1e-8;
inline constexpr double kRemainderBand = 10.0;

// obstacle-flatness: fitted decay exponent of the graph flatness must exceed this.
inline constexpr double kObstacleMinExponent = 0.0;

}  // namespace membrane::thresholds
