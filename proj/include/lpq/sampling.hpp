#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "lpq/model.hpp"

namespace lpq {

using Rng = std::mt19937_64;

/// Uniformly distributed direction on the unit sphere of R^{rows x cols}.
inline GradMat random_direction(Rng& rng, int rows, int cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  GradMat z(rows, cols);
  do {
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = normal(rng);
  } while (z.norm() == 0.0);
  return z / z.norm();
}

/// Uniform sample from the ball of the given radius.
inline GradMat random_in_ball(Rng& rng, int rows, int cols, double radius) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const GradMat dir = random_direction(rng, rows, cols);
  const double r = radius * std::pow(unit(rng), 1.0 / static_cast<double>(rows * cols));
  return r * dir;
}

/// Log-uniform norm in [r_min, r_max], uniform direction.
inline GradMat random_log_uniform(Rng& rng, int rows, int cols, double r_min, double r_max) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const GradMat dir = random_direction(rng, rows, cols);
  const double r = r_min * std::pow(r_max / r_min, unit(rng));
  return r * dir;
}

}  // namespace lpq
