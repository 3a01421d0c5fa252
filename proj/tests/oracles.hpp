#pragma once

// Independent reference computations shared by the unit tests and the
// acceptance binary. Nothing here calls the Newton-based conjugate.

#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace oracle {

/// max over z in [-10, 10] (step 1e-4) of z xi - f(z).
inline double grid_conjugate_1d(const std::function<double(double)>& f, double xi) {
  double best = -1e300;
  for (long k = -100000; k <= 100000; ++k) {
    const double z = k * 1e-4;
    best = std::max(best, z * xi - f(z));
  }
  return best;
}

struct Max2d {
  double value;
  Eigen::Vector2d argmax;
};

/// Coarse grid over [-10, 10]^2 (step 0.02), then two local refinements down
/// to step 1e-4.
inline Max2d grid_conjugate_2d(const std::function<double(double, double)>& f, const Eigen::Vector2d& xi) {
  Max2d best{-1e300, Eigen::Vector2d::Zero()};
  auto scan = [&](Eigen::Vector2d center, double half, double step) {
    const long m = std::lround(half / step);
    const Eigen::Vector2d c = center;
    for (long i = -m; i <= m; ++i)
      for (long j = -m; j <= m; ++j) {
        const double x = c[0] + i * step, y = c[1] + j * step;
        const double v = x * xi[0] + y * xi[1] - f(x, y);
        if (v > best.value) best = {v, {x, y}};
      }
  };
  scan(Eigen::Vector2d::Zero(), 10.0, 0.02);
  scan(best.argmax, 0.04, 1e-3);
  scan(best.argmax, 0.002, 1e-4);
  return best;
}

/// Interior solution of the 5-point Laplacian with Dirichlet data g on the
/// (cells+1)^2 node grid, first axis fastest. Gauss-Seidel with SOR.
inline Eigen::VectorXd five_point_harmonic(int cells, const std::function<double(double, double)>& g) {
  const int m = cells + 1;
  const double h = 1.0 / cells;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(m * m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i)
      if (i == 0 || j == 0 || i == cells || j == cells) u[j * m + i] = g(i * h, j * h);
  const double omega = 2.0 / (1.0 + std::sin(M_PI * h));
  for (int sweep = 0; sweep < 20000; ++sweep) {
    double change = 0.0;
    for (int j = 1; j < cells; ++j)
      for (int i = 1; i < cells; ++i) {
        const int k = j * m + i;
        const double gs = 0.25 * (u[k - 1] + u[k + 1] + u[k - m] + u[k + m]);
        const double d = omega * (gs - u[k]);
        u[k] += d;
        change = std::max(change, std::abs(d));
      }
    if (change < 1e-15) break;
  }
  return u;
}

}  // namespace oracle
