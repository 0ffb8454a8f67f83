#pragma once

// Reference computations used to check the library. Nothing here calls the
// code under test for the quantity being checked.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "acord/envs/shape.hpp"
#include "acord/envs/stroke.hpp"

namespace oracle {

#ifndef ACORD_SOURCE_DIR
#define ACORD_SOURCE_DIR "."
#endif

inline std::string source_path(const std::string& rel) { return std::string(ACORD_SOURCE_DIR) + "/" + rel; }

/// Central differences of f at x, one coordinate at a time.
inline Eigen::VectorXd central_differences(const std::function<double(const Eigen::VectorXd&)>& f,
                                           const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd p = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    p[i] = x[i] + h;
    const double up = f(p);
    p[i] = x[i] - h;
    const double down = f(p);
    p[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
inline double max_relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double floor = 1e-6) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

inline double point_segment_distance(const Eigen::Vector2d& q, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  // Dense parametric search, deliberately not the closed form.
  double best = std::numeric_limits<double>::infinity();
  constexpr int kSteps = 4000;
  for (int s = 0; s <= kSteps; ++s) {
    const double f = static_cast<double>(s) / kSteps;
    best = std::min(best, (a + f * (b - a) - q).norm());
  }
  return best;
}

/// Whether any painted cell center lies within tol of q, by scanning every cell.
inline bool covered_brute(const acord::StrokeRaster& r, const Eigen::Vector2d& q, double tol) {
  const int res = r.resolution();
  for (int j = 0; j < res; ++j) {
    for (int i = 0; i < res; ++i) {
      if (!r.painted(i, j)) continue;
      const double dx = r.center(i) - q.x();
      const double dy = r.center(j) - q.y();
      if (dx * dx + dy * dy <= tol * tol) return true;
    }
  }
  return false;
}

/// Points every `spacing` along the polyline, walking each segment separately.
inline std::vector<Eigen::Vector2d> walk_polyline(const acord::Shape& s, double spacing) {
  std::vector<Eigen::Vector2d> out{s.waypoints.front()};
  double carry = 0.0;
  for (std::size_t i = 1; i < s.waypoints.size(); ++i) {
    const Eigen::Vector2d a = s.waypoints[i - 1];
    const Eigen::Vector2d b = s.waypoints[i];
    const double len = (b - a).norm();
    double t = spacing - carry;
    while (t <= len) {
      out.push_back(a + (t / len) * (b - a));
      t += spacing;
    }
    carry = len - (t - spacing);
  }
  return out;
}

inline double covered_fraction_brute(const acord::StrokeRaster& r, const std::vector<Eigen::Vector2d>& pts,
                                     double tol) {
  std::size_t hit = 0;
  for (const auto& q : pts) hit += covered_brute(r, q, tol) ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(pts.size());
}

/// Spearman's rho for distinct values: 1 - 6 sum d^2 / (n (n^2 - 1)).
inline double spearman_distinct(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = x.size();
  auto rank = [n](const std::vector<double>& v) {
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t below = 0;
      for (std::size_t j = 0; j < n; ++j) below += v[j] < v[i] ? 1 : 0;
      r[i] = static_cast<double>(below + 1);
    }
    return r;
  };
  const auto rx = rank(x);
  const auto ry = rank(y);
  double d2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  const double nn = static_cast<double>(n);
  return 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
}

}  // namespace oracle
