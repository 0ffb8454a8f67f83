#pragma once

// Painting scores (coverage and alignment-tolerant consistency) and the
// behavior-manifold sweep.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <vector>

#include "acord/envs/shape.hpp"
#include "acord/envs/stroke.hpp"
#include "acord/error.hpp"
#include "acord/kspace.hpp"
#include "acord/sac.hpp"
#include "acord/trainer.hpp"

namespace acord {

struct MetricsConfig {
  double tolerance = 0.02;  // stroke half-width at full pressure
  int resolution = 512;
  double shift_max = 0.05;
  double shift_step = 0.005;
  double rotation_max = 5.0 * std::numbers::pi / 180.0;
  double rotation_step = 0.5 * std::numbers::pi / 180.0;

  void validate() const {
    if (!(tolerance > 0.0)) throw ConfigError("metrics.tolerance must be > 0");
    if (resolution < 1) throw ConfigError("metrics.resolution must be >= 1");
    if (!(shift_max >= 0.0) || !(shift_step > 0.0)) throw ConfigError("metrics shift grid is invalid");
    if (!(rotation_max >= 0.0) || !(rotation_step > 0.0)) throw ConfigError("metrics rotation grid is invalid");
  }
};

/// Symmetric grid {-max, ..., 0, ..., +max}; always contains 0 exactly.
inline std::vector<double> symmetric_grid(double max, double step) {
  const auto half = static_cast<int>(std::floor(max / step + 1e-9));
  std::vector<double> out;
  for (int i = -half; i <= half; ++i) out.push_back(i * step);
  return out;
}

/// Squared Euclidean distance (in cells) from each cell to the nearest painted
/// cell. Exact separable transform over lower envelopes of parabolas.
class DistanceField {
 public:
  explicit DistanceField(const StrokeRaster& raster) : res_(raster.resolution()) {
    const auto n = static_cast<std::size_t>(res_);
    const double inf = std::numeric_limits<double>::infinity();
    d2_.assign(n * n, inf);
    std::vector<double> f(n);
    std::vector<double> out(n);
    // Along x for each row.
    for (int j = 0; j < res_; ++j) {
      for (int i = 0; i < res_; ++i) f[i] = raster.painted(i, j) ? 0.0 : inf;
      transform_1d(f, out);
      for (int i = 0; i < res_; ++i) d2_[idx(i, j)] = out[i];
    }
    // Then along y for each column.
    for (int i = 0; i < res_; ++i) {
      for (int j = 0; j < res_; ++j) f[j] = d2_[idx(i, j)];
      transform_1d(f, out);
      for (int j = 0; j < res_; ++j) d2_[idx(i, j)] = out[j];
    }
  }

  int resolution() const { return res_; }
  double squared_cells(int i, int j) const { return d2_[idx(i, j)]; }
  bool any() const { return res_ > 0 && std::isfinite(d2_.front()); }

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(j) * res_ + i; }

  static void transform_1d(const std::vector<double>& f, std::vector<double>& d) {
    const int n = static_cast<int>(f.size());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<int> v(static_cast<std::size_t>(n));
    std::vector<double> z(static_cast<std::size_t>(n) + 1);
    int k = -1;
    for (int q = 0; q < n; ++q) {
      if (!std::isfinite(f[q])) continue;
      if (k < 0) {
        k = 0;
        v[0] = q;
        z[0] = -inf;
        z[1] = inf;
        continue;
      }
      double s = 0.0;
      while (true) {
        const int r = v[k];
        s = ((f[q] + double(q) * q) - (f[r] + double(r) * r)) / (2.0 * (q - r));
        if (s <= z[k] && k > 0) {
          --k;
        } else {
          break;
        }
      }
      if (s <= z[k]) {  // k == 0 and the new parabola dominates everywhere
        v[0] = q;
        z[0] = -inf;
        z[1] = inf;
        continue;
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = inf;
    }
    if (k < 0) {
      std::fill(d.begin(), d.end(), inf);
      return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
      while (z[j + 1] < q) ++j;
      const double dq = q - v[j];
      d[q] = dq * dq + f[v[j]];
    }
  }

  int res_ = 0;
  std::vector<double> d2_;
};

/// Answers "is there a painted cell center within tol of point q".
class CoverageOracle {
 public:
  CoverageOracle(const StrokeRaster& raster, double tolerance)
      : raster_(raster), field_(raster), tol_(tolerance), cell_(raster.cell_size()) {}

  bool covered(const Eigen::Vector2d& q) const {
    if (!field_.any()) return false;
    const int res = raster_.resolution();
    const int ci = std::clamp(static_cast<int>(std::floor(q.x() * res)), 0, res - 1);
    const int cj = std::clamp(static_cast<int>(std::floor(q.y() * res)), 0, res - 1);
    // Distance from q to its reference cell center bounds the error of using
    // the cell's transform value.
    const double off = std::hypot(q.x() - raster_.center(ci), q.y() - raster_.center(cj));
    const double d = std::sqrt(field_.squared_cells(ci, cj)) * cell_;
    if (d + off <= tol_) return true;
    if (d - off > tol_) return false;
    return brute(q);
  }

 private:
  bool brute(const Eigen::Vector2d& q) const {
    const int res = raster_.resolution();
    const int i0 = std::max(0, static_cast<int>(std::floor((q.x() - tol_) * res)));
    const int i1 = std::min(res - 1, static_cast<int>(std::floor((q.x() + tol_) * res)));
    const int j0 = std::max(0, static_cast<int>(std::floor((q.y() - tol_) * res)));
    const int j1 = std::min(res - 1, static_cast<int>(std::floor((q.y() + tol_) * res)));
    const double t2 = tol_ * tol_;
    for (int j = j0; j <= j1; ++j) {
      const double dy = raster_.center(j) - q.y();
      for (int i = i0; i <= i1; ++i) {
        if (!raster_.painted(i, j)) continue;
        const double dx = raster_.center(i) - q.x();
        if (dx * dx + dy * dy <= t2) return true;
      }
    }
    return false;
  }

  const StrokeRaster& raster_;
  DistanceField field_;
  double tol_;
  double cell_;
};

/// Points along the template polyline spaced at most `spacing` apart,
/// endpoints included.
inline std::vector<Eigen::Vector2d> sample_polyline(const Shape& shape, double spacing) {
  if (shape.waypoints.size() < 2) throw ConfigError("template '" + shape.name + "' needs at least 2 waypoints");
  std::vector<Eigen::Vector2d> out;
  out.push_back(shape.waypoints.front());
  for (std::size_t i = 1; i < shape.waypoints.size(); ++i) {
    const Eigen::Vector2d a = shape.waypoints[i - 1];
    const Eigen::Vector2d b = shape.waypoints[i];
    const int pieces = std::max(1, static_cast<int>(std::ceil((b - a).norm() / spacing)));
    for (int s = 1; s <= pieces; ++s) out.push_back(a + (b - a) * (static_cast<double>(s) / pieces));
  }
  return out;
}

inline double covered_fraction(const CoverageOracle& oracle, const std::vector<Eigen::Vector2d>& samples) {
  std::size_t hit = 0;
  for (const auto& q : samples) hit += oracle.covered(q) ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(samples.size());
}

/// Fraction of the template polyline with painted cells within tol.
inline double coverage(const StrokeRaster& raster, const Shape& tmpl, double tol) {
  const auto samples = sample_polyline(tmpl, 0.5 * raster.cell_size());
  const CoverageOracle oracle(raster, tol);
  return covered_fraction(oracle, samples);
}

struct RigidShift {
  double dx = 0.0;
  double dy = 0.0;
  double dtheta = 0.0;  // radians, about the canvas center

  bool operator==(const RigidShift&) const = default;
};

struct CoverageReport {
  double coverage = 0.0;
  double consistency = 0.0;
  RigidShift best_shift;
};

/// Maximum coverage over rigid motions of the raster drawn from the grids.
/// Moving the raster by T is scored by pulling template samples back through
/// T^-1, which keeps the test exact.
inline CoverageReport consistency(const StrokeRaster& raster, const Shape& tmpl, const std::vector<double>& shift_grid,
                                  const std::vector<double>& rotation_grid, double tol) {
  auto has_zero = [](const std::vector<double>& g) {
    return std::any_of(g.begin(), g.end(), [](double v) { return v == 0.0; });
  };
  if (!has_zero(shift_grid) || !has_zero(rotation_grid)) throw ConfigError("alignment grids must contain 0");
  const auto samples = sample_polyline(tmpl, 0.5 * raster.cell_size());
  const CoverageOracle oracle(raster, tol);
  const Eigen::Vector2d c(0.5, 0.5);

  CoverageReport report;
  report.coverage = covered_fraction(oracle, samples);
  report.consistency = report.coverage;
  double best_size = 0.0;
  std::vector<Eigen::Vector2d> moved(samples.size());
  for (double th : rotation_grid) {
    const double cs = std::cos(th);
    const double sn = std::sin(th);
    for (double dx : shift_grid) {
      for (double dy : shift_grid) {
        if (th == 0.0 && dx == 0.0 && dy == 0.0) continue;
        std::size_t hit = 0;
        for (const auto& q : samples) {
          // T(p) = R(p - c) + c + d, so T^-1(q) = R^T(q - c - d) + c.
          const Eigen::Vector2d r = q - c - Eigen::Vector2d(dx, dy);
          hit += oracle.covered(Eigen::Vector2d(cs * r.x() + sn * r.y(), -sn * r.x() + cs * r.y()) + c) ? 1 : 0;
        }
        const double value = static_cast<double>(hit) / static_cast<double>(samples.size());
        const double size = dx * dx + dy * dy + th * th;
        if (value > report.consistency || (value == report.consistency && size < best_size)) {
          report.consistency = value;
          report.best_shift = {dx, dy, th};
          best_size = size;
        }
      }
    }
  }
  return report;
}

inline CoverageReport score_raster(const StrokeRaster& raster, const Shape& tmpl, const MetricsConfig& cfg) {
  return consistency(raster, tmpl, symmetric_grid(cfg.shift_max, cfg.shift_step),
                     symmetric_grid(cfg.rotation_max, cfg.rotation_step), cfg.tolerance);
}

// ---------------------------------------------------------------------------
// Rank statistics

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("correlation needs two equal-length series");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

/// Ranks from 1, ties get their average rank.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(average_ranks(x), average_ranks(y));
}

// ---------------------------------------------------------------------------
// Manifold sweep

struct ManifoldCell {
  double k_feature = 0.0;  // value of the swept k_j
  double k_cross = 0.0;    // value given to every other k axis
  std::size_t episodes = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  double failure_rate = 0.0;
};

struct ManifoldReport {
  std::size_t feature = 0;
  std::string feature_name;
  std::vector<double> k_grid;
  std::vector<double> cross_grid;
  std::vector<ManifoldCell> cells;  // cross-major: cells[c * k_grid.size() + i]

  const ManifoldCell& at(std::size_t k_index, std::size_t cross_index) const {
    return cells.at(cross_index * k_grid.size() + k_index);
  }

  /// Per-episode achieved means along k for one cross row.
  std::vector<double> row_means(std::size_t cross_index) const {
    std::vector<double> out;
    for (std::size_t i = 0; i < k_grid.size(); ++i) out.push_back(at(i, cross_index).mean);
    return out;
  }

  void write_csv(std::ostream& out) const {
    out << "feature,k_feature,k_cross,episodes,mean,min,max,failure_rate\n";
    out.precision(10);
    for (const auto& c : cells) {
      out << feature_name << ',' << c.k_feature << ',' << c.k_cross << ',' << c.episodes << ',' << c.mean << ','
          << c.min << ',' << c.max << ',' << c.failure_rate << '\n';
    }
  }
};

/// Holds k fixed per cell and records the episode-mean of the chosen feature
/// under deterministic actions. Each cell reseeds from `seed`.
template <typename Task, typename Scalar>
ManifoldReport manifold_sweep(Task& task, const sac::ActorPolicy<Scalar>& actor, const FeatureMap& map,
                              std::size_t feature_index, const std::vector<double>& k_grid,
                              const std::vector<double>& cross_grid, std::size_t episodes_per_cell,
                              std::uint64_t seed) {
  if (feature_index >= map.size()) throw ConfigError("sweep feature index out of range");
  if (k_grid.empty() || cross_grid.empty()) throw ConfigError("sweep grids must be non-empty");
  if (episodes_per_cell == 0) throw ConfigError("sweep needs at least one episode per cell");
  ManifoldReport report;
  report.feature = feature_index;
  report.feature_name = map.names.empty() ? std::to_string(feature_index) : map.names.at(feature_index);
  report.k_grid = k_grid;
  report.cross_grid = cross_grid;
  for (double cross : cross_grid) {
    for (double kj : k_grid) {
      std::vector<double> k(map.size(), std::clamp(cross, 0.0, 1.0));
      k[feature_index] = std::clamp(kj, 0.0, 1.0);
      const auto summary = evaluate_policy(task, actor, map, KSchedule::fixed(BehaviorOversightVector(k)),
                                           episodes_per_cell, seed, 1);
      ManifoldCell cell;
      cell.k_feature = kj;
      cell.k_cross = cross;
      cell.episodes = episodes_per_cell;
      cell.failure_rate = summary.failure_rate;
      cell.min = std::numeric_limits<double>::infinity();
      cell.max = -std::numeric_limits<double>::infinity();
      for (const auto& f : summary.mean_features) {
        cell.mean += f[feature_index];
        cell.min = std::min(cell.min, f[feature_index]);
        cell.max = std::max(cell.max, f[feature_index]);
      }
      cell.mean /= static_cast<double>(episodes_per_cell);
      report.cells.push_back(cell);
    }
  }
  return report;
}

}  // namespace acord
