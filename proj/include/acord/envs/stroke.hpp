#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "acord/envs/painter.hpp"
#include "acord/error.hpp"

namespace acord {

/// Binary canvas grid. Cell (i, j) covers x in [i/res, (i+1)/res) and
/// y in [j/res, (j+1)/res); its center is the sample point.
class StrokeRaster {
 public:
  StrokeRaster() = default;
  explicit StrokeRaster(int resolution) : resolution_(resolution) {
    if (resolution < 1) throw ConfigError("raster resolution must be >= 1");
    cells_.assign(static_cast<std::size_t>(resolution) * resolution, 0);
  }

  int resolution() const { return resolution_; }
  double cell_size() const { return 1.0 / resolution_; }
  double center(int i) const { return (i + 0.5) / resolution_; }

  bool painted(int i, int j) const {
    if (i < 0 || j < 0 || i >= resolution_ || j >= resolution_) return false;
    return cells_[index(i, j)] != 0;
  }
  void paint(int i, int j) {
    if (i < 0 || j < 0 || i >= resolution_ || j >= resolution_) return;
    cells_[index(i, j)] = 1;
  }

  std::size_t painted_count() const { return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1)); }
  bool empty() const { return painted_count() == 0; }

  /// Cell containing a canvas point, or -1 when outside.
  int cell_of(double v) const {
    const double c = std::floor(v * resolution_);
    if (c < 0 || c >= resolution_) return -1;
    return static_cast<int>(c);
  }

  /// Paints cells whose centers fall inside the ellipse centered at (cx, cy)
  /// with semi-axes (ax along x, ay along y).
  void stamp_ellipse(double cx, double cy, double ax, double ay) {
    if (ax <= 0.0 || ay <= 0.0) return;
    const int i0 = std::max(0, static_cast<int>(std::floor((cx - ax) * resolution_)));
    const int i1 = std::min(resolution_ - 1, static_cast<int>(std::floor((cx + ax) * resolution_)));
    const int j0 = std::max(0, static_cast<int>(std::floor((cy - ay) * resolution_)));
    const int j1 = std::min(resolution_ - 1, static_cast<int>(std::floor((cy + ay) * resolution_)));
    for (int j = j0; j <= j1; ++j) {
      const double dy = (center(j) - cy) / ay;
      for (int i = i0; i <= i1; ++i) {
        const double dx = (center(i) - cx) / ax;
        if (dx * dx + dy * dy <= 1.0) cells_[index(i, j)] = 1;
      }
    }
  }

  bool operator==(const StrokeRaster&) const = default;

  const std::vector<std::uint8_t>& cells() const { return cells_; }

 private:
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * resolution_ + i; }

  int resolution_ = 0;
  std::vector<std::uint8_t> cells_;
};

/// Brush footprint at one tip pose: half-width w(z) across, stretched by
/// 1/cos(pitch) along x, the direction the brush leans.
inline void stamp_brush(StrokeRaster& raster, const Eigen::Vector2d& tip, double height, double pitch,
                        const PainterParams& p) {
  const double w = p.stroke_half_width(height);
  if (w <= 0.0) return;
  const double stretch = 1.0 / std::max(std::cos(pitch), 1e-3);
  raster.stamp_ellipse(tip.x(), tip.y(), w * stretch, w);
}

/// Rasterizes a brush-tip trajectory. Consecutive samples are joined by
/// interpolated stamps spaced at most half a cell apart.
inline StrokeRaster render_stroke(std::span<const PainterState> trajectory, const PainterParams& p,
                                  int resolution = 512) {
  StrokeRaster raster(resolution);
  if (trajectory.empty()) return raster;
  const double spacing = 0.5 / resolution;
  stamp_brush(raster, trajectory.front().brush_position, trajectory.front().brush_height,
              trajectory.front().brush_pitch, p);
  for (std::size_t t = 1; t < trajectory.size(); ++t) {
    const auto& a = trajectory[t - 1];
    const auto& b = trajectory[t];
    const double dist = (b.brush_position - a.brush_position).norm();
    const int pieces = std::max(1, static_cast<int>(std::ceil(dist / spacing)));
    for (int s = 1; s <= pieces; ++s) {
      const double f = static_cast<double>(s) / pieces;
      const Eigen::Vector2d tip = (1.0 - f) * a.brush_position + f * b.brush_position;
      stamp_brush(raster, tip, (1.0 - f) * a.brush_height + f * b.brush_height,
                  (1.0 - f) * a.brush_pitch + f * b.brush_pitch, p);
    }
  }
  return raster;
}

/// Binary PGM (P5). Painted cells are black (0), the rest white (255); the
/// top image row is the highest y.
inline void write_pgm(const std::filesystem::path& path, const StrokeRaster& raster) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const int res = raster.resolution();
  out << "P5\n" << res << ' ' << res << "\n255\n";
  std::vector<char> row(static_cast<std::size_t>(res));
  for (int j = res - 1; j >= 0; --j) {
    for (int i = 0; i < res; ++i) row[static_cast<std::size_t>(i)] = raster.painted(i, j) ? char(0) : char(255);
    out.write(row.data(), res);
  }
  if (!out) throw std::runtime_error("short write on " + path.string());
}

inline StrokeRaster read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open raster " + path.string());
  auto next_token = [&in]() {
    std::string tok;
    char c = 0;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
      } else if (!std::isspace(static_cast<unsigned char>(c))) {
        tok.push_back(c);
        break;
      }
    }
    while (in.get(c) && !std::isspace(static_cast<unsigned char>(c))) tok.push_back(c);
    return tok;
  };
  if (next_token() != "P5") throw ConfigError(path.string() + " is not a binary PGM");
  const int width = std::stoi(next_token());
  const int height = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (width != height) throw ConfigError("raster " + path.string() + " is not square");
  if (maxval != 255) throw ConfigError("raster " + path.string() + " must use maxval 255");
  StrokeRaster raster(width);
  std::vector<char> row(static_cast<std::size_t>(width));
  for (int j = height - 1; j >= 0; --j) {
    in.read(row.data(), width);
    if (!in) throw ConfigError("truncated raster " + path.string());
    for (int i = 0; i < width; ++i) {
      if (static_cast<unsigned char>(row[static_cast<std::size_t>(i)]) < 128) raster.paint(i, j);
    }
  }
  return raster;
}

}  // namespace acord
