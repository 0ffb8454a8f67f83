#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "acord/error.hpp"

namespace acord {

/// Ordered waypoints (p_0, ..., p_r) to trace, in canvas units.
struct Shape {
  std::string name;
  std::vector<Eigen::Vector2d> waypoints;

  std::size_t last_index() const { return waypoints.size() - 1; }

  double length() const {
    double total = 0.0;
    for (std::size_t i = 1; i < waypoints.size(); ++i) total += (waypoints[i] - waypoints[i - 1]).norm();
    return total;
  }

  void validate(double x_min = 0.0, double x_max = 1.0, double y_min = 0.0, double y_max = 1.0) const {
    if (waypoints.size() < 2) throw ConfigError("shape '" + name + "' needs at least 2 waypoints");
    for (const auto& p : waypoints) {
      if (p.x() < x_min || p.x() > x_max || p.y() < y_min || p.y() > y_max) {
        throw ConfigError("shape '" + name + "' has a waypoint outside the workspace");
      }
    }
  }
};

/// Shape file: first line is the name, then one "x y" pair per line. Blank
/// lines and lines starting with '#' are ignored.
inline Shape parse_shape(std::istream& in) {
  Shape shape;
  std::string line;
  bool have_name = false;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    if (!have_name) {
      shape.name = line.substr(first, line.find_last_not_of(" \t\r") - first + 1);
      have_name = true;
      continue;
    }
    std::istringstream fields(line);
    double x = 0.0;
    double y = 0.0;
    if (!(fields >> x >> y)) throw ConfigError("bad waypoint line in shape file: '" + line + "'");
    shape.waypoints.emplace_back(x, y);
  }
  if (!have_name) throw ConfigError("empty shape file");
  return shape;
}

inline Shape load_shape(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open shape file " + path.string());
  Shape shape = parse_shape(in);
  shape.validate();
  return shape;
}

inline Shape load_named_shape(const std::filesystem::path& dir, const std::string& name) {
  return load_shape(dir / (name + ".txt"));
}

inline void save_shape(const std::filesystem::path& path, const Shape& shape) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write shape file " + path.string());
  out << shape.name << '\n' << std::setprecision(17);
  for (const auto& p : shape.waypoints) out << p.x() << ' ' << p.y() << '\n';
}

inline std::vector<std::string> list_shapes(const std::filesystem::path& dir) {
  std::vector<std::string> names;
  if (!std::filesystem::is_directory(dir)) return names;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".txt") names.push_back(entry.path().stem().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace acord
