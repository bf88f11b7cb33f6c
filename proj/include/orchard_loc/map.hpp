// Copyright 2026 The orchard_loc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ORCHARD_LOC__MAP_HPP_
#define ORCHARD_LOC__MAP_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "orchard_loc/geom.hpp"

namespace orchard_loc
{

enum class LandmarkKind { kTree, kPost };

struct Landmark
{
  std::string id;
  int row_id = 0;
  Vec2 position;
  double width = 0.0;  // trunk or post diameter, meters
  LandmarkKind kind = LandmarkKind::kTree;
};

struct RowSpec
{
  int row_id = 0;
  Vec2 start;
  Vec2 end;
  std::vector<std::string> landmark_ids;  // ordered from start to end

  double length() const { return distance(start, end); }
  /// Unit direction start -> end, as a heading.
  double heading() const { return std::atan2(end.dy - start.dy, end.dx - start.dx); }
};

/// A landmark seen from a pose: index into OrchardMap::landmarks(), range and
/// bearing relative to the view axis.
struct FovHit
{
  std::size_t index = 0;
  double range = 0.0;
  double bearing = 0.0;
};

class MapError : public std::runtime_error
{
public:
  enum class Kind { kParse, kValidation };
  MapError(Kind kind, const std::string & what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

/// Immutable landmark map with a uniform-grid spatial index.
class OrchardMap
{
public:
  static constexpr double kGridCell = 4.0;

  OrchardMap() = default;
  /// Validates every invariant and builds the index. Throws MapError.
  OrchardMap(
    std::vector<Landmark> landmarks, std::vector<RowSpec> rows, double row_spacing,
    double headland_depth);

  const std::vector<Landmark> & landmarks() const { return landmarks_; }
  const std::vector<RowSpec> & rows() const { return rows_; }
  double row_spacing() const { return row_spacing_; }
  double headland_depth() const { return headland_depth_; }

  /// Row with the given id, or throws std::out_of_range.
  const RowSpec & row(int row_id) const;
  bool has_row(int row_id) const;

  /// Calls fn(index, range, bearing) for every landmark within max_range whose
  /// bearing from the view axis (pose heading + view_offset) is within
  /// +-half_angle. Bearing is reported relative to the view axis.
  template <typename Fn>
  void for_each_in_fov(
    const Pose2D & pose, double half_angle, double max_range, double view_offset, Fn && fn) const;

  std::vector<FovHit> landmarks_in_fov(
    const Pose2D & pose, double fov_half_angle, double max_range,
    double view_bearing_offset) const;

private:
  void build_index();

  std::vector<Landmark> landmarks_;
  std::vector<RowSpec> rows_;
  double row_spacing_ = 0.0;
  double headland_depth_ = 0.0;

  double grid_x0_ = 0.0;
  double grid_y0_ = 0.0;
  int grid_nx_ = 0;
  int grid_ny_ = 0;
  std::vector<std::uint32_t> cell_start_;  // CSR layout, size nx*ny+1
  std::vector<std::uint32_t> cell_items_;
};

struct MapGenConfig
{
  int rows = 20;
  int trees_per_row = 50;
  double tree_spacing = 1.8;
  double along_jitter = 0.08;
  double cross_jitter = 0.04;
  double row_spacing = 3.0;
  double headland_depth = 5.0;
  double width_median = 0.080;
  double width_log_sigma = 0.25;
  int post_every = 10;
  double post_width = 0.10;
};

/// Synthetic orchard: rows parallel to +x at y = row_id * row_spacing, each
/// row segment extending half a tree spacing beyond its end trees.
OrchardMap generate_map(const MapGenConfig & cfg, std::uint64_t seed);

OrchardMap load_map(const std::filesystem::path & path);
/// Parses the map document text. Throws MapError.
OrchardMap parse_map(const std::string & text);
std::string serialize_map(const OrchardMap & map);
void save_map(const OrchardMap & map, const std::filesystem::path & path);

/// Every width increased by delta, 0 <= delta < 0.05. Throws std::invalid_argument.
OrchardMap inflate_widths(const OrchardMap & map, double delta);

inline constexpr double kDefaultWidthInflation = 0.003;

// ---------------------------------------------------------------------------

template <typename Fn>
void OrchardMap::for_each_in_fov(
  const Pose2D & pose, double half_angle, double max_range, double view_offset, Fn && fn) const
{
  if (grid_nx_ == 0) {
    return;
  }
  const double axis = pose.theta + view_offset;
  const double ax = std::cos(axis);
  const double ay = std::sin(axis);
  const double cos_half = std::cos(half_angle);
  const double r2max = max_range * max_range;

  const int ix0 = std::max(0, static_cast<int>(std::floor((pose.x - max_range - grid_x0_) / kGridCell)));
  const int ix1 =
    std::min(grid_nx_ - 1, static_cast<int>(std::floor((pose.x + max_range - grid_x0_) / kGridCell)));
  const int iy0 = std::max(0, static_cast<int>(std::floor((pose.y - max_range - grid_y0_) / kGridCell)));
  const int iy1 =
    std::min(grid_ny_ - 1, static_cast<int>(std::floor((pose.y + max_range - grid_y0_) / kGridCell)));
  for (int iy = iy0; iy <= iy1; ++iy) {
    for (int ix = ix0; ix <= ix1; ++ix) {
      const std::size_t cell = static_cast<std::size_t>(iy) * grid_nx_ + ix;
      for (std::uint32_t k = cell_start_[cell]; k < cell_start_[cell + 1]; ++k) {
        const std::uint32_t idx = cell_items_[k];
        const Vec2 & p = landmarks_[idx].position;
        const double dx = p.dx - pose.x;
        const double dy = p.dy - pose.y;
        const double r2 = dx * dx + dy * dy;
        if (r2 > r2max || r2 == 0.0) {
          continue;
        }
        const double range = std::sqrt(r2);
        // cosine of the angle between the view axis and the landmark direction
        if ((dx * ax + dy * ay) < cos_half * range - 1e-12) {
          continue;
        }
        const double bearing = std::atan2(ax * dy - ay * dx, ax * dx + ay * dy);
        if (std::abs(bearing) > half_angle) {
          continue;
        }
        fn(static_cast<std::size_t>(idx), range, bearing);
      }
    }
  }
}

}  // namespace orchard_loc

#endif  // ORCHARD_LOC__MAP_HPP_
