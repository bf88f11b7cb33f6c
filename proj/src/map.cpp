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

#include "orchard_loc/map.hpp"

#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

namespace orchard_loc
{
namespace
{

using nlohmann::json;

constexpr double kRowTolerance = 1.5;

double point_segment_distance(const Vec2 & p, const Vec2 & a, const Vec2 & b)
{
  const Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  double t = (p - a).dot(ab) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, a + t * ab);
}

void require_keys(const json & obj, std::initializer_list<const char *> allowed, const std::string & where)
{
  if (!obj.is_object()) {
    throw MapError(MapError::Kind::kParse, where + ": expected an object");
  }
  for (const auto & [key, value] : obj.items()) {
    bool known = false;
    for (const char * a : allowed) {
      known = known || key == a;
    }
    if (!known) {
      throw MapError(MapError::Kind::kParse, where + ": unknown field '" + key + "'");
    }
  }
  for (const char * a : allowed) {
    if (!obj.contains(a)) {
      throw MapError(MapError::Kind::kParse, where + ": missing field '" + std::string(a) + "'");
    }
  }
}

Vec2 read_point(const json & j, const std::string & where)
{
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw MapError(MapError::Kind::kParse, where + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
T read_value(const json & j, const char * key, const std::string & where)
{
  try {
    return j.at(key).get<T>();
  } catch (const json::exception &) {
    throw MapError(MapError::Kind::kParse, where + ": bad value for '" + key + "'");
  }
}

std::string landmark_context(const Landmark & lm) { return "landmark '" + lm.id + "'"; }

}  // namespace

OrchardMap::OrchardMap(
  std::vector<Landmark> landmarks, std::vector<RowSpec> rows, double row_spacing,
  double headland_depth)
: landmarks_(std::move(landmarks)),
  rows_(std::move(rows)),
  row_spacing_(row_spacing),
  headland_depth_(headland_depth)
{
  using K = MapError::Kind;
  if (!(row_spacing_ > 0.0) || !(headland_depth_ >= 0.0)) {
    throw MapError(K::kValidation, "meta: row_spacing must be > 0 and headland_depth >= 0");
  }
  std::map<int, std::size_t> row_index;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const RowSpec & r = rows_[i];
    const std::string ctx = "row " + std::to_string(r.row_id);
    if (!row_index.emplace(r.row_id, i).second) {
      throw MapError(K::kValidation, ctx + ": duplicate row_id");
    }
    if (r.start == r.end) {
      throw MapError(K::kValidation, ctx + ": start equals end");
    }
    if (!std::isfinite(r.start.dx) || !std::isfinite(r.start.dy) || !std::isfinite(r.end.dx) ||
        !std::isfinite(r.end.dy)) {
      throw MapError(K::kValidation, ctx + ": non-finite endpoint");
    }
  }

  std::unordered_set<std::string> ids;
  std::map<int, std::vector<std::string>> members;
  for (const Landmark & lm : landmarks_) {
    if (!ids.insert(lm.id).second) {
      throw MapError(K::kValidation, landmark_context(lm) + ": duplicate id");
    }
    if (!(lm.width > 0.0 && lm.width < 1.0)) {
      throw MapError(K::kValidation, landmark_context(lm) + ": width must be in (0, 1) m");
    }
    if (!std::isfinite(lm.position.dx) || !std::isfinite(lm.position.dy)) {
      throw MapError(K::kValidation, landmark_context(lm) + ": non-finite position");
    }
    auto it = row_index.find(lm.row_id);
    if (it == row_index.end()) {
      throw MapError(
        K::kValidation, landmark_context(lm) + ": unknown row_id " + std::to_string(lm.row_id));
    }
    const RowSpec & r = rows_[it->second];
    if (point_segment_distance(lm.position, r.start, r.end) > kRowTolerance) {
      throw MapError(K::kValidation, landmark_context(lm) + ": farther than 1.5 m from its row");
    }
    members[lm.row_id].push_back(lm.id);
  }
  for (RowSpec & r : rows_) {
    if (r.landmark_ids.empty()) {
      r.landmark_ids = members[r.row_id];
    } else if (r.landmark_ids != members[r.row_id]) {
      throw MapError(
        K::kValidation, "row " + std::to_string(r.row_id) + ": landmark list does not match");
    }
  }
  build_index();
}

void OrchardMap::build_index()
{
  if (landmarks_.empty()) {
    grid_nx_ = grid_ny_ = 0;
    return;
  }
  double xmin = landmarks_.front().position.dx;
  double xmax = xmin;
  double ymin = landmarks_.front().position.dy;
  double ymax = ymin;
  for (const Landmark & lm : landmarks_) {
    xmin = std::min(xmin, lm.position.dx);
    xmax = std::max(xmax, lm.position.dx);
    ymin = std::min(ymin, lm.position.dy);
    ymax = std::max(ymax, lm.position.dy);
  }
  grid_x0_ = xmin;
  grid_y0_ = ymin;
  grid_nx_ = static_cast<int>(std::floor((xmax - xmin) / kGridCell)) + 1;
  grid_ny_ = static_cast<int>(std::floor((ymax - ymin) / kGridCell)) + 1;

  const std::size_t ncell = static_cast<std::size_t>(grid_nx_) * grid_ny_;
  std::vector<std::size_t> cell_of(landmarks_.size());
  std::vector<std::uint32_t> counts(ncell, 0);
  for (std::size_t i = 0; i < landmarks_.size(); ++i) {
    const int ix = static_cast<int>(std::floor((landmarks_[i].position.dx - grid_x0_) / kGridCell));
    const int iy = static_cast<int>(std::floor((landmarks_[i].position.dy - grid_y0_) / kGridCell));
    cell_of[i] = static_cast<std::size_t>(iy) * grid_nx_ + ix;
    ++counts[cell_of[i]];
  }
  cell_start_.assign(ncell + 1, 0);
  for (std::size_t c = 0; c < ncell; ++c) {
    cell_start_[c + 1] = cell_start_[c] + counts[c];
  }
  cell_items_.assign(landmarks_.size(), 0);
  std::vector<std::uint32_t> fill(cell_start_.begin(), cell_start_.end() - 1);
  for (std::size_t i = 0; i < landmarks_.size(); ++i) {
    cell_items_[fill[cell_of[i]]++] = static_cast<std::uint32_t>(i);
  }
}

const RowSpec & OrchardMap::row(int row_id) const
{
  for (const RowSpec & r : rows_) {
    if (r.row_id == row_id) {
      return r;
    }
  }
  throw std::out_of_range("no row with id " + std::to_string(row_id));
}

bool OrchardMap::has_row(int row_id) const
{
  return std::any_of(rows_.begin(), rows_.end(), [&](const RowSpec & r) { return r.row_id == row_id; });
}

std::vector<FovHit> OrchardMap::landmarks_in_fov(
  const Pose2D & pose, double fov_half_angle, double max_range, double view_bearing_offset) const
{
  std::vector<FovHit> hits;
  for_each_in_fov(
    pose, fov_half_angle, max_range, view_bearing_offset,
    [&](std::size_t idx, double range, double bearing) { hits.push_back({idx, range, bearing}); });
  std::sort(hits.begin(), hits.end(), [](const FovHit & a, const FovHit & b) { return a.index < b.index; });
  return hits;
}

OrchardMap generate_map(const MapGenConfig & cfg, std::uint64_t seed)
{
  if (cfg.rows < 1 || cfg.trees_per_row < 1 || !(cfg.tree_spacing > 0.0)) {
    throw std::invalid_argument("generate_map: need at least one row and one tree");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  std::vector<Landmark> landmarks;
  std::vector<RowSpec> rows;
  landmarks.reserve(static_cast<std::size_t>(cfg.rows) * cfg.trees_per_row);
  const double half = 0.5 * cfg.tree_spacing;
  const double last_x = (cfg.trees_per_row - 1) * cfg.tree_spacing;
  for (int r = 0; r < cfg.rows; ++r) {
    const double y = r * cfg.row_spacing;
    rows.push_back({r, {-half, y}, {last_x + half, y}, {}});
    for (int i = 0; i < cfg.trees_per_row; ++i) {
      Landmark lm;
      std::ostringstream id;
      id << "r" << r << "_t" << i;
      lm.id = id.str();
      lm.row_id = r;
      lm.position = {i * cfg.tree_spacing + cfg.along_jitter * unit(rng), y + cfg.cross_jitter * unit(rng)};
      const double w = cfg.width_median * std::exp(cfg.width_log_sigma * unit(rng));
      if (cfg.post_every > 0 && (i + 1) % cfg.post_every == 0) {
        lm.kind = LandmarkKind::kPost;
        lm.width = cfg.post_width;
      } else {
        lm.kind = LandmarkKind::kTree;
        lm.width = std::clamp(w, 0.01, 0.9);
      }
      landmarks.push_back(std::move(lm));
    }
  }
  return OrchardMap(std::move(landmarks), std::move(rows), cfg.row_spacing, cfg.headland_depth);
}

OrchardMap parse_map(const std::string & text)
{
  using K = MapError::Kind;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error & e) {
    throw MapError(K::kParse, std::string("map: malformed document: ") + e.what());
  }
  require_keys(doc, {"meta", "rows", "landmarks"}, "map");
  const json & meta = doc["meta"];
  require_keys(meta, {"row_spacing", "headland_depth", "units"}, "meta");
  if (read_value<std::string>(meta, "units", "meta") != "m") {
    throw MapError(K::kParse, "meta: units must be \"m\"");
  }
  if (!doc["rows"].is_array() || !doc["landmarks"].is_array()) {
    throw MapError(K::kParse, "map: rows and landmarks must be arrays");
  }

  std::vector<RowSpec> rows;
  for (std::size_t i = 0; i < doc["rows"].size(); ++i) {
    const json & jr = doc["rows"][i];
    const std::string ctx = "rows[" + std::to_string(i) + "]";
    require_keys(jr, {"row_id", "start", "end"}, ctx);
    RowSpec r;
    r.row_id = read_value<int>(jr, "row_id", ctx);
    r.start = read_point(jr["start"], ctx + ".start");
    r.end = read_point(jr["end"], ctx + ".end");
    rows.push_back(std::move(r));
  }

  std::vector<Landmark> landmarks;
  for (std::size_t i = 0; i < doc["landmarks"].size(); ++i) {
    const json & jl = doc["landmarks"][i];
    std::string ctx = "landmarks[" + std::to_string(i) + "]";
    require_keys(jl, {"id", "row_id", "pos", "width", "kind"}, ctx);
    Landmark lm;
    lm.id = read_value<std::string>(jl, "id", ctx);
    ctx += " ('" + lm.id + "')";
    lm.row_id = read_value<int>(jl, "row_id", ctx);
    lm.position = read_point(jl["pos"], ctx + ".pos");
    lm.width = read_value<double>(jl, "width", ctx);
    const auto kind = read_value<std::string>(jl, "kind", ctx);
    if (kind == "tree") {
      lm.kind = LandmarkKind::kTree;
    } else if (kind == "post") {
      lm.kind = LandmarkKind::kPost;
    } else {
      throw MapError(K::kParse, ctx + ": kind must be \"tree\" or \"post\"");
    }
    landmarks.push_back(std::move(lm));
  }
  return OrchardMap(
    std::move(landmarks), std::move(rows), read_value<double>(meta, "row_spacing", "meta"),
    read_value<double>(meta, "headland_depth", "meta"));
}

OrchardMap load_map(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw MapError(MapError::Kind::kParse, "map: cannot open " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_map(buf.str());
}

std::string serialize_map(const OrchardMap & map)
{
  json doc;
  doc["meta"] = {{"row_spacing", map.row_spacing()}, {"headland_depth", map.headland_depth()}, {"units", "m"}};
  json rows = json::array();
  for (const RowSpec & r : map.rows()) {
    rows.push_back({{"row_id", r.row_id}, {"start", {r.start.dx, r.start.dy}}, {"end", {r.end.dx, r.end.dy}}});
  }
  json landmarks = json::array();
  for (const Landmark & lm : map.landmarks()) {
    landmarks.push_back(
      {{"id", lm.id},
       {"row_id", lm.row_id},
       {"pos", {lm.position.dx, lm.position.dy}},
       {"width", lm.width},
       {"kind", lm.kind == LandmarkKind::kTree ? "tree" : "post"}});
  }
  doc["rows"] = std::move(rows);
  doc["landmarks"] = std::move(landmarks);
  return doc.dump(1) + "\n";
}

void save_map(const OrchardMap & map, const std::filesystem::path & path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write map file " + path.string());
  }
  out << serialize_map(map);
}

OrchardMap inflate_widths(const OrchardMap & map, double delta)
{
  if (!(delta >= 0.0 && delta < 0.05)) {
    throw std::invalid_argument("inflate_widths: delta must be in [0, 0.05)");
  }
  std::vector<Landmark> landmarks = map.landmarks();
  for (Landmark & lm : landmarks) {
    lm.width += delta;
  }
  return OrchardMap(std::move(landmarks), map.rows(), map.row_spacing(), map.headland_depth());
}

}  // namespace orchard_loc
