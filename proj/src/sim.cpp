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

#include "orchard_loc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>

#include "orchard_loc/random.hpp"

namespace orchard_loc
{
namespace
{

// One piece of a planned path: straight (curvature 0) or a circular arc.
struct PathSegment
{
  Vec2 start;
  double heading = 0.0;
  double length = 0.0;
  double curvature = 0.0;

  Vec2 point_at(double s) const
  {
    if (curvature == 0.0) {
      return start + Vec2{s * std::cos(heading), s * std::sin(heading)};
    }
    const double h1 = heading + curvature * s;
    return start + Vec2{(std::sin(h1) - std::sin(heading)) / curvature, (std::cos(heading) - std::cos(h1)) / curvature};
  }
  double heading_at(double s) const { return heading + curvature * s; }
  Vec2 end_point() const { return point_at(length); }
};

class Path
{
public:
  void straight(double length) { add(length, 0.0); }
  void arc(double radius, double angle)
  {
    const double k = (angle >= 0.0 ? 1.0 : -1.0) / radius;
    add(std::abs(angle) * radius, k);
  }
  void start_at(Vec2 p, double heading)
  {
    cursor_ = p;
    heading_ = heading;
  }

  double length() const
  {
    double total = 0.0;
    for (const PathSegment & s : segments_) {
      total += s.length;
    }
    return total;
  }

  std::pair<Vec2, double> sample(double s) const
  {
    for (const PathSegment & seg : segments_) {
      if (s <= seg.length || &seg == &segments_.back()) {
        const double local = std::min(s, seg.length);
        return {seg.point_at(local), seg.heading_at(local)};
      }
      s -= seg.length;
    }
    return {cursor_, heading_};
  }

private:
  void add(double length, double curvature)
  {
    if (length <= 0.0) {
      return;
    }
    PathSegment seg{cursor_, heading_, length, curvature};
    segments_.push_back(seg);
    cursor_ = seg.end_point();
    heading_ = seg.heading_at(length);
  }

  std::vector<PathSegment> segments_;
  Vec2 cursor_;
  double heading_ = 0.0;
};

// Row-aligned frame for a run: origin at the entry end, `dir` the travel
// direction, `side` the unit normal pointing at the viewed row.
struct RowFrame
{
  Vec2 origin;
  Vec2 dir;
  Vec2 side;
  double length = 0.0;
  double half_spacing = 0.0;

  double along(const Vec2 & p) const { return (p - origin).dot(dir); }
  Vec2 lane_point(double a) const { return origin + a * dir - half_spacing * side; }
};

double view_side_sign(const SensorConfig & cfg) { return std::sin(cfg.view_bearing_offset) >= 0.0 ? 1.0 : -1.0; }

RowFrame row_frame(const OrchardMap & map, const RowSpec & row, bool reverse, double view_sign)
{
  RowFrame f;
  const Vec2 u = (1.0 / row.length()) * (row.end - row.start);
  f.dir = reverse ? -1.0 * u : u;
  f.origin = reverse ? row.end : row.start;
  f.side = view_sign * Vec2{-f.dir.dy, f.dir.dx};
  f.length = row.length();
  f.half_spacing = 0.5 * map.row_spacing();
  return f;
}

std::pair<double, double> landmark_extent(const OrchardMap & map, const RowFrame & f, int row_id)
{
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const Landmark & lm : map.landmarks()) {
    if (lm.row_id == row_id) {
      const double a = f.along(lm.position);
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
  }
  if (!(lo <= hi)) {
    throw std::invalid_argument("row " + std::to_string(row_id) + " has no landmarks");
  }
  return {lo, hi};
}

struct TurnPlan
{
  double lateral = 0.0;   // distance from the exit lane to the target lane, toward the viewed side
  double exit_along = 0.0;
  double entry_along = 0.0;  // along-coordinate of the target row's first landmark in the new direction
};

TurnPlan plan_turn(const OrchardMap & map, const TrajectorySpec & spec, const RowFrame & f, double exit_beyond)
{
  const RowSpec & target = map.row(spec.target_row_id);
  TurnPlan plan;
  plan.exit_along = landmark_extent(map, f, spec.row_id).second + exit_beyond;
  // target lane runs the other way, so its viewed side is -side relative to its row line
  const Vec2 target_lane = target.start + f.half_spacing * f.side;
  plan.lateral = (target_lane - f.lane_point(0.0)).dot(f.side);
  plan.entry_along = landmark_extent(map, f, spec.target_row_id).second;
  return plan;
}

}  // namespace

std::string_view to_string(TrajectoryKind kind)
{
  return kind == TrajectoryKind::kStraightRow ? "straight_row" : "row_change";
}

std::optional<TrajectoryKind> parse_trajectory_kind(std::string_view text)
{
  if (text == "straight_row") {
    return TrajectoryKind::kStraightRow;
  }
  if (text == "row_change") {
    return TrajectoryKind::kRowChange;
  }
  return std::nullopt;
}

std::string_view to_string(RecordKind kind)
{
  switch (kind) {
    case RecordKind::kTruth:
      return "truth";
    case RecordKind::kWheel:
      return "wheel";
    case RecordKind::kImu:
      return "imu";
    case RecordKind::kGnss:
      return "gnss";
    case RecordKind::kGnssCorrected:
      return "gnss_corrected";
    case RecordKind::kVisual:
      return "visual";
    case RecordKind::kTrunks:
      return "trunks";
  }
  return "?";
}

std::optional<RecordKind> parse_record_kind(std::string_view text)
{
  for (RecordKind k :
       {RecordKind::kTruth, RecordKind::kWheel, RecordKind::kImu, RecordKind::kGnss, RecordKind::kGnssCorrected,
        RecordKind::kVisual, RecordKind::kTrunks}) {
    if (to_string(k) == text) {
      return k;
    }
  }
  return std::nullopt;
}

void TrajectorySpec::validate() const
{
  if (!(speed > 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("trajectory: speed and dt must be > 0");
  }
  if (kind == TrajectoryKind::kRowChange && std::abs(target_row_id - row_id) > 1) {
    throw std::invalid_argument("trajectory: row change must target the same or an adjacent row");
  }
  if (start_offset < 0.0 || entry_length < 0.0 || exit_beyond_last < 0.0) {
    throw std::invalid_argument("trajectory: offsets must be >= 0");
  }
}

SimConfig SimConfig::noiseless()
{
  SimConfig s;
  s.wheel_sigma_dist_frac = 0.0;
  s.wheel_sigma_dtheta = 0.0;
  s.wheel_drift_per_meter = 0.0;
  s.wheel_turn_scale_sigma = 0.0;
  s.visual_sigma_floor = 0.0;
  s.visual_sigma_frac = 0.0;
  s.gnss_corrected_sigma = 0.0;
  s.gnss_corrected_jitter = 0.0;
  s.gnss_initial_bias_sigma = 0.0;
  s.trunk_growth = 0.0;
  return s;
}

void SimConfig::validate() const
{
  if (!(speed > 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("speed and dt must be > 0");
  }
  for (double v :
       {wheel_sigma_dist_frac, wheel_sigma_dtheta, wheel_turn_scale_sigma, visual_sigma_floor, visual_sigma_frac, gnss_corrected_sigma,
        gnss_corrected_jitter, gnss_initial_bias_sigma, turn_exit_beyond_last, turn_lead}) {
    if (!(v >= 0.0)) {
      throw std::invalid_argument("simulator noise and distances must be >= 0");
    }
  }
  if (!(trunk_growth >= 0.0 && trunk_growth < 0.05)) {
    throw std::invalid_argument("trunk_growth must be in [0, 0.05)");
  }
}

SensorConfig noiseless_sensor(SensorConfig cfg)
{
  cfg.sigma_range = 0.0;
  cfg.sigma_bearing = 0.0;
  cfg.sigma_width = 0.0;
  cfg.detect_prob = 1.0;
  cfg.orientation_sigma_sensor = 0.0;
  cfg.gnss_sigma = 0.0;
  cfg.gnss_bias_step_sigma = 0.0;
  return cfg;
}

std::vector<LogStep> group_steps(const std::vector<SensorRecord> & records)
{
  std::vector<LogStep> steps;
  double last_t = -std::numeric_limits<double>::infinity();
  for (const SensorRecord & r : records) {
    if (r.t < last_t) {
      throw std::runtime_error("log: time goes backwards at t=" + std::to_string(r.t));
    }
    if (r.kind == RecordKind::kTruth) {
      if (!steps.empty() && !(r.t > steps.back().t)) {
        throw std::runtime_error("log: truth records not strictly increasing in t");
      }
      steps.emplace_back();
      steps.back().t = r.t;
      steps.back().truth = std::get<Pose2D>(r.data);
      last_t = r.t;
      continue;
    }
    if (steps.empty() || r.t != steps.back().t) {
      throw std::runtime_error("log: record at t=" + std::to_string(r.t) + " has no truth record");
    }
    LogStep & s = steps.back();
    switch (r.kind) {
      case RecordKind::kWheel:
        s.wheel = std::get<WheelReading>(r.data);
        break;
      case RecordKind::kImu:
        s.imu = std::get<ImuReading>(r.data).heading;
        break;
      case RecordKind::kGnss:
        s.gnss = std::get<Vec2>(r.data);
        break;
      case RecordKind::kGnssCorrected:
        s.gnss_corrected = std::get<Vec2>(r.data);
        break;
      case RecordKind::kVisual:
        s.visual = std::get<VisualReading>(r.data).forward;
        break;
      case RecordKind::kTrunks: {
        const auto & obs = std::get<TrunksReading>(r.data).obs;
        s.trunks.insert(s.trunks.end(), obs.begin(), obs.end());
        break;
      }
      case RecordKind::kTruth:
        break;
    }
  }
  return steps;
}

std::vector<Pose2D> generate_trajectory(const OrchardMap & map, const TrajectorySpec & spec)
{
  spec.validate();
  if (!map.has_row(spec.row_id)) {
    throw std::invalid_argument("trajectory: unknown row " + std::to_string(spec.row_id));
  }
  const double view_sign = spec.view_side >= 0 ? 1.0 : -1.0;
  const RowSpec & row = map.row(spec.row_id);
  const RowFrame f = row_frame(map, row, spec.reverse, view_sign);
  const double heading = std::atan2(f.dir.dy, f.dir.dx);

  Path path;
  path.start_at(f.lane_point(spec.start_offset), heading);
  if (spec.kind == TrajectoryKind::kStraightRow) {
    if (spec.start_offset >= f.length) {
      throw std::invalid_argument("trajectory: start_offset beyond the row end");
    }
    path.straight(f.length - spec.start_offset);
  } else {
    if (!map.has_row(spec.target_row_id)) {
      throw std::invalid_argument("trajectory: unknown target row " + std::to_string(spec.target_row_id));
    }
    const TurnPlan plan = plan_turn(map, spec, f, spec.exit_beyond_last);
    if (!(plan.lateral > 1e-6)) {
      throw std::invalid_argument("trajectory: target row not reachable turning toward the viewed side");
    }
    if (spec.start_offset >= plan.exit_along) {
      throw std::invalid_argument("trajectory: start_offset beyond the row exit");
    }
    const double turn_sign = view_sign;  // wrap around the row end toward the viewed side
    const double radius = 0.5 * map.row_spacing();
    path.straight(plan.exit_along - spec.start_offset);
    if (plan.lateral >= 2.0 * radius - 1e-9) {
      path.arc(radius, turn_sign * kPi / 2.0);
      path.straight(plan.lateral - 2.0 * radius);
      path.arc(radius, turn_sign * kPi / 2.0);
    } else {
      path.arc(0.5 * plan.lateral, turn_sign * kPi);
    }
    path.straight(plan.exit_along - plan.entry_along + spec.entry_length);
  }

  const double step = spec.speed * spec.dt;
  const double total = path.length();
  const auto count = static_cast<std::size_t>(std::floor(total / step + 1e-9)) + 1;
  std::vector<Pose2D> poses;
  poses.reserve(count);
  Vec2 prev;
  for (std::size_t k = 0; k < count; ++k) {
    const auto [p, tangent] = path.sample(static_cast<double>(k) * step);
    const double theta = k == 0 ? tangent : std::atan2(p.dy - prev.dy, p.dx - prev.dx);
    poses.push_back({p.dx, p.dy, wrap_angle(theta)});
    prev = p;
  }
  return poses;
}

SimulatedLog simulate_log(
  const OrchardMap & map, const TrajectorySpec & spec, const SensorConfig & cfg, const SimConfig & sim,
  std::uint64_t seed, std::string map_name)
{
  cfg.validate();
  sim.validate();
  const std::vector<Pose2D> poses = generate_trajectory(map, spec);
  const OrchardMap grown = sim.trunk_growth > 0.0 ? inflate_widths(map, sim.trunk_growth) : map;

  SimulatedLog log;
  log.header.seed = seed;
  log.header.map = std::move(map_name);
  log.header.trajectory = spec;
  log.records.reserve(poses.size() * 7);
  log.bias.reserve(poses.size());

  Rng rng(seed);
  GnssBiasState bias;
  bias.bias = {sample_normal(rng, 0.0, sim.gnss_initial_bias_sigma), sample_normal(rng, 0.0, sim.gnss_initial_bias_sigma)};
  if (bias.bias.norm() > cfg.gnss_bias_clamp) {
    bias.bias = (cfg.gnss_bias_clamp / bias.bias.norm()) * bias.bias;
  }
  const double turn_scale = 1.0 + sample_normal(rng, 0.0, sim.wheel_turn_scale_sigma);

  for (std::size_t k = 0; k < poses.size(); ++k) {
    const Pose2D & pose = poses[k];
    const double t = static_cast<double>(k) * spec.dt;
    if (k > 0) {
      bias = step_gnss_bias(bias, cfg, rng);
    }
    log.bias.push_back(bias.bias);

    double dist = 0.0;
    double dtheta = 0.0;
    if (k > 0) {
      dist = distance(pose.position(), poses[k - 1].position());
      dtheta = angular_displacement(poses[k - 1].theta, pose.theta);
    }
    WheelReading wheel;
    wheel.dist = dist * (1.0 + sample_normal(rng, 0.0, sim.wheel_sigma_dist_frac));
    wheel.dtheta = wrap_angle(sample_normal(rng, turn_scale * dtheta + sim.wheel_drift_per_meter * dist, sim.wheel_sigma_dtheta));
    if (k == 0) {
      wheel = {};
    }

    const double heading = observe_orientation(pose.theta, cfg, rng);
    const Vec2 fix = observe_gnss(pose, bias, cfg, rng);
    Vec2 corrected = pose.position() + rotate(sim.gnss_corrected_mount, pose.theta);
    const double sc = std::hypot(sim.gnss_corrected_sigma, sim.gnss_corrected_jitter);
    corrected = {sample_normal(rng, corrected.dx, sc), sample_normal(rng, corrected.dy, sc)};
    const double forward =
      k == 0 ? 0.0 : sample_normal(rng, dist, std::max(sim.visual_sigma_floor, sim.visual_sigma_frac * dist));
    TrunksReading trunks{observe_trunks(pose, grown, cfg, rng)};

    log.records.push_back({t, RecordKind::kTruth, pose});
    log.records.push_back({t, RecordKind::kWheel, wheel});
    log.records.push_back({t, RecordKind::kImu, ImuReading{heading}});
    log.records.push_back({t, RecordKind::kGnss, fix});
    log.records.push_back({t, RecordKind::kGnssCorrected, corrected});
    log.records.push_back({t, RecordKind::kVisual, VisualReading{forward}});
    log.records.push_back({t, RecordKind::kTrunks, std::move(trunks)});
  }
  return log;
}

std::vector<TrajectorySpec> enumerate_row_changes(const OrchardMap & map, const SensorConfig & cfg, const SimConfig & sim)
{
  std::vector<TrajectorySpec> out;
  const double view_sign = view_side_sign(cfg);
  for (const RowSpec & row : map.rows()) {
    for (bool reverse : {false, true}) {
      const RowFrame f = row_frame(map, row, reverse, view_sign);
      for (int target : {row.row_id - 1, row.row_id, row.row_id + 1}) {
        if (!map.has_row(target)) {
          continue;
        }
        TrajectorySpec spec;
        spec.kind = TrajectoryKind::kRowChange;
        spec.row_id = row.row_id;
        spec.target_row_id = target;
        spec.reverse = reverse;
        spec.speed = sim.speed;
        spec.dt = sim.dt;
        spec.entry_length = sim.turn_lead;
        spec.exit_beyond_last = sim.turn_exit_beyond_last;
        spec.view_side = static_cast<int>(view_sign);
        const TurnPlan plan = plan_turn(map, spec, f, sim.turn_exit_beyond_last);
        if (!(plan.lateral > 1e-6)) {
          continue;
        }
        const double last = landmark_extent(map, f, row.row_id).second;
        spec.start_offset = std::max(0.0, last - sim.turn_lead);
        out.push_back(spec);
      }
    }
  }
  return out;
}

Campaign build_campaign(
  const OrchardMap & map, const SensorConfig & cfg, const SimConfig & sim, std::uint64_t seed,
  const std::string & map_name)
{
  if (static_cast<int>(map.rows().size()) < kStraightRunCount) {
    throw std::invalid_argument("campaign: map needs at least 12 rows");
  }
  Rng rng(derive_seed(seed, {0x5e1ec7}));
  std::vector<int> row_ids;
  for (const RowSpec & r : map.rows()) {
    row_ids.push_back(r.row_id);
  }
  std::sort(row_ids.begin(), row_ids.end());
  std::shuffle(row_ids.begin(), row_ids.end(), rng);
  row_ids.resize(kStraightRunCount);

  std::vector<TrajectorySpec> turns = enumerate_row_changes(map, cfg, sim);
  if (static_cast<int>(turns.size()) < kRowChangeCount) {
    throw std::invalid_argument("campaign: map admits fewer than 43 distinct row changes");
  }
  std::shuffle(turns.begin(), turns.end(), rng);
  turns.resize(kRowChangeCount);
  std::sort(turns.begin(), turns.end(), [](const TrajectorySpec & a, const TrajectorySpec & b) {
    return std::tie(a.row_id, a.reverse, a.target_row_id) < std::tie(b.row_id, b.reverse, b.target_row_id);
  });

  Campaign c;
  for (int i = 0; i < kStraightRunCount; ++i) {
    TrajectorySpec spec;
    spec.kind = TrajectoryKind::kStraightRow;
    spec.row_id = row_ids[i];
    spec.target_row_id = row_ids[i];
    spec.reverse = (i % 2) == 1;
    spec.speed = sim.speed;
    spec.dt = sim.dt;
    spec.view_side = static_cast<int>(view_side_sign(cfg));
    c.straight.push_back(simulate_log(map, spec, cfg, sim, derive_seed(seed, {1, static_cast<std::uint64_t>(i)}), map_name));
  }
  for (int i = 0; i < kRowChangeCount; ++i) {
    c.turns.push_back(
      simulate_log(map, turns[i], cfg, sim, derive_seed(seed, {2, static_cast<std::uint64_t>(i)}), map_name));
  }
  return c;
}

double path_length(const std::vector<Pose2D> & poses)
{
  double total = 0.0;
  for (std::size_t k = 1; k < poses.size(); ++k) {
    total += distance(poses[k].position(), poses[k - 1].position());
  }
  return total;
}

}  // namespace orchard_loc
