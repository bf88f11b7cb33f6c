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

#ifndef ORCHARD_LOC__SIM_HPP_
#define ORCHARD_LOC__SIM_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "orchard_loc/geom.hpp"
#include "orchard_loc/map.hpp"
#include "orchard_loc/sensing.hpp"

namespace orchard_loc
{

enum class TrajectoryKind { kStraightRow, kRowChange };

std::string_view to_string(TrajectoryKind kind);
std::optional<TrajectoryKind> parse_trajectory_kind(std::string_view text);

struct TrajectorySpec
{
  TrajectoryKind kind = TrajectoryKind::kStraightRow;
  int row_id = 0;
  int target_row_id = 0;  // row_change only
  bool reverse = false;   // travel from the row's end toward its start
  double speed = 0.4;
  double dt = 0.2;
  /// Distance along the row (in travel direction) where the run starts.
  double start_offset = 0.0;
  /// row_change: distance driven into the target row past its first landmark.
  double entry_length = 4.0;
  /// row_change: straight exit beyond the row's last landmark before turning.
  double exit_beyond_last = 2.0;
  /// +1 when the camera looks left of travel, -1 when it looks right. The
  /// lane is on the viewed side of the row and turns wrap toward it.
  int view_side = 1;

  void validate() const;
};

/// Simulator-only settings on top of SensorConfig.
struct SimConfig
{
  double speed = 0.4;
  double dt = 0.2;
  double wheel_sigma_dist_frac = 0.02;
  double wheel_sigma_dtheta = 0.003;
  double wheel_drift_per_meter = 0.5 * kPi / 180.0;
  double wheel_turn_scale_sigma = 0.15;  // per-log scale error on wheel rotation (skid-steer slip)
  double visual_sigma_floor = 0.005;
  double visual_sigma_frac = 0.03;
  double gnss_corrected_sigma = 0.01;
  double gnss_corrected_jitter = 0.0;  // extra mast-sway jitter, off by default
  double gnss_initial_bias_sigma = 0.3;
  double trunk_growth = 0.003;         // true widths exceed the mapped ones by this
  Vec2 gnss_corrected_mount{-0.3, 0.0};  // vehicle frame; the plain receiver sits at the origin
  double turn_exit_beyond_last = 2.0;
  double turn_lead = 4.0;  // row_change runs start this far before the last landmark

  /// Zero-noise variant (perfect sensors, no drift, no bias walk).
  static SimConfig noiseless();
  void validate() const;
};

/// Perfect sensors: zero noise on every channel, detection certain.
SensorConfig noiseless_sensor(SensorConfig cfg);

enum class RecordKind { kTruth, kWheel, kImu, kGnss, kGnssCorrected, kVisual, kTrunks };

std::string_view to_string(RecordKind kind);
std::optional<RecordKind> parse_record_kind(std::string_view text);

struct WheelReading
{
  double dist = 0.0;
  double dtheta = 0.0;
};
struct ImuReading
{
  double heading = 0.0;
};
struct VisualReading
{
  double forward = 0.0;
};
struct TrunksReading
{
  std::vector<TrunkObservation> obs;
};

using RecordData = std::variant<Pose2D, WheelReading, ImuReading, Vec2, VisualReading, TrunksReading>;

struct SensorRecord
{
  double t = 0.0;
  RecordKind kind = RecordKind::kTruth;
  RecordData data;
};

struct LogHeader
{
  std::string units = "m,rad,s";
  std::uint64_t seed = 0;
  std::string map;
  TrajectorySpec trajectory;
};

/// A replayable log plus the simulator's hidden state (receiver bias per step).
struct SimulatedLog
{
  LogHeader header;
  std::vector<SensorRecord> records;
  std::vector<Vec2> bias;  // one per time step
};

/// One time step of a log, all sensors gathered.
struct LogStep
{
  double t = 0.0;
  Pose2D truth;
  std::optional<WheelReading> wheel;
  std::optional<double> imu;
  std::optional<Vec2> gnss;
  std::optional<Vec2> gnss_corrected;
  std::optional<double> visual;
  std::vector<TrunkObservation> trunks;
};

/// Groups records into steps; each truth record opens a step. Throws
/// std::runtime_error if time goes backwards or a step lacks truth.
std::vector<LogStep> group_steps(const std::vector<SensorRecord> & records);

/// Poses one dt apart. Heading at pose k > 0 is the direction of the chord
/// from pose k-1, so rotate-then-translate integration reproduces the path.
std::vector<Pose2D> generate_trajectory(const OrchardMap & map, const TrajectorySpec & spec);

SimulatedLog simulate_log(
  const OrchardMap & map, const TrajectorySpec & spec, const SensorConfig & cfg, const SimConfig & sim,
  std::uint64_t seed, std::string map_name = "");

struct Campaign
{
  std::vector<SimulatedLog> straight;
  std::vector<SimulatedLog> turns;
};

inline constexpr int kStraightRunCount = 12;
inline constexpr int kRowChangeCount = 43;

/// All row changes the map admits: turning around a row end toward the
/// viewed side into the same row or the next one over.
std::vector<TrajectorySpec> enumerate_row_changes(const OrchardMap & map, const SensorConfig & cfg, const SimConfig & sim);

/// 12 straight-row runs and 43 distinct row changes.
Campaign build_campaign(
  const OrchardMap & map, const SensorConfig & cfg, const SimConfig & sim, std::uint64_t seed,
  const std::string & map_name = "");

/// Path length of a pose sequence.
double path_length(const std::vector<Pose2D> & poses);

}  // namespace orchard_loc

#endif  // ORCHARD_LOC__SIM_HPP_
