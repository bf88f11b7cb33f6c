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

#ifndef ORCHARD_LOC__EVAL_HPP_
#define ORCHARD_LOC__EVAL_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "orchard_loc/filter.hpp"
#include "orchard_loc/map.hpp"
#include "orchard_loc/motion.hpp"
#include "orchard_loc/sim.hpp"

namespace orchard_loc
{

// Protocol constants.
inline constexpr double kSuccessDistance = 0.5;
inline constexpr double kLargeAreaSide = 30.0;  // 900 m^2
inline constexpr double kSmallAreaSide = 10.0;  // 100 m^2
inline constexpr double kInitHeadingHalfwidth = 5.0 * kPi / 180.0;
inline constexpr double kLargeAreaCenterJitter = 10.0;  // square still encloses the start
inline constexpr double kClusterPosSigma = 0.1;
inline constexpr double kClusterHeadingSigma = 0.02;
inline constexpr double kStartMinRemaining = 30.0;  // meters of log left after a start
inline constexpr int kSuiteStarts = 40;
inline constexpr int kTrialsPerStart = 20;

enum class InitArea { kLarge, kSmall };
enum class SuiteProtocol { kRowsLarge, kRowsSmall, kTurns };

std::string_view to_string(SuiteProtocol protocol);
std::optional<SuiteProtocol> parse_protocol(std::string_view text);

/// Steps one filter through a log with a fixed odometry configuration.
/// Each advance() resamples (if due) after the previous step, then predicts
/// with the increment into the next step and weighs on its observations.
class Replay
{
public:
  Replay(
    const OrchardMap & filter_map, std::span<const LogStep> steps, OdometryMode mode, FilterParams params,
    std::uint64_t seed);

  void init_area(std::size_t start_step, const Vec2 & center, double side, double row_heading, double heading_halfwidth);
  void init_cluster(std::size_t start_step, const Pose2D & pose, double pos_sigma, double heading_sigma);

  /// Processes the next step. False at the end of the log.
  bool advance();
  bool at_end() const { return current_ + 1 >= steps_.size(); }

  std::size_t current_step() const { return current_; }
  const LogStep & step() const { return steps_[current_]; }
  const ParticleSet & particles() const { return set_; }
  GroupReport groups() const { return group_particles(set_, params_); }
  Pose2D estimate() const { return orchard_loc::estimate(set_); }
  double error() const;
  bool degenerate_seen() const { return degenerate_seen_; }
  OdometryMode mode() const { return mode_; }

  const FilterParams & params() const { return params_; }
  /// New parameters apply from the next step on (particle_count at the next init).
  void set_params(const FilterParams & params) { params_ = params; }

  MotionIncrement increment(std::size_t k) const;

private:
  void weigh();

  const OrchardMap * map_;
  std::span<const LogStep> steps_;
  OdometryMode mode_;
  FilterParams params_;
  Rng rng_;
  ParticleSet set_;
  std::size_t current_ = 0;
  bool degenerate_seen_ = false;
};

/// Truth path length between two steps of a log.
double truth_distance(std::span<const LogStep> steps, std::size_t from, std::size_t to);

/// Direction of the row nearest the pose, oriented to agree with its heading.
double row_direction_near(const OrchardMap & map, const Pose2D & pose);

struct TrialResult
{
  OdometryMode mode = OdometryMode::kGnss;
  int start_id = 0;
  int trial_index = 0;
  bool converged = false;
  bool success = false;
  double distance_traveled = 0.0;
  double final_error = 0.0;
};

TrialResult run_row_trial(
  std::span<const LogStep> steps, const OrchardMap & filter_map, const FilterParams & params, OdometryMode mode,
  InitArea init, std::size_t start_step, std::uint64_t seed);

/// Tracking through a row change from a tight cluster at the true start.
/// Converged is reported true: the trial starts from a single group.
TrialResult run_turn_trial(
  std::span<const LogStep> steps, const LogHeader & header, const OrchardMap & filter_map,
  const FilterParams & params, OdometryMode mode, std::uint64_t seed);

struct StartPoint
{
  int start_id = 0;
  std::size_t log_index = 0;
  std::size_t step = 0;
};

/// Stratified starts: the eligible stretch of every straight log (at least
/// kStartMinRemaining left to drive) is laid end to end, cut into `count`
/// equal arcs and one uniform draw taken per arc.
std::vector<StartPoint> select_starts(
  const std::vector<std::vector<LogStep>> & straight_logs, int count, std::uint64_t seed);

struct SuiteSummary
{
  OdometryMode mode = OdometryMode::kGnss;
  SuiteProtocol protocol = SuiteProtocol::kRowsLarge;
  double accuracy = 0.0;
  double mean_distance = 0.0;
  double std_distance = 0.0;
  int trial_count = 0;
  int success_count = 0;
};

struct SuiteResult
{
  SuiteSummary summary;
  std::vector<TrialResult> trials;
};

/// Replay-ready campaign: grouped steps and headers for each log.
struct CampaignData
{
  std::vector<std::vector<LogStep>> straight;
  std::vector<LogHeader> straight_headers;
  std::vector<std::vector<LogStep>> turns;
  std::vector<LogHeader> turn_headers;
};

CampaignData to_campaign_data(const Campaign & campaign);

struct SuiteOptions
{
  int starts = kSuiteStarts;
  int trials_per_start = kTrialsPerStart;
  /// Cap on turn logs used (negative = all).
  int max_turns = -1;
  unsigned threads = 0;  // 0 = hardware concurrency
};

/// Seed of one trial: hash(master, start_id, trial_index).
std::uint64_t trial_seed(std::uint64_t master, int start_id, int trial_index);

SuiteResult run_suite(
  const CampaignData & campaign, const OrchardMap & filter_map, const FilterParams & params, OdometryMode mode,
  SuiteProtocol protocol, std::uint64_t seed, const SuiteOptions & options = {});

/// Accuracy over all trials; distance statistics over successful trials.
SuiteSummary summarize(std::span<const TrialResult> trials, OdometryMode mode, SuiteProtocol protocol);

nlohmann::json to_json(const TrialResult & r, SuiteProtocol protocol, const std::string & fingerprint);
nlohmann::json to_json(const SuiteSummary & s);

struct TableReport
{
  std::vector<nlohmann::json> rows;  // mode, accuracy, mean, std
  std::string text;
};

/// Rows in the order wheel, wheel_imu, visual, gnss; accuracy to 3
/// decimals, distances to 2. Throws std::invalid_argument when empty.
TableReport summarize_tables(std::span<const SuiteSummary> summaries);

// ---------------------------------------------------------------------------
// GNSS drift analysis

struct TimedVec2
{
  double t = 0.0;
  Vec2 v;
};

/// Degree-1 least-squares fit over each point and up to 5 neighbours per
/// side, evaluated at the point's own time. Near the ends the window shrinks
/// symmetrically, never below 3 points. Throws for fewer than 3 readings.
std::vector<TimedVec2> smooth_positions(std::span<const TimedVec2> series);

struct OffsetComponents
{
  double axial = 0.0;       // along heading
  double transverse = 0.0;  // perpendicular, positive left
  double euclidean = 0.0;
};

OffsetComponents decompose_offset(const Vec2 & offset, double heading);

struct Quartiles
{
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

/// Linear-interpolated quartiles. Throws for empty input.
Quartiles quartiles(std::vector<double> values);

struct DriftReading
{
  double t = 0.0;
  OffsetComponents offset;
};

struct DriftStats
{
  std::vector<DriftReading> readings;
  std::vector<double> rates;  // |d euclidean| / dt, one per consecutive pair
  Quartiles axial;
  Quartiles transverse;
  Quartiles euclidean;
  Quartiles rate;
};

/// Offset of the plain receiver from where the corrected one says it should
/// be. mounting_offset is the plain antenna's position relative to the
/// corrected antenna, in the vehicle frame. Throws std::invalid_argument if a
/// stream is missing.
DriftStats gnss_offset_series(std::span<const LogStep> steps, const Vec2 & mounting_offset);

nlohmann::json to_json(const Quartiles & q);
nlohmann::json drift_summary_json(const DriftStats & stats);

}  // namespace orchard_loc

#endif  // ORCHARD_LOC__EVAL_HPP_
