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

#include "orchard_loc/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <functional>
#include <mutex>
#include <thread>

#include "orchard_loc/log_io.hpp"

namespace orchard_loc
{
namespace
{

using nlohmann::json;

double point_segment_distance(const Vec2 & p, const Vec2 & a, const Vec2 & b)
{
  const Vec2 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.dot(ab), 0.0, 1.0);
  return distance(p, a + t * ab);
}

template <typename T>
const T & need(const std::optional<T> & v, const char * stream, std::size_t k)
{
  if (!v) {
    throw std::runtime_error(std::string("log step ") + std::to_string(k) + " lacks a " + stream + " reading");
  }
  return *v;
}

void run_parallel(std::size_t jobs, unsigned threads, const std::function<void(std::size_t)> & fn)
{
  if (threads == 0) {
    threads = std::max(1u, std::thread::hardware_concurrency());
  }
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(jobs, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) {
            failure = std::current_exception();
          }
        }
      }
    });
  }
  for (std::thread & t : pool) {
    t.join();
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
}

std::string format_fixed(double v, int decimals)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

}  // namespace

std::string_view to_string(SuiteProtocol protocol)
{
  switch (protocol) {
    case SuiteProtocol::kRowsLarge:
      return "rows-large";
    case SuiteProtocol::kRowsSmall:
      return "rows-small";
    case SuiteProtocol::kTurns:
      return "turns";
  }
  return "?";
}

std::optional<SuiteProtocol> parse_protocol(std::string_view text)
{
  for (SuiteProtocol p : {SuiteProtocol::kRowsLarge, SuiteProtocol::kRowsSmall, SuiteProtocol::kTurns}) {
    if (to_string(p) == text) {
      return p;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

Replay::Replay(
  const OrchardMap & filter_map, std::span<const LogStep> steps, OdometryMode mode, FilterParams params,
  std::uint64_t seed)
: map_(&filter_map), steps_(steps), mode_(mode), params_(std::move(params)), rng_(seed)
{
  if (steps_.empty()) {
    throw std::invalid_argument("replay: empty log");
  }
}

void Replay::init_area(
  std::size_t start_step, const Vec2 & center, double side, double row_heading, double heading_halfwidth)
{
  if (start_step >= steps_.size()) {
    throw std::out_of_range("replay: start step outside the log");
  }
  current_ = start_step;
  set_ = orchard_loc::init_area(center, side, row_heading, heading_halfwidth, params_.particle_count, rng_);
  weigh();
}

void Replay::init_cluster(std::size_t start_step, const Pose2D & pose, double pos_sigma, double heading_sigma)
{
  if (start_step >= steps_.size()) {
    throw std::out_of_range("replay: start step outside the log");
  }
  current_ = start_step;
  set_ = orchard_loc::init_cluster(pose, pos_sigma, heading_sigma, params_.particle_count, rng_);
  weigh();
}

MotionIncrement Replay::increment(std::size_t k) const
{
  const LogStep & cur = steps_[k];
  const LogStep & prev = steps_[k - 1];
  switch (mode_) {
    case OdometryMode::kWheel: {
      const WheelReading & w = need(cur.wheel, "wheel", k);
      return wheel_increment(w.dist, w.dtheta);
    }
    case OdometryMode::kWheelImu:
      return wheel_imu_increment(need(cur.wheel, "wheel", k).dist, need(prev.imu, "imu", k - 1), need(cur.imu, "imu", k));
    case OdometryMode::kVisual:
      return visual_increment(need(cur.visual, "visual", k), need(prev.imu, "imu", k - 1), need(cur.imu, "imu", k));
    case OdometryMode::kGnss:
      return gnss_increment(
        need(prev.gnss, "gnss", k - 1), need(cur.gnss, "gnss", k), need(cur.imu, "imu", k), need(prev.imu, "imu", k - 1));
  }
  return {};
}

void Replay::weigh()
{
  const LogStep & s = steps_[current_];
  std::optional<double> heading;
  if (uses_orientation_sensor(mode_)) {
    heading = need(s.imu, "imu", current_);
  }
  degenerate_seen_ = update_weights(set_, s.trunks, heading, *map_, params_.sensor) || degenerate_seen_;
}

bool Replay::advance()
{
  if (at_end()) {
    return false;
  }
  resample(set_, params_, rng_);
  ++current_;
  predict(set_, increment(current_), params_.motion, rng_);
  weigh();
  return true;
}

double Replay::error() const { return distance(estimate().position(), step().truth.position()); }

double truth_distance(std::span<const LogStep> steps, std::size_t from, std::size_t to)
{
  double total = 0.0;
  for (std::size_t k = from + 1; k <= to && k < steps.size(); ++k) {
    total += distance(steps[k].truth.position(), steps[k - 1].truth.position());
  }
  return total;
}

double row_direction_near(const OrchardMap & map, const Pose2D & pose)
{
  const RowSpec * best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const RowSpec & r : map.rows()) {
    const double d = point_segment_distance(pose.position(), r.start, r.end);
    if (d < best_d) {
      best_d = d;
      best = &r;
    }
  }
  if (best == nullptr) {
    return pose.theta;
  }
  const double h = best->heading();
  return std::abs(angular_displacement(h, pose.theta)) > kPi / 2.0 ? wrap_angle(h + kPi) : h;
}

TrialResult run_row_trial(
  std::span<const LogStep> steps, const OrchardMap & filter_map, const FilterParams & params, OdometryMode mode,
  InitArea init, std::size_t start_step, std::uint64_t seed)
{
  if (start_step >= steps.size()) {
    throw std::out_of_range("row trial: start point outside the log");
  }
  TrialResult result;
  result.mode = mode;
  const Pose2D & start = steps[start_step].truth;
  const double heading = row_direction_near(filter_map, start);

  Replay replay(filter_map, steps, mode, params, seed);
  if (init == InitArea::kLarge) {
    Rng jitter(derive_seed(seed, {0xa5ea}));
    const Vec2 center = start.position() + Vec2{
                                             sample_uniform(jitter, -kLargeAreaCenterJitter, kLargeAreaCenterJitter),
                                             sample_uniform(jitter, -kLargeAreaCenterJitter, kLargeAreaCenterJitter)};
    replay.init_area(start_step, center, kLargeAreaSide, heading, kInitHeadingHalfwidth);
  } else {
    const Vec2 & fix = need(steps[start_step].gnss, "gnss", start_step);
    replay.init_area(start_step, fix, kSmallAreaSide, heading, kInitHeadingHalfwidth);
  }

  while (true) {
    if (replay.groups().converged) {
      result.converged = true;
      result.final_error = replay.error();
      result.success = result.final_error <= kSuccessDistance;
      result.distance_traveled = truth_distance(steps, start_step, replay.current_step());
      return result;
    }
    if (!replay.advance()) {
      break;
    }
  }
  result.final_error = replay.error();
  result.distance_traveled = truth_distance(steps, start_step, steps.size() - 1);
  return result;
}

TrialResult run_turn_trial(
  std::span<const LogStep> steps, const LogHeader & header, const OrchardMap & filter_map,
  const FilterParams & params, OdometryMode mode, std::uint64_t seed)
{
  if (header.trajectory.kind != TrajectoryKind::kRowChange) {
    throw std::invalid_argument("turn trial: log is not a row_change log");
  }
  Replay replay(filter_map, steps, mode, params, seed);
  replay.init_cluster(0, steps.front().truth, kClusterPosSigma, kClusterHeadingSigma);
  while (replay.advance()) {
  }
  TrialResult result;
  result.mode = mode;
  result.converged = true;
  result.final_error = replay.error();
  result.success = result.final_error <= kSuccessDistance;
  result.distance_traveled = truth_distance(steps, 0, steps.size() - 1);
  return result;
}

std::vector<StartPoint> select_starts(const std::vector<std::vector<LogStep>> & straight_logs, int count, std::uint64_t seed)
{
  if (count < 1) {
    throw std::invalid_argument("select_starts: count must be >= 1");
  }
  std::vector<std::vector<double>> cumulative(straight_logs.size());
  std::vector<double> eligible(straight_logs.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < straight_logs.size(); ++i) {
    const auto & steps = straight_logs[i];
    auto & cum = cumulative[i];
    cum.assign(steps.size(), 0.0);
    for (std::size_t k = 1; k < steps.size(); ++k) {
      cum[k] = cum[k - 1] + distance(steps[k].truth.position(), steps[k - 1].truth.position());
    }
    eligible[i] = steps.empty() ? 0.0 : std::max(0.0, cum.back() - kStartMinRemaining);
    total += eligible[i];
  }
  if (!(total > 0.0)) {
    throw std::invalid_argument("select_starts: no log is long enough");
  }
  Rng rng(seed);
  const double arc = total / count;
  std::vector<StartPoint> starts;
  for (int j = 0; j < count; ++j) {
    double u = (j + sample_uniform(rng, 0.0, 1.0)) * arc;
    std::size_t i = 0;
    while (i + 1 < eligible.size() && u >= eligible[i]) {
      u -= eligible[i];
      ++i;
    }
    const auto & cum = cumulative[i];
    const auto it = std::lower_bound(cum.begin(), cum.end(), std::min(u, eligible[i]));
    starts.push_back({j, i, static_cast<std::size_t>(it - cum.begin())});
  }
  return starts;
}

CampaignData to_campaign_data(const Campaign & campaign)
{
  CampaignData d;
  for (const SimulatedLog & log : campaign.straight) {
    d.straight.push_back(group_steps(log.records));
    d.straight_headers.push_back(log.header);
  }
  for (const SimulatedLog & log : campaign.turns) {
    d.turns.push_back(group_steps(log.records));
    d.turn_headers.push_back(log.header);
  }
  return d;
}

std::uint64_t trial_seed(std::uint64_t master, int start_id, int trial_index)
{
  return derive_seed(master, {static_cast<std::uint64_t>(start_id), static_cast<std::uint64_t>(trial_index)});
}

SuiteResult run_suite(
  const CampaignData & campaign, const OrchardMap & filter_map, const FilterParams & params, OdometryMode mode,
  SuiteProtocol protocol, std::uint64_t seed, const SuiteOptions & options)
{
  params.validate();
  struct Job
  {
    int start_id;
    int trial_index;
    std::size_t log_index;
    std::size_t step;
  };
  std::vector<Job> jobs;
  if (protocol == SuiteProtocol::kTurns) {
    std::size_t n = campaign.turns.size();
    if (options.max_turns >= 0) {
      n = std::min<std::size_t>(n, static_cast<std::size_t>(options.max_turns));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (int t = 0; t < options.trials_per_start; ++t) {
        jobs.push_back({static_cast<int>(i), t, i, 0});
      }
    }
  } else {
    const auto starts = select_starts(campaign.straight, options.starts, derive_seed(seed, {0x57a27}));
    for (const StartPoint & s : starts) {
      for (int t = 0; t < options.trials_per_start; ++t) {
        jobs.push_back({s.start_id, t, s.log_index, s.step});
      }
    }
  }

  SuiteResult result;
  result.trials.resize(jobs.size());
  run_parallel(jobs.size(), options.threads, [&](std::size_t i) {
    const Job & job = jobs[i];
    const std::uint64_t s = trial_seed(seed, job.start_id, job.trial_index);
    TrialResult r;
    if (protocol == SuiteProtocol::kTurns) {
      r = run_turn_trial(
        campaign.turns[job.log_index], campaign.turn_headers[job.log_index], filter_map, params, mode, s);
    } else {
      const InitArea init = protocol == SuiteProtocol::kRowsLarge ? InitArea::kLarge : InitArea::kSmall;
      r = run_row_trial(campaign.straight[job.log_index], filter_map, params, mode, init, job.step, s);
    }
    r.start_id = job.start_id;
    r.trial_index = job.trial_index;
    result.trials[i] = r;
  });
  result.summary = summarize(result.trials, mode, protocol);
  return result;
}

SuiteSummary summarize(std::span<const TrialResult> trials, OdometryMode mode, SuiteProtocol protocol)
{
  SuiteSummary s;
  s.mode = mode;
  s.protocol = protocol;
  s.trial_count = static_cast<int>(trials.size());
  std::vector<double> dist;
  for (const TrialResult & t : trials) {
    if (t.success) {
      ++s.success_count;
      dist.push_back(t.distance_traveled);
    }
  }
  s.accuracy = trials.empty() ? 0.0 : static_cast<double>(s.success_count) / static_cast<double>(s.trial_count);
  if (!dist.empty()) {
    s.mean_distance = std::accumulate(dist.begin(), dist.end(), 0.0) / static_cast<double>(dist.size());
  }
  if (dist.size() > 1) {
    double ss = 0.0;
    for (double d : dist) {
      ss += (d - s.mean_distance) * (d - s.mean_distance);
    }
    s.std_distance = std::sqrt(ss / static_cast<double>(dist.size() - 1));
  }
  return s;
}

json to_json(const TrialResult & r, SuiteProtocol protocol, const std::string & fingerprint)
{
  return {
    {"protocol", to_string(protocol)},
    {"odometry_mode", to_string(r.mode)},
    {"start_id", r.start_id},
    {"trial_index", r.trial_index},
    {"converged", r.converged},
    {"success", r.success},
    {"distance_traveled", r.distance_traveled},
    {"final_error", r.final_error},
    {"params_fingerprint", fingerprint}};
}

json to_json(const SuiteSummary & s)
{
  return {
    {"protocol", to_string(s.protocol)},
    {"odometry_mode", to_string(s.mode)},
    {"accuracy", s.accuracy},
    {"mean_distance", s.mean_distance},
    {"std_distance", s.std_distance},
    {"trial_count", s.trial_count},
    {"success_count", s.success_count}};
}

TableReport summarize_tables(std::span<const SuiteSummary> summaries)
{
  if (summaries.empty()) {
    throw std::invalid_argument("summarize_tables: no summaries");
  }
  std::vector<SuiteSummary> ordered(summaries.begin(), summaries.end());
  std::stable_sort(ordered.begin(), ordered.end(), [](const SuiteSummary & a, const SuiteSummary & b) {
    return static_cast<int>(a.mode) < static_cast<int>(b.mode);
  });
  TableReport report;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %9s %13s %14s\n", "Odometry", "Accuracy", "Distance (m)", "Std. Dev. (m)");
  report.text += line;
  for (const SuiteSummary & s : ordered) {
    const std::string acc = format_fixed(s.accuracy, 3);
    const std::string mean = format_fixed(s.mean_distance, 2);
    const std::string sd = format_fixed(s.std_distance, 2);
    std::snprintf(
      line, sizeof(line), "%-10s %9s %13s %14s\n", std::string(to_string(s.mode)).c_str(), acc.c_str(), mean.c_str(),
      sd.c_str());
    report.text += line;
    report.rows.push_back(
      {{"odometry_mode", to_string(s.mode)},
       {"protocol", to_string(s.protocol)},
       {"accuracy", acc},
       {"mean_distance", mean},
       {"std_distance", sd}});
  }
  return report;
}

// ---------------------------------------------------------------------------

std::vector<TimedVec2> smooth_positions(std::span<const TimedVec2> series)
{
  const std::size_t n = series.size();
  if (n < 3) {
    throw std::invalid_argument("smooth_positions: need at least 3 readings");
  }
  std::vector<TimedVec2> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t h = std::min<std::size_t>({5, i, n - 1 - i});
    std::size_t lo = i - h;
    std::size_t hi = i + h;
    if (h == 0) {
      lo = (i == 0) ? 0 : n - 3;
      hi = lo + 2;
    }
    const double count = static_cast<double>(hi - lo + 1);
    double mt = 0.0;
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) {
      mt += series[k].t;
      mx += series[k].v.dx;
      my += series[k].v.dy;
    }
    mt /= count;
    mx /= count;
    my /= count;
    double stt = 0.0;
    double stx = 0.0;
    double sty = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) {
      const double dt = series[k].t - mt;
      stt += dt * dt;
      stx += dt * (series[k].v.dx - mx);
      sty += dt * (series[k].v.dy - my);
    }
    const double dt = series[i].t - mt;
    out[i].t = series[i].t;
    out[i].v = stt > 0.0 ? Vec2{mx + stx / stt * dt, my + sty / stt * dt} : Vec2{mx, my};
  }
  return out;
}

OffsetComponents decompose_offset(const Vec2 & offset, double heading)
{
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  OffsetComponents o;
  o.axial = offset.dx * c + offset.dy * s;
  o.transverse = -offset.dx * s + offset.dy * c;
  o.euclidean = offset.norm();
  return o;
}

Quartiles quartiles(std::vector<double> values)
{
  if (values.empty()) {
    throw std::invalid_argument("quartiles: empty input");
  }
  std::sort(values.begin(), values.end());
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return {at(0.25), at(0.5), at(0.75)};
}

DriftStats gnss_offset_series(std::span<const LogStep> steps, const Vec2 & mounting_offset)
{
  std::vector<TimedVec2> plain;
  std::vector<TimedVec2> corrected;
  std::vector<double> heading;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const LogStep & s = steps[k];
    if (!s.gnss || !s.gnss_corrected || !s.imu) {
      throw std::invalid_argument(
        "drift analysis: step " + std::to_string(k) + " lacks a gnss, gnss_corrected or imu reading");
    }
    plain.push_back({s.t, *s.gnss});
    corrected.push_back({s.t, *s.gnss_corrected});
    heading.push_back(*s.imu);
  }
  const auto plain_s = smooth_positions(plain);
  const auto corrected_s = smooth_positions(corrected);

  DriftStats stats;
  std::vector<double> ax;
  std::vector<double> tr;
  std::vector<double> eu;
  for (std::size_t i = 0; i < plain_s.size(); ++i) {
    const Vec2 expected = corrected_s[i].v + rotate(mounting_offset, heading[i]);
    const OffsetComponents o = decompose_offset(plain_s[i].v - expected, heading[i]);
    stats.readings.push_back({plain_s[i].t, o});
    ax.push_back(o.axial);
    tr.push_back(o.transverse);
    eu.push_back(o.euclidean);
    if (i > 0) {
      const double dt = stats.readings[i].t - stats.readings[i - 1].t;
      stats.rates.push_back(std::abs(o.euclidean - stats.readings[i - 1].offset.euclidean) / dt);
    }
  }
  stats.axial = quartiles(ax);
  stats.transverse = quartiles(tr);
  stats.euclidean = quartiles(eu);
  stats.rate = quartiles(stats.rates);
  return stats;
}

json to_json(const Quartiles & q) { return {{"q1", q.q1}, {"median", q.median}, {"q3", q.q3}}; }

json drift_summary_json(const DriftStats & stats)
{
  return {
    {"readings", stats.readings.size()},
    {"axial", to_json(stats.axial)},
    {"transverse", to_json(stats.transverse)},
    {"euclidean", to_json(stats.euclidean)},
    {"rate", to_json(stats.rate)}};
}

}  // namespace orchard_loc
