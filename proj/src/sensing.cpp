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

#include "orchard_loc/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace orchard_loc
{
namespace
{

constexpr double kInvSqrtTwoPi = 0.3989422804014326779;

void require(bool ok, const char * field, const char * rule)
{
  if (!ok) {
    throw std::invalid_argument(std::string(field) + " " + rule);
  }
}

// Landmarks inside the particle's field of view, the association candidates.
struct Candidate
{
  double range;
  double bearing;
  double width;
};

constexpr std::size_t kMaxCandidates = 64;

std::size_t collect_candidates(
  const Pose2D & pose, const OrchardMap & map, const SensorConfig & cfg, Candidate * out)
{
  std::size_t n = 0;
  const auto & lms = map.landmarks();
  const double half = std::min(cfg.fov_half_angle + cfg.candidate_margin * cfg.sigma_bearing_w, kPi);
  const double range = cfg.max_range + cfg.candidate_margin * cfg.sigma_range_w;
  map.for_each_in_fov(pose, half, range, cfg.view_bearing_offset, [&](std::size_t idx, double r, double b) {
    if (n < kMaxCandidates) {
      out[n++] = {r, b, lms[idx].width};
    }
  });
  return n;
}

double score(const Candidate * cands, std::size_t n, const TrunkObservation & obs, const SensorConfig & cfg)
{
  double best_d2 = std::numeric_limits<double>::infinity();
  const Candidate * best = nullptr;
  for (std::size_t i = 0; i < n; ++i) {
    const double er = (obs.range - cands[i].range) / cfg.sigma_range_w;
    const double eb = wrap_angle(obs.bearing - cands[i].bearing) / cfg.sigma_bearing_w;
    const double d2 = er * er + eb * eb;
    if (d2 < best_d2) {
      best_d2 = d2;
      best = &cands[i];
    }
  }
  if (best == nullptr || best_d2 > cfg.gate) {
    return cfg.obs_floor;
  }
  const double density = gaussian_pdf(obs.range - best->range, cfg.sigma_range_w) *
                         gaussian_pdf(wrap_angle(obs.bearing - best->bearing), cfg.sigma_bearing_w) *
                         gaussian_pdf(obs.width - best->width, cfg.sigma_width_w);
  return std::max(density, cfg.obs_floor);
}

}  // namespace

void SensorConfig::validate() const
{
  require(fov_half_angle > 0.0 && fov_half_angle <= kPi / 2.0, "fov_half_angle", "must be in (0, pi/2]");
  require(max_range > 0.0, "max_range", "must be > 0");
  require(std::isfinite(view_bearing_offset), "view_bearing_offset", "must be finite");
  require(sigma_range >= 0.0, "sigma_range", "must be >= 0");
  require(sigma_bearing >= 0.0, "sigma_bearing", "must be >= 0");
  require(sigma_width >= 0.0, "sigma_width", "must be >= 0");
  require(detect_prob >= 0.0 && detect_prob <= 1.0, "detect_prob", "must be in [0, 1]");
  require(orientation_sigma_sensor >= 0.0, "orientation_sigma_sensor", "must be >= 0");
  require(gnss_sigma >= 0.0, "gnss_sigma", "must be >= 0");
  require(gnss_bias_step_sigma >= 0.0, "gnss_bias_step_sigma", "must be >= 0");
  require(gnss_bias_clamp > 0.0, "gnss_bias_clamp", "must be > 0");
  require(orientation_sigma > 0.0, "orientation_sigma", "must be > 0");
  require(sigma_range_w > 0.0, "sigma_range_w", "must be > 0");
  require(sigma_bearing_w > 0.0, "sigma_bearing_w", "must be > 0");
  require(sigma_width_w > 0.0, "sigma_width_w", "must be > 0");
  require(obs_floor > 0.0, "obs_floor", "must be > 0");
  require(gate > 0.0, "gate", "must be > 0");
  require(candidate_margin >= 0.0, "candidate_margin", "must be >= 0");
}

double gaussian_pdf(double residual, double sigma)
{
  const double z = residual / sigma;
  return kInvSqrtTwoPi / sigma * std::exp(-0.5 * z * z);
}

std::vector<TrunkObservation> observe_trunks(
  const Pose2D & true_pose, const OrchardMap & map, const SensorConfig & cfg, Rng & rng)
{
  std::vector<TrunkObservation> out;
  std::bernoulli_distribution detect(cfg.detect_prob);
  for (const FovHit & hit :
       map.landmarks_in_fov(true_pose, cfg.fov_half_angle, cfg.max_range, cfg.view_bearing_offset)) {
    if (!detect(rng)) {
      continue;
    }
    TrunkObservation obs;
    obs.range = std::max(1e-3, sample_normal(rng, hit.range, cfg.sigma_range));
    obs.bearing = wrap_angle(sample_normal(rng, hit.bearing, cfg.sigma_bearing));
    obs.width = std::max(kMinObservedWidth, sample_normal(rng, map.landmarks()[hit.index].width, cfg.sigma_width));
    out.push_back(obs);
  }
  return out;
}

double observe_orientation(double true_heading, const SensorConfig & cfg, Rng & rng)
{
  return wrap_angle(sample_normal(rng, true_heading, cfg.orientation_sigma_sensor));
}

GnssBiasState step_gnss_bias(const GnssBiasState & state, const SensorConfig & cfg, Rng & rng)
{
  Vec2 b = state.bias;
  b.dx = sample_normal(rng, b.dx, cfg.gnss_bias_step_sigma);
  b.dy = sample_normal(rng, b.dy, cfg.gnss_bias_step_sigma);
  const double n = b.norm();
  if (n > cfg.gnss_bias_clamp) {
    b = (cfg.gnss_bias_clamp / n) * b;
  }
  return {b};
}

Vec2 observe_gnss(const Pose2D & true_pose, const GnssBiasState & state, const SensorConfig & cfg, Rng & rng)
{
  const double x = true_pose.x + state.bias.dx;
  const double y = true_pose.y + state.bias.dy;
  return {sample_normal(rng, x, cfg.gnss_sigma), sample_normal(rng, y, cfg.gnss_sigma)};
}

double trunk_likelihood(
  const Pose2D & particle_pose, const TrunkObservation & obs, const OrchardMap & map, const SensorConfig & cfg)
{
  Candidate cands[kMaxCandidates];
  const std::size_t n = collect_candidates(particle_pose, map, cfg, cands);
  return score(cands, n, obs, cfg);
}

double trunk_log_likelihood(
  const Pose2D & particle_pose, std::span<const TrunkObservation> observations, const OrchardMap & map,
  const SensorConfig & cfg)
{
  if (observations.empty()) {
    return 0.0;
  }
  Candidate cands[kMaxCandidates];
  const std::size_t n = collect_candidates(particle_pose, map, cfg, cands);
  double sum = 0.0;
  for (const TrunkObservation & obs : observations) {
    sum += std::log(score(cands, n, obs, cfg));
  }
  return sum;
}

double orientation_likelihood(double particle_heading, double observed_heading, double sigma)
{
  return gaussian_pdf(angular_displacement(particle_heading, observed_heading), sigma);
}

}  // namespace orchard_loc
