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

#ifndef ORCHARD_LOC__SENSING_HPP_
#define ORCHARD_LOC__SENSING_HPP_

#include <span>
#include <vector>

#include "orchard_loc/geom.hpp"
#include "orchard_loc/map.hpp"
#include "orchard_loc/random.hpp"

namespace orchard_loc
{

struct TrunkObservation
{
  double range = 0.0;    // meters
  double bearing = 0.0;  // radians, relative to the view axis
  double width = 0.0;    // meters
};

/// Sensor geometry, synthetic sensor noise, and the weighting densities used
/// by the filter. The geometry fields are shared: a particle "sees" through
/// the same field of view the simulated camera has.
struct SensorConfig
{
  double fov_half_angle = kPi / 6.0;
  double max_range = 4.0;
  double view_bearing_offset = kPi / 2.0;  // left-facing camera

  // synthetic observation noise
  double sigma_range = 0.05;
  double sigma_bearing = 0.02;
  double sigma_width = 0.008;
  double detect_prob = 0.95;
  double orientation_sigma_sensor = 0.02;
  double gnss_sigma = 0.03;
  double gnss_bias_step_sigma = 0.005;
  double gnss_bias_clamp = 1.0;

  // weighting densities
  double orientation_sigma = 0.4;
  double sigma_range_w = 1.5;
  double sigma_bearing_w = 0.75;
  double sigma_width_w = 0.015;
  double obs_floor = 1e-6;
  double gate = 9.0;  // chi-square, 2 dof, on (range, bearing)
  /// Candidates come from the field of view grown by this many weighting
  /// sigmas in range and bearing, so trees at the edge still associate.
  double candidate_margin = 1.0;

  /// Throws std::invalid_argument naming the first bad field.
  void validate() const;
};

inline constexpr double kMinObservedWidth = 0.005;
inline constexpr double kDefaultOrientationWeightSigma = 0.4;

struct GnssBiasState
{
  Vec2 bias;
};

double gaussian_pdf(double residual, double sigma);

std::vector<TrunkObservation> observe_trunks(
  const Pose2D & true_pose, const OrchardMap & map, const SensorConfig & cfg, Rng & rng);

double observe_orientation(double true_heading, const SensorConfig & cfg, Rng & rng);

/// Random-walk step of the receiver bias, projected back onto the clamp disc.
GnssBiasState step_gnss_bias(const GnssBiasState & state, const SensorConfig & cfg, Rng & rng);

Vec2 observe_gnss(const Pose2D & true_pose, const GnssBiasState & state, const SensorConfig & cfg, Rng & rng);

/// Likelihood of one trunk observation for a particle. The observation is
/// associated with the visible landmark of smallest Mahalanobis distance in
/// (range, bearing); no candidate inside the gate scores cfg.obs_floor.
double trunk_likelihood(
  const Pose2D & particle_pose, const TrunkObservation & obs, const OrchardMap & map, const SensorConfig & cfg);

/// Sum of log trunk_likelihood over all observations; the visible set is
/// computed once for the particle.
double trunk_log_likelihood(
  const Pose2D & particle_pose, std::span<const TrunkObservation> observations, const OrchardMap & map,
  const SensorConfig & cfg);

/// Gaussian density of the wrapped heading error.
double orientation_likelihood(
  double particle_heading, double observed_heading, double sigma = kDefaultOrientationWeightSigma);

}  // namespace orchard_loc

#endif  // ORCHARD_LOC__SENSING_HPP_
