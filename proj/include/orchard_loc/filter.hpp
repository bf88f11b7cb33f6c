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

#ifndef ORCHARD_LOC__FILTER_HPP_
#define ORCHARD_LOC__FILTER_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "orchard_loc/geom.hpp"
#include "orchard_loc/map.hpp"
#include "orchard_loc/motion.hpp"
#include "orchard_loc/random.hpp"
#include "orchard_loc/sensing.hpp"

namespace orchard_loc
{

struct Particle
{
  Pose2D pose;
  double weight = 0.0;
};

struct ParticleSet
{
  std::vector<Particle> particles;
  bool normalized = false;

  std::size_t size() const { return particles.size(); }
  double total_weight() const;
  double effective_sample_size() const;
};

struct FilterParams
{
  int particle_count = 3000;
  double group_link_distance = 0.2;
  double convergence_weight_fraction = 0.99;
  double resample_ess_fraction = 0.5;
  double width_inflation = kDefaultWidthInflation;
  SensorConfig sensor;
  MotionNoise motion;

  /// Throws std::invalid_argument naming the first bad field.
  void validate() const;
};

struct ParticleGroup
{
  std::vector<std::size_t> members;  // ascending particle indices
  double weight = 0.0;
  Pose2D centroid;
};

struct GroupReport
{
  std::vector<ParticleGroup> groups;  // ordered by lowest member index
  std::size_t heaviest = 0;
  bool converged = false;
};

/// Uniform over the axis-aligned square of side `side` centred on
/// area_center, headings uniform in row_heading +- heading_halfwidth.
ParticleSet init_area(
  const Vec2 & area_center, double side, double row_heading, double heading_halfwidth, int n, Rng & rng);

/// Gaussian cluster around pose.
ParticleSet init_cluster(const Pose2D & pose, double pos_sigma, double heading_sigma, int n, Rng & rng);

/// Propagates every particle through the motion model; weights untouched.
void predict(ParticleSet & set, const MotionIncrement & inc, const MotionNoise & noise, Rng & rng);

/// Multiplies weights by the trunk likelihoods and, when a heading reading is
/// present, the orientation likelihood, then normalizes. With nothing to
/// weigh on, weights are left as they are. Returns true when every
/// unnormalized weight was <= 1e-300 and the set was reset to uniform.
bool update_weights(
  ParticleSet & set, std::span<const TrunkObservation> observations, std::optional<double> observed_heading,
  const OrchardMap & map, const SensorConfig & cfg);

/// Systematic resampling, triggered when ESS < resample_ess_fraction * N.
/// Returns true when it resampled.
bool resample(ParticleSet & set, const FilterParams & params, Rng & rng);

/// Single-linkage grouping on (x, y) with the configured link distance.
GroupReport group_particles(const ParticleSet & set, const FilterParams & params);

/// Pose of the highest-weighted particle; ties go to the lowest index.
Pose2D estimate(const ParticleSet & set);
std::size_t estimate_index(const ParticleSet & set);

void normalize(ParticleSet & set);

}  // namespace orchard_loc

#endif  // ORCHARD_LOC__FILTER_HPP_
