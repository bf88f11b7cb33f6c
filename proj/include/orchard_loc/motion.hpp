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

#ifndef ORCHARD_LOC__MOTION_HPP_
#define ORCHARD_LOC__MOTION_HPP_

#include <optional>
#include <string>
#include <string_view>

#include "orchard_loc/geom.hpp"
#include "orchard_loc/random.hpp"

namespace orchard_loc
{

/// Per-step (translation, rotation) produced by an odometry source.
struct MotionIncrement
{
  double forward = 0.0;  // meters, signed
  double dtheta = 0.0;   // radians, |dtheta| <= pi
};

struct MotionNoise
{
  double sigma_forward_per_meter = 0.05;
  double sigma_forward_floor = 0.01;
  double sigma_dtheta_per_rad = 0.05;
  double sigma_dtheta_floor = 0.01;

  static MotionNoise zero() { return {0.0, 0.0, 0.0, 0.0}; }
};

enum class OdometryMode { kWheel, kWheelImu, kVisual, kGnss };

inline constexpr OdometryMode kAllModes[] = {
  OdometryMode::kWheel, OdometryMode::kWheelImu, OdometryMode::kVisual, OdometryMode::kGnss};

std::string_view to_string(OdometryMode mode);
std::optional<OdometryMode> parse_mode(std::string_view text);

/// Whether the configuration has an orientation sensor (used both for the
/// angular displacement and for orientation weighting). Plain wheel odometry
/// runs without it.
constexpr bool uses_orientation_sensor(OdometryMode mode) { return mode != OdometryMode::kWheel; }

struct OdometryConfig
{
  OdometryMode mode = OdometryMode::kGnss;
  MotionNoise noise;
};

/// Plain wheel odometry: encoder distance and encoder heading change.
MotionIncrement wheel_increment(double dist, double wheel_dtheta);

/// Wheel distance with rotation taken from consecutive orientation readings.
MotionIncrement wheel_imu_increment(double dist, double prev_heading, double curr_heading);

/// Forward translation from the visual source, rotation from orientation readings.
MotionIncrement visual_increment(double forward, double prev_heading, double curr_heading);

/// Displacement between consecutive GNSS fixes, keeping only the component
/// along the current orientation reading.
MotionIncrement gnss_increment(const Vec2 & prev_fix, const Vec2 & curr_fix, double heading, double prev_heading);

/// Samples a noisy increment and applies it rotation first:
/// theta' = theta + d, then translate by f along theta'.
Pose2D propagate(const Pose2D & pose, const MotionIncrement & inc, const MotionNoise & noise, Rng & rng);

}  // namespace orchard_loc

#endif  // ORCHARD_LOC__MOTION_HPP_
