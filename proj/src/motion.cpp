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

#include "orchard_loc/motion.hpp"

#include <algorithm>
#include <cmath>

namespace orchard_loc
{

std::string_view to_string(OdometryMode mode)
{
  switch (mode) {
    case OdometryMode::kWheel:
      return "wheel";
    case OdometryMode::kWheelImu:
      return "wheel_imu";
    case OdometryMode::kVisual:
      return "visual";
    case OdometryMode::kGnss:
      return "gnss";
  }
  return "?";
}

std::optional<OdometryMode> parse_mode(std::string_view text)
{
  for (OdometryMode m : kAllModes) {
    if (to_string(m) == text) {
      return m;
    }
  }
  return std::nullopt;
}

MotionIncrement wheel_increment(double dist, double wheel_dtheta) { return {dist, wrap_angle(wheel_dtheta)}; }

MotionIncrement wheel_imu_increment(double dist, double prev_heading, double curr_heading)
{
  return {dist, angular_displacement(prev_heading, curr_heading)};
}

MotionIncrement visual_increment(double forward, double prev_heading, double curr_heading)
{
  return {forward, angular_displacement(prev_heading, curr_heading)};
}

MotionIncrement gnss_increment(const Vec2 & prev_fix, const Vec2 & curr_fix, double heading, double prev_heading)
{
  return {project_onto_heading(curr_fix - prev_fix, heading), angular_displacement(prev_heading, heading)};
}

Pose2D propagate(const Pose2D & pose, const MotionIncrement & inc, const MotionNoise & noise, Rng & rng)
{
  const double sf = std::max(noise.sigma_forward_floor, noise.sigma_forward_per_meter * std::abs(inc.forward));
  const double sd = std::max(noise.sigma_dtheta_floor, noise.sigma_dtheta_per_rad * std::abs(inc.dtheta));
  const double f = sample_normal(rng, inc.forward, sf);
  const double d = sample_normal(rng, inc.dtheta, sd);
  const double theta = wrap_angle(pose.theta + d);
  return {pose.x + f * std::cos(theta), pose.y + f * std::sin(theta), theta};
}

}  // namespace orchard_loc
