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

#include "orchard_loc/geom.hpp"

#include <stdexcept>

namespace orchard_loc
{

double wrap_angle(double raw)
{
  if (!std::isfinite(raw)) {
    throw std::invalid_argument("wrap_angle: non-finite angle");
  }
  if (raw > -kPi && raw <= kPi) {
    return raw;
  }
  double wrapped = std::remainder(raw, kTwoPi);  // in [-pi, pi]
  if (wrapped <= -kPi) {
    wrapped += kTwoPi;
  }
  return wrapped;
}

double angular_displacement(double prev_heading, double curr_heading)
{
  return wrap_angle(curr_heading - prev_heading);
}

double project_onto_heading(const Vec2 & disp, double heading)
{
  return disp.dx * std::cos(heading) + disp.dy * std::sin(heading);
}

Vec2 rotate(const Vec2 & v, double heading)
{
  const double c = std::cos(heading);
  const double s = std::sin(heading);
  return {c * v.dx - s * v.dy, s * v.dx + c * v.dy};
}

double distance(const Vec2 & a, const Vec2 & b) { return (a - b).norm(); }

Pose2D make_pose(double x, double y, double theta)
{
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw std::invalid_argument("make_pose: non-finite position");
  }
  return {x, y, wrap_angle(theta)};
}

}  // namespace orchard_loc
