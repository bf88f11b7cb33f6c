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

#ifndef ORCHARD_LOC__GEOM_HPP_
#define ORCHARD_LOC__GEOM_HPP_

#include <cmath>
#include <numbers>

namespace orchard_loc
{

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Displacement or position in the local map frame (meters, x east, y north).
struct Vec2
{
  double dx = 0.0;
  double dy = 0.0;

  double norm() const { return std::hypot(dx, dy); }
  double dot(const Vec2 & o) const { return dx * o.dx + dy * o.dy; }

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.dx + b.dx, a.dy + b.dy}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.dx - b.dx, a.dy - b.dy}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.dx, s * a.dy}; }
  friend bool operator==(const Vec2 &, const Vec2 &) = default;
};

/// Planar pose. Heading is counter-clockwise from +x and kept in (-pi, pi].
struct Pose2D
{
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const Pose2D &, const Pose2D &) = default;
};

/// Maps any finite angle onto (-pi, pi]. Throws std::invalid_argument on NaN/inf.
double wrap_angle(double raw);

/// Signed shortest rotation taking prev_heading to curr_heading.
double angular_displacement(double prev_heading, double curr_heading);

/// Component of disp along the unit vector at heading (negative = backward).
double project_onto_heading(const Vec2 & disp, double heading);

/// Rotates a vehicle-frame vector into the map frame.
Vec2 rotate(const Vec2 & v, double heading);

double distance(const Vec2 & a, const Vec2 & b);

Pose2D make_pose(double x, double y, double theta);

}  // namespace orchard_loc

#endif  // ORCHARD_LOC__GEOM_HPP_
