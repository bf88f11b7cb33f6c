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


#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "orchard_loc/motion.hpp"
#include "orchard_loc/random.hpp"

using namespace orchard_loc;

namespace
{
constexpr double kWrapOracle = 2.0 * 3.14159265358979323846 - 6.2;  // shortest arc from 3.1 to -3.1
}

TEST(WheelIncrement, PassThrough)
{
  auto a = wheel_increment(0.08, 0.0);
  EXPECT_DOUBLE_EQ(a.forward, 0.08);
  EXPECT_DOUBLE_EQ(a.dtheta, 0.0);
  auto b = wheel_increment(0.0, 0.0);
  EXPECT_DOUBLE_EQ(b.forward, 0.0);
  EXPECT_DOUBLE_EQ(b.dtheta, 0.0);
  auto c = wheel_increment(0.08, 0.01);
  EXPECT_DOUBLE_EQ(c.forward, 0.08);
  EXPECT_DOUBLE_EQ(c.dtheta, 0.01);
  EXPECT_NEAR(wheel_increment(0.1, 2.0 * kPi + 0.1).dtheta, 0.1, 1e-12);
}

TEST(WheelImuIncrement, Examples)
{
  auto a = wheel_imu_increment(0.08, 0.10, 0.12);
  EXPECT_DOUBLE_EQ(a.forward, 0.08);
  EXPECT_NEAR(a.dtheta, 0.02, 1e-15);
  EXPECT_DOUBLE_EQ(wheel_imu_increment(0.08, 0.7, 0.7).dtheta, 0.0);
  auto c = wheel_imu_increment(0.08, 3.1, -3.1);
  EXPECT_NEAR(c.dtheta, kWrapOracle, 1e-12);
}

TEST(VisualIncrement, Examples)
{
  auto a = visual_increment(0.08, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(a.forward, 0.08);
  EXPECT_DOUBLE_EQ(a.dtheta, 0.0);
  EXPECT_DOUBLE_EQ(visual_increment(-0.05, 0.0, 0.0).forward, -0.05);
  const auto v = visual_increment(0.08, 0.3, -0.2);
  const auto w = wheel_imu_increment(0.08, 0.3, -0.2);
  EXPECT_EQ(v.forward, w.forward);
  EXPECT_EQ(v.dtheta, w.dtheta);
}

TEST(GnssIncrement, Examples)
{
  EXPECT_NEAR(gnss_increment({0, 0}, {0.4, 0}, 0.0, 0.0).forward, 0.4, 1e-15);
  EXPECT_NEAR(gnss_increment({0, 0}, {0, 0.3}, 0.0, 0.0).forward, 0.0, 1e-15);
  EXPECT_NEAR(gnss_increment({0, 0}, {0.3, 0.4}, std::atan2(4.0, 3.0), std::atan2(4.0, 3.0)).forward, 0.5, 1e-12);
  const auto inc = gnss_increment({1, 1}, {1, 1}, 0.25, 0.05);
  EXPECT_NEAR(inc.dtheta, 0.2, 1e-15);
}

TEST(GnssIncrement, ConstantBiasCancels)
{
  const Vec2 bias{0.4, -0.3};
  const Vec2 a{2.0, 1.0};
  const Vec2 b{2.3, 1.1};
  const double h = 0.2;
  EXPECT_NEAR(gnss_increment(a + bias, b + bias, h, h).forward, gnss_increment(a, b, h, h).forward, 1e-12);
}

TEST(Propagate, DeterministicLimits)
{
  Rng rng(1);
  const Pose2D a = propagate({0, 0, 0}, {1.0, 0.0}, MotionNoise::zero(), rng);
  EXPECT_DOUBLE_EQ(a.x, 1.0);
  EXPECT_DOUBLE_EQ(a.y, 0.0);
  EXPECT_DOUBLE_EQ(a.theta, 0.0);
  const Pose2D b = propagate({0, 0, 0}, {0.0, kPi / 2.0}, MotionNoise::zero(), rng);
  EXPECT_DOUBLE_EQ(b.x, 0.0);
  EXPECT_DOUBLE_EQ(b.y, 0.0);
  EXPECT_DOUBLE_EQ(b.theta, kPi / 2.0);
}

TEST(Propagate, RotateThenTranslate)
{
  Rng rng(1);
  const Pose2D p = propagate({1.0, 2.0, 0.0}, {2.0, kPi / 2.0}, MotionNoise::zero(), rng);
  EXPECT_NEAR(p.x, 1.0, 1e-12);
  EXPECT_NEAR(p.y, 4.0, 1e-12);
}

TEST(Propagate, InvertibleByNegatedIncrement)
{
  Rng rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const Pose2D start{5.0 * u(rng), 5.0 * u(rng), kPi * u(rng)};
    const MotionIncrement inc{u(rng), u(rng)};
    const Pose2D mid = propagate(start, inc, MotionNoise::zero(), rng);
    // undo: translate back along the new heading, then unrotate
    const Pose2D back_t{mid.x - inc.forward * std::cos(mid.theta), mid.y - inc.forward * std::sin(mid.theta), mid.theta};
    EXPECT_NEAR(back_t.x, start.x, 1e-12);
    EXPECT_NEAR(back_t.y, start.y, 1e-12);
    EXPECT_NEAR(angular_displacement(wrap_angle(mid.theta - inc.dtheta), start.theta), 0.0, 1e-12);
  }
}

TEST(Propagate, FloorNoiseStatistics)
{
  MotionNoise noise = MotionNoise::zero();
  noise.sigma_forward_floor = 0.01;
  Rng rng(2024);
  const int n = 100000;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = propagate({0, 0, 0}, {1.0, 0.0}, noise, rng).x;
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sq / n - mean * mean);
  EXPECT_NEAR(mean, 1.0, 0.001);
  EXPECT_NEAR(sd, 0.01, 0.001);
}

TEST(Propagate, ProportionalNoiseDominatesFloor)
{
  MotionNoise noise = MotionNoise::zero();
  noise.sigma_dtheta_per_rad = 0.1;
  noise.sigma_dtheta_floor = 0.001;
  Rng rng(8);
  const int n = 50000;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = propagate({0, 0, 0}, {0.0, 1.0}, noise, rng).theta - 1.0;
    sq += d * d;
  }
  EXPECT_NEAR(std::sqrt(sq / n), 0.1, 0.005);
}

TEST(OdometryMode, NamesRoundTrip)
{
  for (OdometryMode m : kAllModes) {
    EXPECT_EQ(parse_mode(to_string(m)), m);
  }
  EXPECT_FALSE(parse_mode("lidar").has_value());
  EXPECT_FALSE(uses_orientation_sensor(OdometryMode::kWheel));
  EXPECT_TRUE(uses_orientation_sensor(OdometryMode::kGnss));
}
