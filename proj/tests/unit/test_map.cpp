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
#include <filesystem>
#include <random>
#include <set>
#include <string>

#include "orchard_loc/map.hpp"

using namespace orchard_loc;

namespace
{

const char * kMinimalMap = R"({
  "meta": {"row_spacing": 3.0, "headland_depth": 5.0, "units": "m"},
  "rows": [{"row_id": 0, "start": [0, 0], "end": [4, 0]}],
  "landmarks": [
    {"id": "a", "row_id": 0, "pos": [1, 0], "width": 0.08, "kind": "tree"},
    {"id": "b", "row_id": 0, "pos": [3, 0.1], "width": 0.10, "kind": "post"}
  ]
})";

// Exhaustive scan; independent of the grid index.
std::set<std::size_t> brute_fov(const OrchardMap & map, const Pose2D & pose, double half, double range, double offset)
{
  std::set<std::size_t> out;
  const auto & lms = map.landmarks();
  for (std::size_t i = 0; i < lms.size(); ++i) {
    const double dx = lms[i].position.dx - pose.x;
    const double dy = lms[i].position.dy - pose.y;
    const double r = std::sqrt(dx * dx + dy * dy);
    double b = std::atan2(dy, dx) - (pose.theta + offset);
    while (b > kPi) b -= 2.0 * kPi;
    while (b <= -kPi) b += 2.0 * kPi;
    if (r <= range && std::abs(b) <= half) {
      out.insert(i);
    }
  }
  return out;
}

}  // namespace

TEST(MapParse, MinimalFile)
{
  const OrchardMap map = parse_map(kMinimalMap);
  ASSERT_EQ(map.landmarks().size(), 2u);
  EXPECT_EQ(map.rows().size(), 1u);
  EXPECT_DOUBLE_EQ(map.row_spacing(), 3.0);
  EXPECT_EQ(map.landmarks()[1].kind, LandmarkKind::kPost);
}

TEST(MapParse, DuplicateIdRejected)
{
  std::string text = kMinimalMap;
  text.replace(text.find("\"id\": \"b\""), 9, "\"id\": \"a\"");
  try {
    parse_map(text);
    FAIL() << "expected MapError";
  } catch (const MapError & e) {
    EXPECT_EQ(e.kind(), MapError::Kind::kValidation);
    EXPECT_NE(std::string(e.what()).find("a"), std::string::npos);
  }
}

TEST(MapParse, ZeroWidthRejected)
{
  std::string text = kMinimalMap;
  text.replace(text.find("0.08"), 4, "0.00");
  EXPECT_THROW(parse_map(text), MapError);
}

TEST(MapParse, UnknownFieldRejected)
{
  std::string text = kMinimalMap;
  text.replace(text.find("\"units\""), 7, "\"unitz\"");
  EXPECT_THROW(parse_map(text), MapError);
}

TEST(MapParse, MalformedIsParseError)
{
  try {
    parse_map("{not json");
    FAIL();
  } catch (const MapError & e) {
    EXPECT_EQ(e.kind(), MapError::Kind::kParse);
  }
}

TEST(MapParse, LandmarkFarFromRowRejected)
{
  std::string text = kMinimalMap;
  text.replace(text.find("[3, 0.1]"), 8, "[3, 2.0]");
  EXPECT_THROW(parse_map(text), MapError);
}

TEST(MapGenerate, DefaultCounts)
{
  const OrchardMap map = generate_map(MapGenConfig{}, 1);
  EXPECT_EQ(map.landmarks().size(), 1000u);
  EXPECT_EQ(map.rows().size(), 20u);
  int posts = 0;
  for (const auto & lm : map.landmarks()) {
    EXPECT_GT(lm.width, 0.0);
    EXPECT_LT(lm.width, 1.0);
    posts += lm.kind == LandmarkKind::kPost;
  }
  EXPECT_EQ(posts, 100);
}

TEST(MapGenerate, SmallGrid)
{
  MapGenConfig cfg;
  cfg.rows = 5;
  cfg.trees_per_row = 10;
  EXPECT_EQ(generate_map(cfg, 3).landmarks().size(), 50u);
}

TEST(MapGenerate, DeterministicAndRoundTrips)
{
  const OrchardMap a = generate_map(MapGenConfig{}, 7);
  const OrchardMap b = generate_map(MapGenConfig{}, 7);
  EXPECT_EQ(serialize_map(a), serialize_map(b));
  const OrchardMap c = parse_map(serialize_map(a));
  EXPECT_EQ(serialize_map(c), serialize_map(a));
  EXPECT_NE(serialize_map(generate_map(MapGenConfig{}, 8)), serialize_map(a));
}

TEST(MapFile, SaveLoad)
{
  const auto path = std::filesystem::temp_directory_path() / "orchard_loc_test_map.json";
  const OrchardMap a = generate_map(MapGenConfig{}, 2);
  save_map(a, path);
  EXPECT_EQ(serialize_map(load_map(path)), serialize_map(a));
  std::filesystem::remove(path);
}

TEST(InflateWidths, Examples)
{
  const OrchardMap map = parse_map(kMinimalMap);
  EXPECT_EQ(serialize_map(inflate_widths(map, 0.0)), serialize_map(map));
  const OrchardMap inflated = inflate_widths(map, 0.005);
  EXPECT_NEAR(inflated.landmarks()[0].width, 0.085, 1e-15);
  const OrchardMap twice = inflate_widths(inflate_widths(map, 0.002), 0.003);
  for (std::size_t i = 0; i < map.landmarks().size(); ++i) {
    EXPECT_NEAR(twice.landmarks()[i].width, inflated.landmarks()[i].width, 1e-15);
    EXPECT_EQ(twice.landmarks()[i].position, map.landmarks()[i].position);
  }
  EXPECT_THROW(inflate_widths(map, -0.001), std::invalid_argument);
  EXPECT_THROW(inflate_widths(map, 0.05), std::invalid_argument);
}

TEST(Fov, DeadAheadAndDepthThreshold)
{
  const OrchardMap map = parse_map(kMinimalMap);
  // view axis points +y from (1, -2): landmark a is 2 m dead ahead
  const auto hits = map.landmarks_in_fov({1.0, -2.0, 0.0}, kPi / 6.0, 4.0, kPi / 2.0);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].index, 0u);
  EXPECT_NEAR(hits[0].range, 2.0, 1e-12);
  EXPECT_NEAR(hits[0].bearing, 0.0, 1e-12);
  EXPECT_TRUE(map.landmarks_in_fov({1.0, -5.0, 0.0}, kPi / 6.0, 4.0, kPi / 2.0).empty());
}

TEST(Fov, MatchesBruteForceOnRowCenterline)
{
  const OrchardMap map = generate_map(MapGenConfig{}, 1);
  for (double x = -2.0; x < 95.0; x += 0.37) {
    const Pose2D pose{x, 1.5, 0.0};
    std::set<std::size_t> got;
    for (const auto & h : map.landmarks_in_fov(pose, kPi / 6.0, 4.0, kPi / 2.0)) {
      got.insert(h.index);
    }
    EXPECT_EQ(got, brute_fov(map, pose, kPi / 6.0, 4.0, kPi / 2.0)) << "x=" << x;
  }
}

TEST(Fov, MatchesBruteForceRandomPoses)
{
  const OrchardMap map = generate_map(MapGenConfig{}, 4);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ux(-10.0, 100.0);
  std::uniform_real_distribution<double> uy(-10.0, 70.0);
  std::uniform_real_distribution<double> ut(-kPi, kPi);
  std::uniform_real_distribution<double> uh(0.05, kPi / 2.0);
  std::uniform_real_distribution<double> ur(0.5, 9.0);
  for (int i = 0; i < 2000; ++i) {
    const Pose2D pose{ux(rng), uy(rng), ut(rng)};
    const double half = uh(rng);
    const double range = ur(rng);
    const double offset = ut(rng);
    std::set<std::size_t> got;
    const auto hits = map.landmarks_in_fov(pose, half, range, offset);
    for (std::size_t j = 0; j < hits.size(); ++j) {
      got.insert(hits[j].index);
      if (j > 0) {
        EXPECT_LT(hits[j - 1].index, hits[j].index);
      }
    }
    EXPECT_EQ(got, brute_fov(map, pose, half, range, offset));
  }
}
