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

#include <filesystem>
#include <fstream>

#include "orchard_loc/params.hpp"

using namespace orchard_loc;
using nlohmann::json;

TEST(Fnv1a, PublishedVectors)
{
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(fnv1a_hex("foobar"), "85944171f73967e8");
}

TEST(Params, DefaultsValidateAndRoundTrip)
{
  const Params p;
  EXPECT_NO_THROW(p.validate());
  const json j = to_json(p);
  const Params back = apply_params(Params{}, j);
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(params_fingerprint(back), params_fingerprint(p));
}

TEST(Params, PatchChangesOnlyNamedFields)
{
  const Params base;
  const Params p = apply_params(base, json{{"sigma_range_w", 0.7}, {"particle_count", 123}});
  EXPECT_EQ(p.filter.sensor.sigma_range_w, 0.7);
  EXPECT_EQ(p.filter.particle_count, 123);
  EXPECT_EQ(p.filter.group_link_distance, base.filter.group_link_distance);
  EXPECT_EQ(base.filter.particle_count, Params{}.filter.particle_count);
  EXPECT_NE(params_fingerprint(p), params_fingerprint(base));

  const Params mount = apply_params(base, json{{"gnss_corrected_mount_x", 0.5}});
  EXPECT_EQ(mount.sim.gnss_corrected_mount.dx, 0.5);
}

TEST(Params, RejectsBadPatches)
{
  const Params base;
  EXPECT_THROW(apply_params(base, json::array()), std::invalid_argument);
  EXPECT_THROW(apply_params(base, json{{"no_such_field", 1.0}}), std::invalid_argument);
  EXPECT_THROW(apply_params(base, json{{"sigma_range_w", "wide"}}), std::invalid_argument);
  EXPECT_THROW(apply_params(base, json{{"particle_count", 1.5}}), std::invalid_argument);
  EXPECT_THROW(apply_params(base, json{{"particle_count", 1}}), std::invalid_argument);
  EXPECT_THROW(apply_params(base, json{{"sigma_range_w", -1.0}}), std::invalid_argument);
  EXPECT_THROW(apply_params(base, json{{"convergence_weight_fraction", 1.5}}), std::invalid_argument);
  EXPECT_THROW(apply_params(base, json{{"resample_ess_fraction", 0.0}}), std::invalid_argument);
  EXPECT_THROW(apply_params(base, json{{"group_link_distance", 0.0}}), std::invalid_argument);
}

TEST(Params, FileRoundTrip)
{
  const auto dir = std::filesystem::temp_directory_path() / "orchard_loc_params_test";
  std::filesystem::create_directories(dir);
  const Params p = apply_params(Params{}, json{{"width_inflation", 0.01}});
  save_params(p, dir / "p.json");
  EXPECT_EQ(params_fingerprint(load_params(dir / "p.json")), params_fingerprint(p));

  std::ofstream(dir / "partial.json") << R"({"max_range": 6.0})";
  EXPECT_EQ(load_params(dir / "partial.json").filter.sensor.max_range, 6.0);
  std::ofstream(dir / "broken.json") << "{";
  EXPECT_THROW(load_params(dir / "broken.json"), std::invalid_argument);
  EXPECT_THROW(load_params(dir / "missing.json"), std::invalid_argument);
  std::filesystem::remove_all(dir);
}
