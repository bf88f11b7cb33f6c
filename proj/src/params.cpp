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

#include "orchard_loc/params.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace orchard_loc
{
namespace
{

using nlohmann::json;

struct Field
{
  const char * name;
  std::function<double &(Params &)> ref;
};

const std::vector<Field> & double_fields()
{
  static const std::vector<Field> fields = {
    {"group_link_distance", [](Params & p) -> double & { return p.filter.group_link_distance; }},
    {"convergence_weight_fraction", [](Params & p) -> double & { return p.filter.convergence_weight_fraction; }},
    {"resample_ess_fraction", [](Params & p) -> double & { return p.filter.resample_ess_fraction; }},
    {"width_inflation", [](Params & p) -> double & { return p.filter.width_inflation; }},
    {"sigma_forward_per_meter", [](Params & p) -> double & { return p.filter.motion.sigma_forward_per_meter; }},
    {"sigma_forward_floor", [](Params & p) -> double & { return p.filter.motion.sigma_forward_floor; }},
    {"sigma_dtheta_per_rad", [](Params & p) -> double & { return p.filter.motion.sigma_dtheta_per_rad; }},
    {"sigma_dtheta_floor", [](Params & p) -> double & { return p.filter.motion.sigma_dtheta_floor; }},
    {"fov_half_angle", [](Params & p) -> double & { return p.filter.sensor.fov_half_angle; }},
    {"max_range", [](Params & p) -> double & { return p.filter.sensor.max_range; }},
    {"view_bearing_offset", [](Params & p) -> double & { return p.filter.sensor.view_bearing_offset; }},
    {"sigma_range", [](Params & p) -> double & { return p.filter.sensor.sigma_range; }},
    {"sigma_bearing", [](Params & p) -> double & { return p.filter.sensor.sigma_bearing; }},
    {"sigma_width", [](Params & p) -> double & { return p.filter.sensor.sigma_width; }},
    {"detect_prob", [](Params & p) -> double & { return p.filter.sensor.detect_prob; }},
    {"orientation_sigma_sensor", [](Params & p) -> double & { return p.filter.sensor.orientation_sigma_sensor; }},
    {"gnss_sigma", [](Params & p) -> double & { return p.filter.sensor.gnss_sigma; }},
    {"gnss_bias_step_sigma", [](Params & p) -> double & { return p.filter.sensor.gnss_bias_step_sigma; }},
    {"gnss_bias_clamp", [](Params & p) -> double & { return p.filter.sensor.gnss_bias_clamp; }},
    {"orientation_sigma", [](Params & p) -> double & { return p.filter.sensor.orientation_sigma; }},
    {"sigma_range_w", [](Params & p) -> double & { return p.filter.sensor.sigma_range_w; }},
    {"sigma_bearing_w", [](Params & p) -> double & { return p.filter.sensor.sigma_bearing_w; }},
    {"sigma_width_w", [](Params & p) -> double & { return p.filter.sensor.sigma_width_w; }},
    {"obs_floor", [](Params & p) -> double & { return p.filter.sensor.obs_floor; }},
    {"gate", [](Params & p) -> double & { return p.filter.sensor.gate; }},
    {"candidate_margin", [](Params & p) -> double & { return p.filter.sensor.candidate_margin; }},
    {"speed", [](Params & p) -> double & { return p.sim.speed; }},
    {"dt", [](Params & p) -> double & { return p.sim.dt; }},
    {"wheel_sigma_dist_frac", [](Params & p) -> double & { return p.sim.wheel_sigma_dist_frac; }},
    {"wheel_sigma_dtheta", [](Params & p) -> double & { return p.sim.wheel_sigma_dtheta; }},
    {"wheel_drift_per_meter", [](Params & p) -> double & { return p.sim.wheel_drift_per_meter; }},
    {"wheel_turn_scale_sigma", [](Params & p) -> double & { return p.sim.wheel_turn_scale_sigma; }},
    {"visual_sigma_floor", [](Params & p) -> double & { return p.sim.visual_sigma_floor; }},
    {"visual_sigma_frac", [](Params & p) -> double & { return p.sim.visual_sigma_frac; }},
    {"gnss_corrected_sigma", [](Params & p) -> double & { return p.sim.gnss_corrected_sigma; }},
    {"gnss_corrected_jitter", [](Params & p) -> double & { return p.sim.gnss_corrected_jitter; }},
    {"gnss_initial_bias_sigma", [](Params & p) -> double & { return p.sim.gnss_initial_bias_sigma; }},
    {"trunk_growth", [](Params & p) -> double & { return p.sim.trunk_growth; }},
    {"gnss_corrected_mount_x", [](Params & p) -> double & { return p.sim.gnss_corrected_mount.dx; }},
    {"gnss_corrected_mount_y", [](Params & p) -> double & { return p.sim.gnss_corrected_mount.dy; }},
    {"turn_exit_beyond_last", [](Params & p) -> double & { return p.sim.turn_exit_beyond_last; }},
    {"turn_lead", [](Params & p) -> double & { return p.sim.turn_lead; }},
  };
  return fields;
}

}  // namespace

void Params::validate() const
{
  filter.validate();
  sim.validate();
}

json to_json(const Params & params)
{
  Params p = params;
  json j;
  j["particle_count"] = p.filter.particle_count;
  for (const Field & f : double_fields()) {
    j[f.name] = f.ref(p);
  }
  return j;
}

Params apply_params(const Params & base, const json & patch)
{
  if (!patch.is_object()) {
    throw std::invalid_argument("parameters must be an object");
  }
  Params p = base;
  for (const auto & [key, value] : patch.items()) {
    if (!value.is_number()) {
      throw std::invalid_argument(key + " must be a number");
    }
    if (key == "particle_count") {
      if (!value.is_number_integer()) {
        throw std::invalid_argument("particle_count must be an integer");
      }
      const auto n = value.get<std::int64_t>();
      if (n < 2 || n > 1'000'000) {
        throw std::invalid_argument("particle_count must be in [2, 1000000]");
      }
      p.filter.particle_count = static_cast<int>(n);
      continue;
    }
    bool known = false;
    for (const Field & f : double_fields()) {
      if (key == f.name) {
        f.ref(p) = value.get<double>();
        known = true;
        break;
      }
    }
    if (!known) {
      throw std::invalid_argument("unknown parameter '" + key + "'");
    }
  }
  p.validate();
  return p;
}

Params load_params(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open parameter file " + path.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error & e) {
    throw std::invalid_argument("parameter file " + path.string() + ": " + e.what());
  }
  return apply_params(Params{}, j);
}

void save_params(const Params & params, const std::filesystem::path & path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write parameter file " + path.string());
  }
  out << to_json(params).dump(1) << '\n';
}

std::string fnv1a_hex(const std::string & bytes)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string params_fingerprint(const Params & params) { return fnv1a_hex(to_json(params).dump()); }

}  // namespace orchard_loc
