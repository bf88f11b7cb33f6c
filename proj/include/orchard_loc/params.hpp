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

#ifndef ORCHARD_LOC__PARAMS_HPP_
#define ORCHARD_LOC__PARAMS_HPP_

#include <filesystem>
#include <string>

#include "json.hpp"
#include "orchard_loc/filter.hpp"
#include "orchard_loc/sim.hpp"

namespace orchard_loc
{

/// Everything a run is configured by: the filter (with its sensor geometry,
/// weighting densities and motion noise) and the simulator.
struct Params
{
  FilterParams filter;
  SimConfig sim;

  void validate() const;
};

/// Flat object keyed by field name; see params.cpp for the table.
nlohmann::json to_json(const Params & params);

/// Applies the fields present in `patch` on top of `base`. Unknown fields,
/// non-numeric values and out-of-range results throw std::invalid_argument;
/// `base` is never modified.
Params apply_params(const Params & base, const nlohmann::json & patch);

Params load_params(const std::filesystem::path & path);
void save_params(const Params & params, const std::filesystem::path & path);

/// Stable 64-bit FNV-1a digest of the canonical parameter document, as hex.
std::string params_fingerprint(const Params & params);

std::string fnv1a_hex(const std::string & bytes);

}  // namespace orchard_loc

#endif  // ORCHARD_LOC__PARAMS_HPP_
