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

#ifndef ORCHARD_LOC__LOG_IO_HPP_
#define ORCHARD_LOC__LOG_IO_HPP_

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "orchard_loc/sim.hpp"

namespace orchard_loc
{

class LogFormatError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Newline-delimited log: a header line, then one {"t","kind","data"} object per record.
struct LoadedLog
{
  LogHeader header;
  std::vector<SensorRecord> records;
};

nlohmann::json to_json(const Pose2D & pose);
nlohmann::json to_json(const TrajectorySpec & spec);
nlohmann::json to_json(const LogHeader & header);
nlohmann::json to_json(const SensorRecord & record);

TrajectorySpec trajectory_from_json(const nlohmann::json & j);
SensorRecord record_from_json(const nlohmann::json & j);

void write_log(std::ostream & out, const LogHeader & header, const std::vector<SensorRecord> & records);
void save_log(const SimulatedLog & log, const std::filesystem::path & path);

/// Throws LogFormatError with the offending line number.
LoadedLog read_log(std::istream & in);
LoadedLog load_log(const std::filesystem::path & path);

}  // namespace orchard_loc

#endif  // ORCHARD_LOC__LOG_IO_HPP_
