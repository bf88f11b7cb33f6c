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

#include "orchard_loc/log_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>

namespace orchard_loc
{
namespace
{

using nlohmann::json;

void expect_fields(const json & j, std::initializer_list<const char *> fields, const char * what)
{
  if (!j.is_object() || j.size() != fields.size()) {
    throw LogFormatError(std::string(what) + ": wrong field set");
  }
  for (const char * f : fields) {
    if (!j.contains(f)) {
      throw LogFormatError(std::string(what) + ": missing '" + f + "'");
    }
  }
}

double num(const json & j, const char * key)
{
  const json & v = j.at(key);
  if (!v.is_number()) {
    throw LogFormatError(std::string("field '") + key + "' is not a number");
  }
  return v.get<double>();
}

}  // namespace

json to_json(const Pose2D & pose) { return {{"x", pose.x}, {"y", pose.y}, {"theta", pose.theta}}; }

json to_json(const TrajectorySpec & spec)
{
  return {
    {"kind", to_string(spec.kind)},
    {"row_id", spec.row_id},
    {"target_row_id", spec.target_row_id},
    {"reverse", spec.reverse},
    {"speed", spec.speed},
    {"dt", spec.dt},
    {"start_offset", spec.start_offset},
    {"entry_length", spec.entry_length},
    {"exit_beyond_last", spec.exit_beyond_last},
    {"view_side", spec.view_side}};
}

json to_json(const LogHeader & header)
{
  return {
    {"kind", "header"},
    {"units", header.units},
    {"seed", header.seed},
    {"map", header.map},
    {"trajectory", to_json(header.trajectory)}};
}

json to_json(const SensorRecord & record)
{
  json data;
  switch (record.kind) {
    case RecordKind::kTruth:
      data = to_json(std::get<Pose2D>(record.data));
      break;
    case RecordKind::kWheel: {
      const auto & w = std::get<WheelReading>(record.data);
      data = {{"dist", w.dist}, {"dtheta", w.dtheta}};
      break;
    }
    case RecordKind::kImu:
      data = {{"heading", std::get<ImuReading>(record.data).heading}};
      break;
    case RecordKind::kGnss:
    case RecordKind::kGnssCorrected: {
      const auto & v = std::get<Vec2>(record.data);
      data = {{"x", v.dx}, {"y", v.dy}};
      break;
    }
    case RecordKind::kVisual:
      data = {{"forward", std::get<VisualReading>(record.data).forward}};
      break;
    case RecordKind::kTrunks: {
      json obs = json::array();
      for (const TrunkObservation & o : std::get<TrunksReading>(record.data).obs) {
        obs.push_back({{"range", o.range}, {"bearing", o.bearing}, {"width", o.width}});
      }
      data = {{"obs", std::move(obs)}};
      break;
    }
  }
  return {{"t", record.t}, {"kind", to_string(record.kind)}, {"data", std::move(data)}};
}

TrajectorySpec trajectory_from_json(const json & j)
{
  TrajectorySpec s;
  const auto kind = parse_trajectory_kind(j.at("kind").get<std::string>());
  if (!kind) {
    throw LogFormatError("trajectory: unknown kind");
  }
  s.kind = *kind;
  s.row_id = j.at("row_id").get<int>();
  s.target_row_id = j.at("target_row_id").get<int>();
  s.reverse = j.at("reverse").get<bool>();
  s.speed = j.at("speed").get<double>();
  s.dt = j.at("dt").get<double>();
  s.start_offset = j.at("start_offset").get<double>();
  s.entry_length = j.value("entry_length", s.entry_length);
  s.exit_beyond_last = j.value("exit_beyond_last", s.exit_beyond_last);
  s.view_side = j.value("view_side", s.view_side);
  return s;
}

SensorRecord record_from_json(const json & j)
{
  expect_fields(j, {"t", "kind", "data"}, "record");
  SensorRecord r;
  r.t = num(j, "t");
  const auto kind = parse_record_kind(j.at("kind").get<std::string>());
  if (!kind) {
    throw LogFormatError("record: unknown kind '" + j.at("kind").get<std::string>() + "'");
  }
  r.kind = *kind;
  const json & d = j.at("data");
  switch (r.kind) {
    case RecordKind::kTruth:
      expect_fields(d, {"x", "y", "theta"}, "truth");
      r.data = Pose2D{num(d, "x"), num(d, "y"), num(d, "theta")};
      break;
    case RecordKind::kWheel:
      expect_fields(d, {"dist", "dtheta"}, "wheel");
      r.data = WheelReading{num(d, "dist"), num(d, "dtheta")};
      break;
    case RecordKind::kImu:
      expect_fields(d, {"heading"}, "imu");
      r.data = ImuReading{num(d, "heading")};
      break;
    case RecordKind::kGnss:
    case RecordKind::kGnssCorrected:
      expect_fields(d, {"x", "y"}, "gnss");
      r.data = Vec2{num(d, "x"), num(d, "y")};
      break;
    case RecordKind::kVisual:
      expect_fields(d, {"forward"}, "visual");
      r.data = VisualReading{num(d, "forward")};
      break;
    case RecordKind::kTrunks: {
      expect_fields(d, {"obs"}, "trunks");
      TrunksReading tr;
      for (const json & o : d.at("obs")) {
        expect_fields(o, {"range", "bearing", "width"}, "trunk observation");
        tr.obs.push_back({num(o, "range"), num(o, "bearing"), num(o, "width")});
      }
      r.data = std::move(tr);
      break;
    }
  }
  return r;
}

void write_log(std::ostream & out, const LogHeader & header, const std::vector<SensorRecord> & records)
{
  out << to_json(header).dump() << '\n';
  for (const SensorRecord & r : records) {
    out << to_json(r).dump() << '\n';
  }
}

void save_log(const SimulatedLog & log, const std::filesystem::path & path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write log " + path.string());
  }
  write_log(out, log.header, log.records);
}

LoadedLog read_log(std::istream & in)
{
  LoadedLog log;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    try {
      const json j = json::parse(line);
      if (!have_header) {
        if (j.value("kind", "") != "header") {
          throw LogFormatError("first line must be the header");
        }
        log.header.units = j.at("units").get<std::string>();
        log.header.seed = j.at("seed").get<std::uint64_t>();
        log.header.map = j.at("map").get<std::string>();
        if (j.contains("trajectory")) {
          log.header.trajectory = trajectory_from_json(j.at("trajectory"));
        }
        have_header = true;
        continue;
      }
      log.records.push_back(record_from_json(j));
    } catch (const json::exception & e) {
      throw LogFormatError("log line " + std::to_string(line_no) + ": " + e.what());
    } catch (const LogFormatError & e) {
      throw LogFormatError("log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) {
    throw LogFormatError("log: missing header");
  }
  return log;
}

LoadedLog load_log(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw LogFormatError("cannot open log " + path.string());
  }
  return read_log(in);
}

}  // namespace orchard_loc
