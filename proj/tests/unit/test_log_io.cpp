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
#include <sstream>

#include "orchard_loc/log_io.hpp"

using namespace orchard_loc;

namespace
{

SimulatedLog sample_log()
{
  static const OrchardMap map = generate_map(MapGenConfig{}, 1);
  TrajectorySpec spec;
  spec.row_id = 2;
  spec.start_offset = 60.0;
  return simulate_log(map, spec, SensorConfig{}, SimConfig{}, 17, "default.json");
}

std::string dump(const LogHeader & h, const std::vector<SensorRecord> & r)
{
  std::ostringstream out;
  write_log(out, h, r);
  return out.str();
}

LoadedLog parse(const std::string & text)
{
  std::istringstream in(text);
  return read_log(in);
}

}  // namespace

TEST(LogIo, RoundTripIsExact)
{
  const SimulatedLog log = sample_log();
  const std::string text = dump(log.header, log.records);
  const LoadedLog back = parse(text);
  EXPECT_EQ(back.header.map, "default.json");
  EXPECT_EQ(back.header.seed, 17u);
  EXPECT_EQ(back.header.trajectory.row_id, 2);
  ASSERT_EQ(back.records.size(), log.records.size());
  EXPECT_EQ(dump(back.header, back.records), text);

  const auto a = group_steps(log.records);
  const auto b = group_steps(back.records);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].truth.x, b[k].truth.x);
    EXPECT_EQ(a[k].wheel->dtheta, b[k].wheel->dtheta);
    ASSERT_EQ(a[k].trunks.size(), b[k].trunks.size());
    for (std::size_t i = 0; i < a[k].trunks.size(); ++i) {
      EXPECT_EQ(a[k].trunks[i].width, b[k].trunks[i].width);
    }
  }
}

TEST(LogIo, FileRoundTrip)
{
  const SimulatedLog log = sample_log();
  const auto path = std::filesystem::temp_directory_path() / "orchard_loc_log_io_test.ndjson";
  save_log(log, path);
  const LoadedLog back = load_log(path);
  EXPECT_EQ(dump(back.header, back.records), dump(log.header, log.records));
  std::filesystem::remove(path);
  EXPECT_THROW(load_log(path), LogFormatError);
}

TEST(LogIo, EveryStepCarriesAllChannels)
{
  const SimulatedLog log = sample_log();
  const auto steps = group_steps(log.records);
  EXPECT_EQ(log.records.size(), steps.size() * 7);
  for (std::size_t k = 1; k < steps.size(); ++k) {
    EXPECT_TRUE(steps[k].wheel && steps[k].imu && steps[k].gnss && steps[k].gnss_corrected && steps[k].visual);
    EXPECT_GT(steps[k].t, steps[k - 1].t);
  }
}

TEST(LogIo, RejectsMalformedInput)
{
  const std::string header = R"({"kind":"header","units":"m,rad,s","seed":1,"map":"m.json"})";
  EXPECT_NO_THROW(parse(header + "\n" + R"({"t":0,"kind":"truth","data":{"x":0,"y":0,"theta":0}})" + "\n"));
  EXPECT_THROW(parse(""), LogFormatError);
  EXPECT_THROW(parse(R"({"t":0,"kind":"truth","data":{"x":0,"y":0,"theta":0}})"), LogFormatError);
  EXPECT_THROW(parse(header + "\n{not json"), LogFormatError);
  EXPECT_THROW(parse(header + "\n" + R"({"t":0,"kind":"sonar","data":{}})"), LogFormatError);
  EXPECT_THROW(parse(header + "\n" + R"({"t":0,"kind":"wheel","data":{"dist":1}})"), LogFormatError);
  EXPECT_THROW(parse(header + "\n" + R"({"t":0,"kind":"imu","data":{"heading":"north"}})"), LogFormatError);
  EXPECT_THROW(parse(header + "\n" + R"({"t":0,"kind":"imu","data":{"heading":0},"extra":1})"), LogFormatError);
}

TEST(LogIo, ErrorNamesTheLine)
{
  const std::string header = R"({"kind":"header","units":"m,rad,s","seed":1,"map":"m.json"})";
  try {
    parse(header + "\n" + R"({"t":0,"kind":"imu","data":{"heading":0}})" + "\n{bad");
    FAIL();
  } catch (const LogFormatError & e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}
