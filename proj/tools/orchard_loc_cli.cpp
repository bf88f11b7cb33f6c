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


// orchard-loc: map generation, campaign simulation, evaluation suites, drift
// analysis and the replay session server.

#include <chrono>
#include <csignal>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "orchard_loc/eval.hpp"
#include "orchard_loc/log_io.hpp"
#include "orchard_loc/params.hpp"
#include "orchard_loc/server.hpp"
#include "orchard_loc/sim.hpp"
#include "orchard_loc/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace orchard_loc;

namespace
{

constexpr const char * kDefaultMapName = "default.json";

struct CommonFlags
{
  std::string out;
  std::string map;
  std::string params;
  std::optional<std::uint64_t> seed;
};

std::string utc_now()
{
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

fs::path map_path(const CommonFlags & f)
{
  return f.map.empty() ? fs::path(f.out) / "maps" / kDefaultMapName : fs::path(f.map);
}

Params load_params_flag(const CommonFlags & f)
{
  return f.params.empty() ? Params{} : load_params(f.params);
}

class Manifest
{
public:
  Manifest(const std::string & command, const CommonFlags & f, std::uint64_t seed, const Params & params, json extra)
  {
    doc_ = {
      {"command", command},
      {"map", f.map.empty() ? map_path(f).string() : f.map},
      {"params_path", f.params},
      {"params", to_json(params)},
      {"params_fingerprint", params_fingerprint(params)},
      {"seed", seed},
      {"out", f.out},
      {"started_at", utc_now()},
      {"tool_version", kVersion},
      {"args", std::move(extra)},
    };
    path_ = fs::path(f.out) / "manifests" / (command + ".json");
    write();
  }

  void finish()
  {
    doc_["finished_at"] = utc_now();
    write();
  }

private:
  void write() const
  {
    fs::create_directories(path_.parent_path());
    std::ofstream out(path_);
    out << doc_.dump(2) << "\n";
    if (!out) {
      throw std::runtime_error("cannot write " + path_.string());
    }
  }

  json doc_;
  fs::path path_;
};

std::vector<fs::path> list_logs(const fs::path & dir, const std::string & prefix)
{
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) {
    return files;
  }
  for (const auto & e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind(prefix, 0) == 0 && e.path().extension() == ".ndjson") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::string log_name(const char * prefix, std::size_t i)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%02zu.ndjson", prefix, i);
  return buf;
}

void write_ndjson(const fs::path & path, const std::vector<json> & records)
{
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  for (const auto & r : records) {
    out << r.dump() << "\n";
  }
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
}

int cmd_genmap(const CommonFlags & f, int rows, int trees)
{
  const std::uint64_t seed = f.seed.value_or(1);
  const Params params = load_params_flag(f);
  MapGenConfig cfg;
  cfg.rows = rows;
  cfg.trees_per_row = trees;
  Manifest manifest("genmap", f, seed, params, {{"rows", rows}, {"trees", trees}});
  const fs::path path = map_path(f);
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  const OrchardMap map = generate_map(cfg, seed);
  save_map(map, path);
  manifest.finish();
  std::cout << "wrote " << path.string() << " (" << map.landmarks().size() << " landmarks)\n";
  return 0;
}

int cmd_simulate(const CommonFlags & f, const std::string & only)
{
  const std::uint64_t seed = f.seed.value_or(42);
  const Params params = load_params_flag(f);
  const fs::path mpath = map_path(f);
  if (!fs::exists(mpath)) {
    throw std::runtime_error("map not found: " + mpath.string());
  }
  const OrchardMap map = load_map(mpath);
  Manifest manifest("simulate", f, seed, params, {{"only", only}});
  const Campaign campaign = build_campaign(map, params.filter.sensor, params.sim, seed, mpath.filename().string());
  const fs::path dir = fs::path(f.out) / "logs";
  fs::create_directories(dir);
  std::size_t written = 0;
  if (only != "turns") {
    for (std::size_t i = 0; i < campaign.straight.size(); ++i, ++written) {
      save_log(campaign.straight[i], dir / log_name("straight", i));
    }
  }
  if (only != "straight") {
    for (std::size_t i = 0; i < campaign.turns.size(); ++i, ++written) {
      save_log(campaign.turns[i], dir / log_name("turn", i));
    }
  }
  manifest.finish();
  std::cout << "wrote " << written << " logs to " << dir.string() << "\n";
  return 0;
}

void load_campaign(const fs::path & dir, CampaignData & data, bool straight, bool turns)
{
  auto load = [](const fs::path & p, std::vector<std::vector<LogStep>> & steps, std::vector<LogHeader> & headers) {
    LoadedLog log = load_log(p);
    headers.push_back(log.header);
    steps.push_back(group_steps(log.records));
  };
  if (straight) {
    for (const auto & p : list_logs(dir, "straight_")) {
      load(p, data.straight, data.straight_headers);
    }
    if (data.straight.empty()) {
      throw std::runtime_error("no straight-row logs in " + dir.string());
    }
  }
  if (turns) {
    for (const auto & p : list_logs(dir, "turn_")) {
      load(p, data.turns, data.turn_headers);
    }
    if (data.turns.empty()) {
      throw std::runtime_error("no turn logs in " + dir.string());
    }
  }
}

int cmd_evaluate(
  const CommonFlags & f, const std::string & protocol_text, const std::string & mode_text, const SuiteOptions & opts)
{
  const auto protocol = parse_protocol(protocol_text);
  if (!protocol) {
    throw std::invalid_argument("unknown protocol: " + protocol_text);
  }
  std::vector<OdometryMode> modes;
  if (mode_text == "all") {
    modes.assign(std::begin(kAllModes), std::end(kAllModes));
  } else if (const auto m = parse_mode(mode_text)) {
    modes.push_back(*m);
  } else {
    throw std::invalid_argument("unknown mode: " + mode_text);
  }
  const std::uint64_t seed = f.seed.value_or(7);
  const Params params = load_params_flag(f);
  const bool turns = *protocol == SuiteProtocol::kTurns;
  CampaignData data;
  load_campaign(fs::path(f.out) / "logs", data, !turns, turns);
  const fs::path mpath = map_path(f);
  if (!fs::exists(mpath)) {
    throw std::runtime_error("map not found: " + mpath.string());
  }
  const OrchardMap filter_map = inflate_widths(load_map(mpath), params.filter.width_inflation);

  Manifest manifest(
    "evaluate-" + protocol_text, f, seed, params,
    {{"protocol", protocol_text},
     {"mode", mode_text},
     {"starts", opts.starts},
     {"trials", opts.trials_per_start},
     {"max_turns", opts.max_turns}});
  const std::string fingerprint = params_fingerprint(params);
  std::vector<SuiteSummary> summaries;
  const fs::path results = fs::path(f.out) / "results";
  for (const OdometryMode mode : modes) {
    const SuiteResult r = run_suite(data, filter_map, params.filter, mode, *protocol, seed, opts);
    std::vector<json> rows;
    rows.reserve(r.trials.size());
    for (const auto & t : r.trials) {
      rows.push_back(to_json(t, *protocol, fingerprint));
    }
    write_ndjson(results / (protocol_text + "_" + std::string(to_string(mode)) + ".ndjson"), rows);
    summaries.push_back(r.summary);
  }
  const TableReport table = summarize_tables(summaries);
  std::vector<json> summary_rows;
  for (const auto & s : summaries) {
    summary_rows.push_back(to_json(s));
  }
  write_ndjson(results / (protocol_text + "_summary.ndjson"), summary_rows);
  manifest.finish();
  std::cout << table.text;
  return 0;
}

int cmd_drift(const CommonFlags & f)
{
  const std::uint64_t seed = f.seed.value_or(0);
  const Params params = load_params_flag(f);
  const fs::path dir = fs::path(f.out) / "logs";
  const auto files = list_logs(dir, "straight_");
  if (files.empty()) {
    throw std::runtime_error("no straight-row logs in " + dir.string());
  }
  Manifest manifest("drift", f, seed, params, json::object());
  std::vector<json> records;
  std::vector<double> axial, transverse, euclid, rates;
  for (const auto & p : files) {
    const LoadedLog log = load_log(p);
    const auto steps = group_steps(log.records);
    const DriftStats stats = gnss_offset_series(steps, Vec2{} - params.sim.gnss_corrected_mount);
    json rec = drift_summary_json(stats);
    rec["log"] = p.filename().string();
    rec["record"] = "run";
    records.push_back(std::move(rec));
    for (const auto & r : stats.readings) {
      axial.push_back(r.offset.axial);
      transverse.push_back(r.offset.transverse);
      euclid.push_back(r.offset.euclidean);
    }
    rates.insert(rates.end(), stats.rates.begin(), stats.rates.end());
  }
  records.push_back({
    {"record", "aggregate"},
    {"runs", files.size()},
    {"axial", to_json(quartiles(axial))},
    {"transverse", to_json(quartiles(transverse))},
    {"euclidean", to_json(quartiles(euclid))},
    {"rate", to_json(quartiles(rates))},
  });
  write_ndjson(fs::path(f.out) / "results" / "drift.ndjson", records);
  manifest.finish();
  std::cout << "analyzed " << files.size() << " runs\n";
  return 0;
}

HttpServer * g_server = nullptr;

void on_signal(int)
{
  if (g_server != nullptr) {
    g_server->stop();
  }
}

int cmd_serve(const CommonFlags & f, int port)
{
  ServerOptions opts;
  opts.root = f.out;
  opts.params = load_params_flag(f);
  opts.seed = f.seed.value_or(1);
  const fs::path mpath = map_path(f);
  if (fs::exists(mpath)) {
    opts.map_path = mpath;
  }
  SessionManager manager(opts);
  HttpServer server(manager);
  const int bound = server.bind("127.0.0.1", port);
  if (bound < 0) {
    throw std::runtime_error("cannot bind port " + std::to_string(port));
  }
  std::cout << "listening on 127.0.0.1:" << bound << std::endl;
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.listen();
  g_server = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Monte Carlo localization on orchard landmark maps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonFlags f;
  const char * env_out = std::getenv("SEETREE_OUT");
  f.out = env_out != nullptr && *env_out != '\0' ? env_out : "out";
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App * sub) {
    sub->add_option("--out", f.out, "output root (maps/, logs/, results/, manifests/)");
    sub->add_option("--map", f.map, "map file (default <out>/maps/default.json)");
    sub->add_option("--params", f.params, "parameter file (JSON)");
    sub->add_option("--seed", seed, "master seed");
  };

  int rows = MapGenConfig{}.rows;
  int trees = MapGenConfig{}.trees_per_row;
  auto * genmap = app.add_subcommand("genmap", "generate a synthetic orchard map");
  add_common(genmap);
  genmap->add_option("--rows", rows, "number of rows")->check(CLI::PositiveNumber);
  genmap->add_option("--trees", trees, "trees per row")->check(CLI::PositiveNumber);

  std::string only;
  auto * simulate = app.add_subcommand("simulate", "simulate the straight-row and row-change campaign");
  add_common(simulate);
  simulate->add_option("--only", only, "restrict to one log family")->check(CLI::IsMember({"straight", "turns"}));

  std::string protocol = "rows-large";
  std::string mode = "all";
  SuiteOptions suite;
  auto * evaluate = app.add_subcommand("evaluate", "run an evaluation suite over the campaign");
  add_common(evaluate);
  evaluate->add_option("--protocol", protocol, "rows-large | rows-small | turns");
  evaluate->add_option("--mode", mode, "wheel | wheel_imu | visual | gnss | all");
  evaluate->add_option("--starts", suite.starts, "start points for row protocols")->check(CLI::PositiveNumber);
  evaluate->add_option("--trials", suite.trials_per_start, "trials per start or turn")->check(CLI::PositiveNumber);
  evaluate->add_option("--max-turns", suite.max_turns, "cap on turn logs (negative = all)");
  evaluate->add_option("--threads", suite.threads, "worker threads (0 = all cores)");

  auto * drift = app.add_subcommand("drift", "uncorrected GNSS offset analysis on straight-row logs");
  add_common(drift);

  int port = 8080;
  auto * serve = app.add_subcommand("serve", "serve replay sessions over HTTP");
  add_common(serve);
  serve->add_option("--port", port, "TCP port (0 = any free port)")->check(CLI::Range(0, 65535));

  CLI11_PARSE(app, argc, argv);

  for (auto * sub : {genmap, simulate, evaluate, drift, serve}) {
    if (sub->parsed() && sub->count("--seed") > 0) {
      f.seed = seed;
    }
  }

  try {
    if (genmap->parsed()) {
      return cmd_genmap(f, rows, trees);
    }
    if (simulate->parsed()) {
      return cmd_simulate(f, only);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(f, protocol, mode, suite);
    }
    if (drift->parsed()) {
      return cmd_drift(f);
    }
    if (serve->parsed()) {
      return cmd_serve(f, port);
    }
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
