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


#include "orchard_loc/server.hpp"

#include <algorithm>
#include <fstream>
#include <utility>

#include "httplib.h"
#include "orchard_loc/log_io.hpp"

namespace orchard_loc
{

namespace
{

constexpr int kMaxStepsPerRequest = 100000;

nlohmann::json pose_json(const Pose2D & p)
{
  return {{"x", p.x}, {"y", p.y}, {"theta", p.theta}};
}

// Log names are bare file names inside <root>/logs; no path components.
void check_plain_name(const std::string & name)
{
  if (name.empty() || name.find('/') != std::string::npos || name.find('\\') != std::string::npos ||
      name == "." || name == "..") {
    throw ApiError(400, "invalid name: " + name);
  }
}

template <typename T>
T field_or(const nlohmann::json & body, const char * key, T fallback)
{
  if (!body.contains(key)) {
    return fallback;
  }
  try {
    return body.at(key).get<T>();
  } catch (const nlohmann::json::exception &) {
    throw ApiError(400, std::string("bad field: ") + key);
  }
}

}  // namespace

std::vector<Particle> decimate_particles(const ParticleSet & set, std::size_t cap)
{
  const auto & ps = set.particles;
  if (ps.size() <= cap) {
    return ps;
  }
  std::vector<Particle> out;
  if (cap == 0) {
    return out;
  }
  double total = 0.0;
  for (const auto & p : ps) {
    total += p.weight;
  }
  out.reserve(cap);
  const double step = total / static_cast<double>(cap);
  double target = 0.5 * step;
  double cumulative = ps[0].weight;
  std::size_t i = 0;
  for (std::size_t m = 0; m < cap; ++m) {
    while (cumulative < target && i + 1 < ps.size()) {
      ++i;
      cumulative += ps[i].weight;
    }
    Particle p = ps[i];
    p.weight = 1.0 / static_cast<double>(cap);
    out.push_back(p);
    target += step;
  }
  return out;
}

struct SessionManager::Session
{
  std::mutex mutex;
  std::string id;
  std::string log;
  LogHeader header;
  std::vector<LogStep> steps;
  std::shared_ptr<const OrchardMap> base_map;
  std::unique_ptr<OrchardMap> filter_map;
  Params params;
  OdometryMode mode = OdometryMode::kGnss;
  std::uint64_t seed = 0;
  std::unique_ptr<Replay> replay;
  std::size_t start_step = 0;
  std::string init = "area";
  std::string preset = "large";
  std::size_t particle_cap = 500;

  void restart()
  {
    replay = std::make_unique<Replay>(*filter_map, steps, mode, params.filter, seed);
    const Pose2D & truth = steps[start_step].truth;
    if (init == "cluster") {
      replay->init_cluster(start_step, truth, kClusterPosSigma, kClusterHeadingSigma);
      return;
    }
    const double heading = row_direction_near(*filter_map, truth);
    if (preset == "small") {
      const Vec2 center = steps[start_step].gnss.value_or(truth.position());
      replay->init_area(start_step, center, kSmallAreaSide, heading, kInitHeadingHalfwidth);
    } else {
      replay->init_area(start_step, truth.position(), kLargeAreaSide, heading, kInitHeadingHalfwidth);
    }
  }

  nlohmann::json frame(std::size_t cap) const
  {
    const GroupReport groups = replay->groups();
    nlohmann::json particles = nlohmann::json::array();
    for (const Particle & p : decimate_particles(replay->particles(), cap)) {
      particles.push_back({{"x", p.pose.x}, {"y", p.pose.y}, {"theta", p.pose.theta}, {"weight", p.weight}});
    }
    const std::size_t k = replay->current_step();
    return {
      {"t", steps[k].t},
      {"step", k},
      {"truth", pose_json(steps[k].truth)},
      {"estimate", pose_json(replay->estimate())},
      {"converged", groups.converged},
      {"group_count", groups.groups.size()},
      {"particles", std::move(particles)},
      {"metrics",
       {{"final_error", replay->error()}, {"distance_traveled", truth_distance(steps, start_step, k)}}},
    };
  }

  nlohmann::json state() const
  {
    return {
      {"session_id", id},
      {"log", log},
      {"mode", std::string(to_string(mode))},
      {"seed", seed},
      {"init", init},
      {"preset", preset},
      {"start_step", start_step},
      {"step_count", steps.size()},
      {"at_end", replay->at_end()},
      {"params", to_json(params)},
      {"frame", frame(particle_cap)},
    };
  }
};

SessionManager::SessionManager(ServerOptions options) : options_(std::move(options))
{
  options_.params.validate();
}

nlohmann::json SessionManager::list_logs() const
{
  nlohmann::json out = nlohmann::json::array();
  const auto dir = options_.root / "logs";
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    return out;
  }
  std::vector<std::filesystem::path> files;
  for (const auto & entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ndjson") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto & path : files) {
    nlohmann::json item{{"name", path.filename().string()}};
    std::ifstream in(path);
    std::string first;
    if (std::getline(in, first)) {
      try {
        const auto header = nlohmann::json::parse(first);
        item["map"] = header.value("map", "");
        if (header.contains("trajectory")) {
          item["trajectory"] = header["trajectory"];
        }
      } catch (const nlohmann::json::exception &) {
        item["error"] = "unreadable header";
      }
    }
    out.push_back(std::move(item));
  }
  return out;
}

std::shared_ptr<const OrchardMap> SessionManager::map_for(const std::string & name)
{
  std::filesystem::path path = options_.map_path;
  if (!name.empty()) {
    check_plain_name(name);
    path = options_.root / "maps" / name;
    if (!std::filesystem::exists(path) && std::filesystem::exists(path.string() + ".json")) {
      path = path.string() + ".json";
    }
  }
  if (path.empty()) {
    throw ApiError(400, "log names no map and the server has no default map");
  }
  const std::string key = path.string();
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = maps_.find(key);
  if (it != maps_.end()) {
    return it->second;
  }
  auto map = std::make_shared<const OrchardMap>(load_map(path));
  maps_.emplace(key, map);
  return map;
}

nlohmann::json SessionManager::create_session(const nlohmann::json & body)
{
  if (!body.is_object() || !body.contains("log") || !body["log"].is_string()) {
    throw ApiError(400, "body must name a log");
  }
  auto s = std::make_shared<Session>();
  s->log = body["log"].get<std::string>();
  check_plain_name(s->log);
  const auto log_path = options_.root / "logs" / s->log;
  if (!std::filesystem::exists(log_path)) {
    throw ApiError(404, "no such log: " + s->log);
  }
  LoadedLog loaded = load_log(log_path);
  s->header = loaded.header;
  s->steps = group_steps(loaded.records);
  if (s->steps.empty()) {
    throw ApiError(400, "log has no steps");
  }
  s->base_map = map_for(s->header.map);
  s->params = options_.params;
  if (body.contains("params")) {
    s->params = apply_params(s->params, body["params"]);
  }
  s->filter_map = std::make_unique<OrchardMap>(inflate_widths(*s->base_map, s->params.filter.width_inflation));
  const auto mode = parse_mode(field_or<std::string>(body, "mode", "gnss"));
  if (!mode) {
    throw ApiError(400, "unknown mode");
  }
  s->mode = *mode;
  s->seed = field_or<std::uint64_t>(body, "seed", options_.seed);
  s->init = field_or<std::string>(body, "init", "area");
  s->preset = field_or<std::string>(body, "preset", "large");
  s->start_step = field_or<std::size_t>(body, "start_step", 0);
  s->particle_cap = field_or<std::size_t>(body, "max_particles", options_.default_particle_cap);
  if (s->init != "area" && s->init != "cluster") {
    throw ApiError(400, "init must be area or cluster");
  }
  if (s->preset != "large" && s->preset != "small") {
    throw ApiError(400, "preset must be large or small");
  }
  if (s->start_step >= s->steps.size()) {
    throw ApiError(400, "start_step beyond the log");
  }
  s->restart();
  {
    std::lock_guard<std::mutex> lock(mutex_);
    s->id = "s" + std::to_string(next_id_++);
    sessions_.emplace(s->id, s);
  }
  std::lock_guard<std::mutex> lock(s->mutex);
  return s->state();
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string & id) const
{
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) {
    throw ApiError(404, "no such session: " + id);
  }
  return it->second;
}

nlohmann::json SessionManager::session_state(const std::string & id) const
{
  auto s = find(id);
  std::lock_guard<std::mutex> lock(s->mutex);
  return s->state();
}

nlohmann::json SessionManager::patch_params(const std::string & id, const nlohmann::json & patch)
{
  if (!patch.is_object()) {
    throw ApiError(400, "params patch must be an object");
  }
  auto s = find(id);
  std::lock_guard<std::mutex> lock(s->mutex);
  const Params next = apply_params(s->params, patch);
  if (next.filter.width_inflation != s->params.filter.width_inflation) {
    // Replay keeps a pointer to this object, so rebuild it in place.
    *s->filter_map = inflate_widths(*s->base_map, next.filter.width_inflation);
  }
  s->params = next;
  s->replay->set_params(next.filter);
  return {{"session_id", id}, {"params", to_json(s->params)}};
}

void SessionManager::step(
  const std::string & id, const nlohmann::json & body, const std::function<void(const nlohmann::json &)> & emit)
{
  auto s = find(id);
  const int n = field_or<int>(body, "n_steps", 1);
  if (n < 1 || n > kMaxStepsPerRequest) {
    throw ApiError(400, "n_steps out of range");
  }
  std::lock_guard<std::mutex> lock(s->mutex);
  const std::size_t cap = field_or<std::size_t>(body, "max_particles", s->particle_cap);
  for (int i = 0; i < n && s->replay->advance(); ++i) {
    emit(s->frame(cap));
  }
}

nlohmann::json SessionManager::reset(const std::string & id, const nlohmann::json & body)
{
  auto s = find(id);
  std::lock_guard<std::mutex> lock(s->mutex);
  const auto init = field_or<std::string>(body, "init", s->init);
  const auto preset = field_or<std::string>(body, "preset", s->preset);
  const auto start = field_or<std::size_t>(body, "start_step", s->start_step);
  if (init != "area" && init != "cluster") {
    throw ApiError(400, "init must be area or cluster");
  }
  if (preset != "large" && preset != "small") {
    throw ApiError(400, "preset must be large or small");
  }
  if (start >= s->steps.size()) {
    throw ApiError(400, "start_step beyond the log");
  }
  s->init = init;
  s->preset = preset;
  s->start_step = start;
  s->restart();
  return s->state();
}

void SessionManager::remove(const std::string & id)
{
  std::lock_guard<std::mutex> lock(mutex_);
  if (sessions_.erase(id) == 0) {
    throw ApiError(404, "no such session: " + id);
  }
}

struct HttpServer::Impl
{
  SessionManager & manager;
  httplib::Server server;

  explicit Impl(SessionManager & m) : manager(m) {}
};

namespace
{

void send_json(httplib::Response & res, const nlohmann::json & body, int status = 200)
{
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

nlohmann::json parse_body(const httplib::Request & req)
{
  if (req.body.empty()) {
    return nlohmann::json::object();
  }
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::parse_error & e) {
    throw ApiError(400, std::string("malformed JSON: ") + e.what());
  }
}

template <typename Fn>
void guarded(httplib::Response & res, Fn && fn)
{
  try {
    fn();
  } catch (const ApiError & e) {
    send_json(res, {{"error", e.what()}}, e.status());
  } catch (const std::invalid_argument & e) {
    send_json(res, {{"error", e.what()}}, 400);
  } catch (const MapError & e) {
    send_json(res, {{"error", e.what()}}, 400);
  } catch (const LogFormatError & e) {
    send_json(res, {{"error", e.what()}}, 400);
  } catch (const std::exception & e) {
    send_json(res, {{"error", e.what()}}, 500);
  }
}

}  // namespace

HttpServer::HttpServer(SessionManager & manager) : impl_(std::make_unique<Impl>(manager))
{
  auto & svr = impl_->server;
  SessionManager & m = manager;

  svr.Get("/api/health", [](const httplib::Request &, httplib::Response & res) {
    send_json(res, {{"status", "ok"}});
  });
  svr.Get("/api/logs", [&m](const httplib::Request &, httplib::Response & res) {
    guarded(res, [&] { send_json(res, {{"logs", m.list_logs()}}); });
  });
  svr.Post("/api/sessions", [&m](const httplib::Request & req, httplib::Response & res) {
    guarded(res, [&] { send_json(res, m.create_session(parse_body(req)), 201); });
  });
  svr.Get(R"(/api/sessions/([A-Za-z0-9]+))", [&m](const httplib::Request & req, httplib::Response & res) {
    guarded(res, [&] { send_json(res, m.session_state(req.matches[1])); });
  });
  svr.Delete(R"(/api/sessions/([A-Za-z0-9]+))", [&m](const httplib::Request & req, httplib::Response & res) {
    guarded(res, [&] {
      m.remove(req.matches[1]);
      send_json(res, {{"deleted", std::string(req.matches[1])}});
    });
  });
  svr.Patch(
    R"(/api/sessions/([A-Za-z0-9]+)/params)", [&m](const httplib::Request & req, httplib::Response & res) {
      guarded(res, [&] { send_json(res, m.patch_params(req.matches[1], parse_body(req))); });
    });
  svr.Post(
    R"(/api/sessions/([A-Za-z0-9]+)/reset)", [&m](const httplib::Request & req, httplib::Response & res) {
      guarded(res, [&] { send_json(res, m.reset(req.matches[1], parse_body(req))); });
    });
  svr.Post(
    R"(/api/sessions/([A-Za-z0-9]+)/step)", [&m](const httplib::Request & req, httplib::Response & res) {
      guarded(res, [&] {
        const std::string id = req.matches[1];
        const nlohmann::json body = parse_body(req);
        m.session_state(id);  // 404 before the stream starts
        const int n = field_or<int>(body, "n_steps", 1);
        if (n < 1 || n > kMaxStepsPerRequest) {
          throw ApiError(400, "n_steps out of range");
        }
        res.set_chunked_content_provider(
          "application/x-ndjson", [&m, id, body](std::size_t, httplib::DataSink & sink) {
            try {
              m.step(id, body, [&sink](const nlohmann::json & frame) {
                const std::string line = frame.dump() + "\n";
                sink.write(line.data(), line.size());
              });
            } catch (const std::exception &) {
              return false;
            }
            sink.done();
            return true;
          });
      });
    });
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string & host, int port)
{
  if (port == 0) {
    return impl_->server.bind_to_any_port(host);
  }
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool HttpServer::listen()
{
  return impl_->server.listen_after_bind();
}

void HttpServer::stop()
{
  impl_->server.stop();
}

}  // namespace orchard_loc
