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


#ifndef ORCHARD_LOC__SERVER_HPP_
#define ORCHARD_LOC__SERVER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "orchard_loc/eval.hpp"
#include "orchard_loc/params.hpp"

namespace orchard_loc
{

/// Request-level failure carrying the HTTP status it maps to.
class ApiError : public std::runtime_error
{
public:
  ApiError(int status, const std::string & what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

private:
  int status_;
};

struct ServerOptions
{
  std::filesystem::path root;      // holds maps/ and logs/
  std::filesystem::path map_path;  // used when a log names no map
  Params params;
  std::uint64_t seed = 1;
  std::size_t default_particle_cap = 500;
};

/// Thins a particle set to at most `cap` entries by systematic sampling on
/// weight; sampled entries carry weight 1/cap. Sets within the cap are
/// returned unchanged.
std::vector<Particle> decimate_particles(const ParticleSet & set, std::size_t cap);

/// Replay sessions behind the HTTP API. Every method is thread-safe.
class SessionManager
{
public:
  explicit SessionManager(ServerOptions options);

  nlohmann::json list_logs() const;
  /// body: {log, params?, seed?, init?, preset?, start_step?}
  nlohmann::json create_session(const nlohmann::json & body);
  nlohmann::json session_state(const std::string & id) const;
  nlohmann::json patch_params(const std::string & id, const nlohmann::json & patch);
  /// Advances up to n_steps (stops at the log end), calling `emit` with one
  /// frame per processed step.
  void step(
    const std::string & id, const nlohmann::json & body, const std::function<void(const nlohmann::json &)> & emit);
  /// body: {init: area|cluster, preset?: large|small, start_step?}
  nlohmann::json reset(const std::string & id, const nlohmann::json & body);
  void remove(const std::string & id);

private:
  struct Session;

  std::shared_ptr<Session> find(const std::string & id) const;
  std::shared_ptr<const OrchardMap> map_for(const std::string & name);

  ServerOptions options_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::map<std::string, std::shared_ptr<const OrchardMap>> maps_;
  std::uint64_t next_id_ = 1;
};

/// HTTP front end. Routes, all JSON unless noted:
///   GET    /api/health
///   GET    /api/logs
///   POST   /api/sessions                -> {session_id, ...state}
///   GET    /api/sessions/{id}
///   PATCH  /api/sessions/{id}/params
///   POST   /api/sessions/{id}/step      -> NDJSON, one frame per line
///   POST   /api/sessions/{id}/reset
///   DELETE /api/sessions/{id}
class HttpServer
{
public:
  explicit HttpServer(SessionManager & manager);
  ~HttpServer();

  HttpServer(const HttpServer &) = delete;
  HttpServer & operator=(const HttpServer &) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port or -1.
  int bind(const std::string & host, int port);
  /// Blocks serving requests until stop().
  bool listen();
  void stop();

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace orchard_loc

#endif  // ORCHARD_LOC__SERVER_HPP_
