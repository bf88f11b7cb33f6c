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

#include "orchard_loc/filter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace orchard_loc
{
namespace
{

constexpr double kDegenerateWeight = 1e-300;
// Smallest weight a particle keeps after normalization.
constexpr double kMinWeight = std::numeric_limits<double>::min();

void require(bool ok, const char * field, const char * rule)
{
  if (!ok) {
    throw std::invalid_argument(std::string(field) + " " + rule);
  }
}

void check_count(int n)
{
  if (n < 2) {
    throw std::invalid_argument("particle count must be >= 2");
  }
}

class DisjointSets
{
public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t i)
  {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }

  void unite(std::size_t a, std::size_t b)
  {
    a = find(a);
    b = find(b);
    if (a != b) {
      parent_[std::max(a, b)] = std::min(a, b);
    }
  }

private:
  std::vector<std::size_t> parent_;
};

}  // namespace

double ParticleSet::total_weight() const
{
  double s = 0.0;
  for (const Particle & p : particles) {
    s += p.weight;
  }
  return s;
}

double ParticleSet::effective_sample_size() const
{
  const double total = total_weight();
  double sq = 0.0;
  for (const Particle & p : particles) {
    const double w = p.weight / total;
    sq += w * w;
  }
  return 1.0 / sq;
}

void FilterParams::validate() const
{
  require(particle_count >= 2, "particle_count", "must be >= 2");
  require(group_link_distance > 0.0, "group_link_distance", "must be > 0");
  require(
    convergence_weight_fraction > 0.0 && convergence_weight_fraction <= 1.0, "convergence_weight_fraction",
    "must be in (0, 1]");
  require(resample_ess_fraction > 0.0 && resample_ess_fraction <= 1.0, "resample_ess_fraction", "must be in (0, 1]");
  require(width_inflation >= 0.0 && width_inflation < 0.05, "width_inflation", "must be in [0, 0.05)");
  require(motion.sigma_forward_per_meter >= 0.0, "sigma_forward_per_meter", "must be >= 0");
  require(motion.sigma_forward_floor >= 0.0, "sigma_forward_floor", "must be >= 0");
  require(motion.sigma_dtheta_per_rad >= 0.0, "sigma_dtheta_per_rad", "must be >= 0");
  require(motion.sigma_dtheta_floor >= 0.0, "sigma_dtheta_floor", "must be >= 0");
  sensor.validate();
}

ParticleSet init_area(
  const Vec2 & area_center, double side, double row_heading, double heading_halfwidth, int n, Rng & rng)
{
  check_count(n);
  if (!(side > 0.0)) {
    throw std::invalid_argument("init_area: side must be > 0");
  }
  ParticleSet set;
  set.particles.reserve(n);
  const double h = 0.5 * side;
  std::uniform_real_distribution<double> ux(area_center.dx - h, area_center.dx + h);
  std::uniform_real_distribution<double> uy(area_center.dy - h, area_center.dy + h);
  std::uniform_real_distribution<double> ut(-heading_halfwidth, heading_halfwidth);
  for (int i = 0; i < n; ++i) {
    const double x = ux(rng);
    const double y = uy(rng);
    const double t = heading_halfwidth > 0.0 ? ut(rng) : 0.0;
    set.particles.push_back({{x, y, wrap_angle(row_heading + t)}, 1.0 / n});
  }
  set.normalized = true;
  return set;
}

ParticleSet init_cluster(const Pose2D & pose, double pos_sigma, double heading_sigma, int n, Rng & rng)
{
  check_count(n);
  ParticleSet set;
  set.particles.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double x = sample_normal(rng, pose.x, pos_sigma);
    const double y = sample_normal(rng, pose.y, pos_sigma);
    const double t = sample_normal(rng, pose.theta, heading_sigma);
    set.particles.push_back({{x, y, wrap_angle(t)}, 1.0 / n});
  }
  set.normalized = true;
  return set;
}

void predict(ParticleSet & set, const MotionIncrement & inc, const MotionNoise & noise, Rng & rng)
{
  for (Particle & p : set.particles) {
    p.pose = propagate(p.pose, inc, noise, rng);
  }
}

void normalize(ParticleSet & set)
{
  const double total = set.total_weight();
  for (Particle & p : set.particles) {
    p.weight = std::max(p.weight / total, kMinWeight);
  }
  set.normalized = true;
}

bool update_weights(
  ParticleSet & set, std::span<const TrunkObservation> observations, std::optional<double> observed_heading,
  const OrchardMap & map, const SensorConfig & cfg)
{
  if (observations.empty() && !observed_heading) {
    return false;
  }
  const std::size_t n = set.size();
  std::vector<double> log_w(n);
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Particle & p = set.particles[i];
    double lw = p.weight > 0.0 ? std::log(p.weight) : -std::numeric_limits<double>::infinity();
    lw += trunk_log_likelihood(p.pose, observations, map, cfg);
    if (observed_heading) {
      lw += std::log(orientation_likelihood(p.pose.theta, *observed_heading, cfg.orientation_sigma));
    }
    log_w[i] = lw;
    max_log = std::max(max_log, lw);
  }
  if (!(max_log > std::log(kDegenerateWeight))) {
    for (Particle & p : set.particles) {
      p.weight = 1.0 / static_cast<double>(n);
    }
    set.normalized = true;
    return true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    set.particles[i].weight = std::exp(log_w[i] - max_log);
  }
  normalize(set);
  return false;
}

bool resample(ParticleSet & set, const FilterParams & params, Rng & rng)
{
  const std::size_t n = set.size();
  if (n == 0) {
    return false;
  }
  if (set.effective_sample_size() >= params.resample_ess_fraction * static_cast<double>(n)) {
    return false;
  }
  const double total = set.total_weight();
  std::vector<Particle> out;
  out.reserve(n);
  const double step = 1.0 / static_cast<double>(n);
  const double u = std::uniform_real_distribution<double>(0.0, step)(rng);
  double cumulative = set.particles[0].weight / total;
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pos = u + static_cast<double>(i) * step;
    while (pos >= cumulative && j + 1 < n) {
      ++j;
      cumulative += set.particles[j].weight / total;
    }
    out.push_back({set.particles[j].pose, step});
  }
  set.particles = std::move(out);
  set.normalized = true;
  return true;
}

GroupReport group_particles(const ParticleSet & set, const FilterParams & params)
{
  GroupReport report;
  const std::size_t n = set.size();
  if (n == 0) {
    return report;
  }
  const double link = params.group_link_distance;
  const double link2 = link * link;
  // Cells of side link/sqrt(2): any two points sharing a cell are linked.
  const double cell = link / std::sqrt(2.0);

  struct Binned
  {
    std::int64_t cx;
    std::int64_t cy;
    std::size_t index;
  };
  std::vector<Binned> binned(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Pose2D & p = set.particles[i].pose;
    binned[i] = {
      static_cast<std::int64_t>(std::floor(p.x / cell)), static_cast<std::int64_t>(std::floor(p.y / cell)), i};
  }
  std::sort(binned.begin(), binned.end(), [](const Binned & a, const Binned & b) {
    return a.cx != b.cx ? a.cx < b.cx : (a.cy != b.cy ? a.cy < b.cy : a.index < b.index);
  });

  struct Cell
  {
    std::int64_t cx;
    std::int64_t cy;
    std::size_t begin;
    std::size_t end;
  };
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && binned[j].cx == binned[i].cx && binned[j].cy == binned[i].cy) {
      ++j;
    }
    cells.push_back({binned[i].cx, binned[i].cy, i, j});
    i = j;
  }
  auto find_cell = [&](std::int64_t cx, std::int64_t cy) -> std::ptrdiff_t {
    auto it = std::lower_bound(cells.begin(), cells.end(), std::pair{cx, cy}, [](const Cell & c, const auto & key) {
      return c.cx != key.first ? c.cx < key.first : c.cy < key.second;
    });
    if (it != cells.end() && it->cx == cx && it->cy == cy) {
      return it - cells.begin();
    }
    return -1;
  };

  DisjointSets ds(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::int64_t ox = 0; ox <= 2; ++ox) {
      for (std::int64_t oy = -2; oy <= 2; ++oy) {
        if (ox == 0 && oy <= 0) {
          continue;  // each unordered neighbour pair once
        }
        const std::ptrdiff_t d = find_cell(cells[c].cx + ox, cells[c].cy + oy);
        if (d < 0 || ds.find(c) == ds.find(static_cast<std::size_t>(d))) {
          continue;
        }
        const Cell & a = cells[c];
        const Cell & b = cells[static_cast<std::size_t>(d)];
        bool linked = false;
        for (std::size_t i = a.begin; i < a.end && !linked; ++i) {
          const Pose2D & pi = set.particles[binned[i].index].pose;
          for (std::size_t j = b.begin; j < b.end; ++j) {
            const Pose2D & pj = set.particles[binned[j].index].pose;
            const double dx = pi.x - pj.x;
            const double dy = pi.y - pj.y;
            if (dx * dx + dy * dy <= link2) {
              linked = true;
              break;
            }
          }
        }
        if (linked) {
          ds.unite(c, static_cast<std::size_t>(d));
        }
      }
    }
  }

  std::vector<std::ptrdiff_t> group_of_particle(n, -1);
  std::vector<std::ptrdiff_t> group_of_root(cells.size(), -1);
  // assign groups in order of lowest member index
  std::vector<std::size_t> cell_of_particle(n);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t k = cells[c].begin; k < cells[c].end; ++k) {
      cell_of_particle[binned[k].index] = c;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = ds.find(cell_of_particle[i]);
    if (group_of_root[root] < 0) {
      group_of_root[root] = static_cast<std::ptrdiff_t>(report.groups.size());
      report.groups.emplace_back();
    }
    ParticleGroup & g = report.groups[static_cast<std::size_t>(group_of_root[root])];
    g.members.push_back(i);
    g.weight += set.particles[i].weight;
  }

  const double total = set.total_weight();
  for (ParticleGroup & g : report.groups) {
    double sx = 0.0;
    double sy = 0.0;
    double sc = 0.0;
    double ss = 0.0;
    double sw = 0.0;
    const bool weighted = g.weight > 0.0;
    for (std::size_t i : g.members) {
      const Particle & p = set.particles[i];
      const double w = weighted ? p.weight : 1.0;
      sx += w * p.pose.x;
      sy += w * p.pose.y;
      sc += w * std::cos(p.pose.theta);
      ss += w * std::sin(p.pose.theta);
      sw += w;
    }
    g.centroid = {sx / sw, sy / sw, wrap_angle(std::atan2(ss, sc))};
  }
  for (std::size_t k = 1; k < report.groups.size(); ++k) {
    if (report.groups[k].weight > report.groups[report.heaviest].weight) {
      report.heaviest = k;
    }
  }
  report.converged = report.groups[report.heaviest].weight >= params.convergence_weight_fraction * total;
  return report;
}

std::size_t estimate_index(const ParticleSet & set)
{
  if (set.particles.empty()) {
    throw std::invalid_argument("estimate: empty particle set");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < set.size(); ++i) {
    if (set.particles[i].weight > set.particles[best].weight) {
      best = i;
    }
  }
  return best;
}

Pose2D estimate(const ParticleSet & set) { return set.particles[estimate_index(set)].pose; }

}  // namespace orchard_loc
