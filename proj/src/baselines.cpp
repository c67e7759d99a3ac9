#include "uavsched/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uavsched/alloc_env.hpp"
#include "uavsched/error.hpp"
#include "uavsched/rng.hpp"

namespace uavsched {

std::vector<std::vector<int>> kmeans(std::span<const Point> tasks, int k, std::uint64_t seed) {
  const std::size_t n = tasks.size();
  if (k < 1) throw ArgumentError("kmeans: k must be >= 1");
  if (static_cast<std::size_t>(k) > n) {
    throw ArgumentError("kmeans: " + std::to_string(k) + " clusters for " + std::to_string(n) + " tasks");
  }
  Rng rng(seed);
  std::vector<Point> centers{tasks[rng.uniform_int(n)]};
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = distance(tasks[i], centers[0]);
  while (centers.size() < static_cast<std::size_t>(k)) {
    std::size_t far = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (nearest[i] > nearest[far]) far = i;
    }
    centers.push_back(tasks[far]);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], distance(tasks[i], tasks[far]));
  }

  std::vector<int> label(n, 0);
  for (int iter = 0; iter < 100; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      for (int c = 1; c < k; ++c) {
        if (distance(tasks[i], centers[static_cast<std::size_t>(c)]) <
            distance(tasks[i], centers[static_cast<std::size_t>(best)])) {
          best = c;
        }
      }
      label[i] = best;
    }
    double moved = 0.0;
    for (int c = 0; c < k; ++c) {
      Point sum{0.0, 0.0};
      int count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (label[i] != c) continue;
        sum.x += tasks[i].x;
        sum.y += tasks[i].y;
        ++count;
      }
      if (count == 0) continue;  // keep the old center
      const Point next{sum.x / count, sum.y / count};
      moved = std::max(moved, distance(next, centers[static_cast<std::size_t>(c)]));
      centers[static_cast<std::size_t>(c)] = next;
    }
    if (moved < 1e-9) break;
  }
  std::vector<std::vector<int>> clusters(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    clusters[static_cast<std::size_t>(label[i])].push_back(static_cast<int>(i + 1));
  }
  return clusters;
}

std::string to_string(MoveKind kind) {
  switch (kind) {
    case MoveKind::Insert: return "insert";
    case MoveKind::Swap: return "swap";
    case MoveKind::Relocate: return "relocate";
    case MoveKind::TwoOpt: return "2opt";
  }
  return "?";
}

namespace {

bool improves(const std::vector<int>& cand, double cand_len, const std::vector<int>& cur,
              double cur_len) {
  if (cand.size() != cur.size()) return cand.size() > cur.size();
  return cand_len < cur_len - 1e-12;
}

// First improving feasible neighbor, or false.
bool search(MoveKind kind, const RouteProblem& p, std::vector<int>& route, double& length) {
  const std::size_t n = p.tasks.size();
  const std::size_t m = route.size();
  std::vector<char> in_route(n + 1, 0);
  for (int v : route) in_route[static_cast<std::size_t>(v)] = 1;
  auto try_candidate = [&](std::vector<int>& cand) {
    const double len = tour_length(p, cand);
    if (len <= p.budget && improves(cand, len, route, length)) {
      route = std::move(cand);
      length = len;
      return true;
    }
    return false;
  };

  switch (kind) {
    case MoveKind::Insert:
      for (std::size_t j = 1; j <= n; ++j) {
        if (in_route[j]) continue;
        for (std::size_t pos = 0; pos <= m; ++pos) {
          std::vector<int> cand = route;
          cand.insert(cand.begin() + static_cast<std::ptrdiff_t>(pos), static_cast<int>(j));
          if (try_candidate(cand)) return true;
        }
      }
      return false;
    case MoveKind::Swap:
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 1; j <= n; ++j) {
          if (in_route[j]) continue;
          std::vector<int> cand = route;
          cand[i] = static_cast<int>(j);
          if (try_candidate(cand)) return true;
        }
      }
      return false;
    case MoveKind::Relocate:
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t pos = 0; pos < m; ++pos) {
          if (pos == i) continue;
          std::vector<int> cand = route;
          const int v = cand[i];
          cand.erase(cand.begin() + static_cast<std::ptrdiff_t>(i));
          cand.insert(cand.begin() + static_cast<std::ptrdiff_t>(pos), v);
          if (try_candidate(cand)) return true;
        }
      }
      return false;
    case MoveKind::TwoOpt:
      for (std::size_t i = 0; i + 1 < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
          std::vector<int> cand = route;
          std::reverse(cand.begin() + static_cast<std::ptrdiff_t>(i),
                       cand.begin() + static_cast<std::ptrdiff_t>(j + 1));
          if (try_candidate(cand)) return true;
        }
      }
      return false;
  }
  return false;
}

}  // namespace

PlannedRoute vnd(const RouteProblem& problem, const VndConfig& config) {
  if (config.order.empty()) throw ArgumentError("vnd: empty neighborhood order");
  PlannedRoute start = greedy_insert_route(problem);
  std::vector<int> route = std::move(start.visits);
  double length = start.length;
  int passes = 0;
  std::size_t k = 0;
  while (k < config.order.size() && passes < config.max_passes) {
    if (search(config.order[k], problem, route, length)) {
      ++passes;
      k = 0;
    } else {
      ++k;
    }
  }
  PlannedRoute out;
  out.count = static_cast<int>(route.size());
  out.length = length;
  out.visits = std::move(route);
  return out;
}

std::vector<std::vector<int>> kmeans_allocation(const Instance& instance, std::uint64_t seed) {
  const std::size_t v = static_cast<std::size_t>(instance.n_vehicles);
  const std::size_t n = instance.n_tasks();
  std::vector<std::vector<int>> subsets(v);
  if (n == 0) return subsets;
  const int k = static_cast<int>(std::min(v, n));
  auto clusters = kmeans(instance.tasks, k, seed);
  for (std::size_t c = 0; c < clusters.size(); ++c) subsets[c] = std::move(clusters[c]);
  return subsets;
}

std::vector<std::vector<int>> random_allocation(const Instance& instance, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<int>> subsets(static_cast<std::size_t>(instance.n_vehicles));
  for (std::size_t t = 1; t <= instance.n_tasks(); ++t) {
    subsets[rng.uniform_int(subsets.size())].push_back(static_cast<int>(t));
  }
  return subsets;
}

Solution route_subsets(const Instance& instance, const std::vector<std::vector<int>>& subsets,
                       RoutePlanner planner, const VndConfig& config) {
  Solution sol;
  for (std::size_t k = 0; k < subsets.size(); ++k) {
    const RouteProblem p = route_problem(instance, subsets[k]);
    const PlannedRoute pr = planner == RoutePlanner::Vnd ? vnd(p, config) : greedy_insert_route(p);
    Route r;
    r.vehicle_id = static_cast<int>(k + 1);
    for (int pos : pr.visits) r.visits.push_back(subsets[k][static_cast<std::size_t>(pos - 1)]);
    sol.routes.push_back(std::move(r));
  }
  return sol;
}

Solution kmeans_vnd(const Instance& instance, std::uint64_t seed, const VndConfig& config) {
  return route_subsets(instance, kmeans_allocation(instance, seed), RoutePlanner::Vnd, config);
}

Solution kmeans_greedy(const Instance& instance, std::uint64_t seed) {
  return route_subsets(instance, kmeans_allocation(instance, seed), RoutePlanner::GreedyInsert);
}

Solution random_greedy(const Instance& instance, std::uint64_t seed) {
  return route_subsets(instance, random_allocation(instance, seed), RoutePlanner::GreedyInsert);
}

Solution kmeans_am(const Instance& instance, LowerModel& lower, const DecodeMode& mode,
                   std::uint64_t seed) {
  Allocation a{kmeans_allocation(instance, seed)};
  Solution sol;
  sol.routes = plan_allocation(lower, instance, a, mode);
  return sol;
}

}  // namespace uavsched
