#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uavsched/decoding.hpp"
#include "uavsched/instance.hpp"
#include "uavsched/route_policy.hpp"

namespace uavsched {

// Partition of task indices 1..n into k clusters: farthest-point seeding
// from a random first task, then assign/recenter until centers move less
// than 1e-9 or 100 iterations. ArgumentError if k > n or k < 1.
std::vector<std::vector<int>> kmeans(std::span<const Point> tasks, int k, std::uint64_t seed);

enum class MoveKind { Insert, Swap, Relocate, TwoOpt };

std::string to_string(MoveKind kind);

struct VndConfig {
  std::vector<MoveKind> order{MoveKind::Insert, MoveKind::Swap, MoveKind::Relocate,
                              MoveKind::TwoOpt};
  int max_passes = 10000;
};

// Variable neighborhood descent from the cheapest-insertion route. A move
// improves when it raises the visit count, or keeps it and shortens the
// tour. Visits are 1-based positions into problem.tasks.
PlannedRoute vnd(const RouteProblem& problem, const VndConfig& config = {});

// Subsets per vehicle with empty subsets when there are fewer tasks than
// vehicles; cluster c goes to vehicle c.
std::vector<std::vector<int>> kmeans_allocation(const Instance& instance, std::uint64_t seed);

// Each task to a uniformly random vehicle.
std::vector<std::vector<int>> random_allocation(const Instance& instance, std::uint64_t seed);

enum class RoutePlanner { GreedyInsert, Vnd };

Solution route_subsets(const Instance& instance, const std::vector<std::vector<int>>& subsets,
                       RoutePlanner planner, const VndConfig& config = {});

Solution kmeans_vnd(const Instance& instance, std::uint64_t seed, const VndConfig& config = {});
Solution kmeans_greedy(const Instance& instance, std::uint64_t seed);
Solution random_greedy(const Instance& instance, std::uint64_t seed);
Solution kmeans_am(const Instance& instance, LowerModel& lower, const DecodeMode& mode,
                   std::uint64_t seed);

}  // namespace uavsched
