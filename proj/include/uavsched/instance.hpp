#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace uavsched {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

double distance(Point a, Point b);

/// A scheduling problem: one depot, N-1 tasks, V identical vehicles with a
/// flight budget D. Task index i in 1..N-1 refers to tasks[i-1]; index 0 is
/// the depot (start and end of every route).
struct Instance {
  Point depot;
  std::vector<Point> tasks;
  int n_vehicles = 1;
  double budget = 1.0;

  std::size_t n_tasks() const { return tasks.size(); }
  // Node by index (0 = depot). Throws IndexError.
  Point node(int index) const;

  friend bool operator==(const Instance&, const Instance&) = default;
};

// Throws ArgumentError if the instance breaks its invariants.
void check_instance(const Instance& instance);

Instance generate_instance(std::uint64_t seed, int n_tasks, int n_vehicles,
                           double budget);

/// One vehicle's tour. Depot start/end are implicit.
struct Route {
  int vehicle_id = 1;
  std::vector<int> visits;

  friend bool operator==(const Route&, const Route&) = default;
};

struct Solution {
  std::vector<Route> routes;

  friend bool operator==(const Solution&, const Solution&) = default;
};

// d(depot, v1) + sum d(vi, vi+1) + d(vk, depot). Throws IndexError.
double route_length(const Route& route, const Instance& instance);
double route_length(std::span<const int> visits, const Instance& instance);

struct Violation {
  std::string constraint;  // e.g. "1-3", "5", "index", "vehicle"
  std::string detail;
};

struct ValidationReport {
  bool feasible = true;
  std::vector<Violation> violations;

  void add(std::string constraint, std::string detail);
};

inline constexpr double kBudgetTolerance = 1e-9;

ValidationReport validate_solution(const Solution& solution,
                                   const Instance& instance);

// Total executed tasks.
int objective(const Solution& solution);

// Percentage shortfall of `obj` from `best`. Throws ArgumentError if best <= 0.
double gap(double obj, double best);

}  // namespace uavsched
