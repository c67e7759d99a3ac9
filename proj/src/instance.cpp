#include "uavsched/instance.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>

#include "uavsched/error.hpp"
#include "uavsched/rng.hpp"

namespace uavsched {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

Point Instance::node(int index) const {
  if (index == 0) return depot;
  if (index < 0 || static_cast<std::size_t>(index) > tasks.size()) {
    throw IndexError("task index " + std::to_string(index) + " outside 0.." +
                     std::to_string(tasks.size()));
  }
  return tasks[static_cast<std::size_t>(index) - 1];
}

namespace {

bool in_unit_square(Point p) {
  return p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0;
}

}  // namespace

void check_instance(const Instance& instance) {
  if (instance.tasks.empty()) throw ArgumentError("instance has no tasks");
  if (instance.n_vehicles < 1) throw ArgumentError("n_vehicles must be >= 1");
  if (!(instance.budget > 0.0) || !std::isfinite(instance.budget)) {
    throw ArgumentError("budget must be positive and finite");
  }
  if (!in_unit_square(instance.depot)) {
    throw ArgumentError("depot outside the unit square");
  }
  for (std::size_t i = 0; i < instance.tasks.size(); ++i) {
    if (!in_unit_square(instance.tasks[i])) {
      throw ArgumentError("task " + std::to_string(i + 1) +
                          " outside the unit square");
    }
  }
}

Instance generate_instance(std::uint64_t seed, int n_tasks, int n_vehicles,
                           double budget) {
  if (n_tasks < 1) throw ArgumentError("n_tasks must be >= 1");
  if (n_vehicles < 1) throw ArgumentError("n_vehicles must be >= 1");
  if (!(budget > 0.0)) throw ArgumentError("budget must be > 0");

  Rng rng(seed);
  Instance inst;
  inst.n_vehicles = n_vehicles;
  inst.budget = budget;
  inst.depot.x = rng.uniform();
  inst.depot.y = rng.uniform();
  inst.tasks.resize(static_cast<std::size_t>(n_tasks));
  for (auto& t : inst.tasks) {
    t.x = rng.uniform();
    t.y = rng.uniform();
  }
  return inst;
}

double route_length(std::span<const int> visits, const Instance& instance) {
  double total = 0.0;
  Point cur = instance.depot;
  for (int v : visits) {
    if (v == 0) throw IndexError("depot index 0 inside a route");
    const Point next = instance.node(v);
    total += distance(cur, next);
    cur = next;
  }
  return total + distance(cur, instance.depot);
}

double route_length(const Route& route, const Instance& instance) {
  return route_length(std::span<const int>(route.visits), instance);
}

void ValidationReport::add(std::string constraint, std::string detail) {
  feasible = false;
  violations.push_back({std::move(constraint), std::move(detail)});
}

ValidationReport validate_solution(const Solution& solution,
                                   const Instance& instance) {
  ValidationReport report;
  const int n = static_cast<int>(instance.n_tasks());
  std::unordered_map<int, int> owner;  // task -> route position

  if (static_cast<int>(solution.routes.size()) > instance.n_vehicles) {
    report.add("vehicle", "solution has " +
                              std::to_string(solution.routes.size()) +
                              " routes for " +
                              std::to_string(instance.n_vehicles) +
                              " vehicles");
  }
  for (std::size_t r = 0; r < solution.routes.size(); ++r) {
    const Route& route = solution.routes[r];
    if (route.vehicle_id < 1 || route.vehicle_id > instance.n_vehicles) {
      report.add("vehicle",
                 "vehicle id " + std::to_string(route.vehicle_id) +
                     " outside 1.." + std::to_string(instance.n_vehicles));
    }
    bool indices_ok = true;
    for (int v : route.visits) {
      if (v < 1 || v > n) {
        indices_ok = false;
        report.add("index", "route " + std::to_string(route.vehicle_id) +
                                " visits unknown task " + std::to_string(v));
        continue;
      }
      auto [it, inserted] = owner.emplace(v, static_cast<int>(r));
      if (!inserted) {
        std::ostringstream os;
        os << "task " << v << " executed more than once (routes "
           << solution.routes[static_cast<std::size_t>(it->second)].vehicle_id
           << " and " << route.vehicle_id << ")";
        report.add("1-3", os.str());
      }
    }
    if (indices_ok) {
      const double len = route_length(route, instance);
      if (len > instance.budget + kBudgetTolerance) {
        std::ostringstream os;
        os.precision(17);
        os << "route " << route.vehicle_id << " length " << len
           << " exceeds budget " << instance.budget;
        report.add("5", os.str());
      }
    }
  }
  return report;
}

int objective(const Solution& solution) {
  int total = 0;
  for (const auto& r : solution.routes) total += static_cast<int>(r.visits.size());
  return total;
}

double gap(double obj, double best) {
  if (!(best > 0.0)) throw ArgumentError("gap: best objective must be > 0");
  return (best - obj) / best * 100.0;
}

}  // namespace uavsched
