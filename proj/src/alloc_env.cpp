#include "uavsched/alloc_env.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "uavsched/error.hpp"

namespace uavsched {

int AllocationState::current_task() const {
  if (terminal()) throw ContractError("allocation episode already finished");
  return order[static_cast<std::size_t>(step)];
}

std::vector<int> AllocationState::allocated(int vehicle) const {
  if (vehicle < 1 || vehicle > n_vehicles) throw ArgumentError("vehicle out of range");
  // A real allocation is an entry equal to the task presented at that step.
  std::vector<int> out;
  const auto& list = per_vehicle[static_cast<std::size_t>(vehicle - 1)];
  for (std::size_t t = 0; t < list.size(); ++t) {
    if (list[t] == order[t]) out.push_back(list[t]);
  }
  return out;
}

AllocationState reset(const Instance& instance) {
  std::vector<int> order(instance.n_tasks());
  std::iota(order.begin(), order.end(), 1);
  return reset(instance, std::move(order));
}

AllocationState reset(const Instance& instance, std::vector<int> order) {
  if (instance.n_vehicles < 1) throw ArgumentError("instance needs at least one vehicle");
  std::vector<int> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] != static_cast<int>(i + 1) || sorted.size() != instance.n_tasks()) {
      throw ArgumentError("task order must be a permutation of 1..N-1");
    }
  }
  AllocationState s;
  s.n_vehicles = instance.n_vehicles;
  s.order = std::move(order);
  s.per_vehicle.assign(static_cast<std::size_t>(instance.n_vehicles), {});
  return s;
}

void apply_step(AllocationState& state, int vehicle) {
  if (state.terminal()) throw ContractError("step after the terminal state");
  if (vehicle < 1 || vehicle > state.n_vehicles) {
    throw ArgumentError("vehicle " + std::to_string(vehicle) + " out of range 1.." +
                        std::to_string(state.n_vehicles));
  }
  const int task = state.current_task();
  for (int k = 1; k <= state.n_vehicles; ++k) {
    auto& list = state.per_vehicle[static_cast<std::size_t>(k - 1)];
    if (k == vehicle) {
      list.push_back(task);
    } else {
      list.push_back(list.empty() ? kDepotSentinel : list.back());
    }
  }
  ++state.step;
}

AllocationState step(const AllocationState& state, int vehicle) {
  AllocationState next = state;
  apply_step(next, vehicle);
  return next;
}

Allocation finalize(const AllocationState& state) {
  if (!state.terminal()) throw ContractError("finalize needs a terminal state");
  Allocation a;
  for (int k = 1; k <= state.n_vehicles; ++k) a.subsets.push_back(state.allocated(k));
  return a;
}

RewardRecord reward(const Allocation& allocation, const std::vector<Route>& routes) {
  if (routes.size() != allocation.subsets.size()) {
    throw ContractError("one route per vehicle subset required");
  }
  RewardRecord r;
  for (std::size_t k = 0; k < routes.size(); ++k) {
    const auto& subset = allocation.subsets[k];
    for (int task : routes[k].visits) {
      if (std::find(subset.begin(), subset.end(), task) == subset.end()) {
        throw ContractError("route " + std::to_string(k + 1) + " visits task " +
                            std::to_string(task) + " outside its subset");
      }
    }
    r.per_vehicle_executed.push_back(static_cast<int>(routes[k].visits.size()));
    r.total += r.per_vehicle_executed.back();
  }
  return r;
}

Allocation allocation_from_actions(const Instance& instance, const std::vector<int>& actions) {
  AllocationState s = reset(instance);
  for (int a : actions) apply_step(s, a);
  return finalize(s);
}

}  // namespace uavsched
