#pragma once

#include <vector>

#include "uavsched/instance.hpp"

namespace uavsched {

// Stands in for "no allocation yet" when a vehicle's list is padded.
// Decoders read it as the depot node.
inline constexpr int kDepotSentinel = 0;

/// Sequential task-allocation episode. At step t the task order[t] is
/// assigned to one vehicle; every other vehicle repeats its last entry so
/// that all lists keep length t.
struct AllocationState {
  int step = 0;
  int n_vehicles = 0;
  std::vector<int> order;                  // presentation order of task indices
  std::vector<std::vector<int>> per_vehicle;  // padded lists, all of length step

  int n_tasks() const { return static_cast<int>(order.size()); }
  bool terminal() const { return step >= n_tasks(); }
  // Task being allocated; throws ContractError once terminal.
  int current_task() const;
  // Real (non-sentinel, non-repeated) allocations of vehicle k (1-based).
  std::vector<int> allocated(int vehicle) const;
};

struct Allocation {
  std::vector<std::vector<int>> subsets;  // subsets[k-1] for vehicle k

  friend bool operator==(const Allocation&, const Allocation&) = default;
};

struct RewardRecord {
  std::vector<int> per_vehicle_executed;
  int total = 0;
};

// Tasks in index order.
AllocationState reset(const Instance& instance);
// Tasks in the given order, which must be a permutation of 1..N-1.
AllocationState reset(const Instance& instance, std::vector<int> order);

// Pure transition; `vehicle` is 1-based. Throws ArgumentError on a bad
// action and ContractError after the terminal step.
AllocationState step(const AllocationState& state, int vehicle);
// In-place variant of step.
void apply_step(AllocationState& state, int vehicle);

// Throws ContractError on a non-terminal state.
Allocation finalize(const AllocationState& state);

// routes[k] must only visit tasks of allocation.subsets[k] (ContractError).
RewardRecord reward(const Allocation& allocation, const std::vector<Route>& routes);

// Allocation from a full action sequence, for tests and tooling.
Allocation allocation_from_actions(const Instance& instance, const std::vector<int>& actions);

}  // namespace uavsched
