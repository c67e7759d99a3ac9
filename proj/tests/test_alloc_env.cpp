#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "uavsched/alloc_env.hpp"
#include "uavsched/error.hpp"
#include "uavsched/rng.hpp"

using namespace uavsched;

namespace {

Instance sized(int n_tasks, int vehicles) { return generate_instance(5, n_tasks, vehicles, 2.0); }

}  // namespace

TEST(AllocEnv, ResetStartsEmpty) {
  const Instance inst = sized(6, 3);
  const AllocationState s = reset(inst);
  EXPECT_EQ(s.step, 0);
  ASSERT_EQ(s.per_vehicle.size(), 3u);
  for (const auto& l : s.per_vehicle) EXPECT_TRUE(l.empty());
  EXPECT_EQ(s.current_task(), 1);
  const AllocationState again = reset(inst);
  EXPECT_EQ(again.order, s.order);
  EXPECT_EQ(again.per_vehicle, s.per_vehicle);
}

TEST(AllocEnv, SingleTaskEpisodeHasOneStep) {
  const Instance inst = sized(1, 2);
  AllocationState s = reset(inst);
  EXPECT_FALSE(s.terminal());
  s = step(s, 2);
  EXPECT_TRUE(s.terminal());
  EXPECT_THROW(step(s, 1), ContractError);
  EXPECT_THROW(s.current_task(), ContractError);
}

TEST(AllocEnv, StepPadsOtherVehicles) {
  const Instance inst = sized(4, 3);
  AllocationState s = reset(inst);
  s = step(s, 2);  // task 1 -> vehicle 2
  EXPECT_EQ(s.per_vehicle[0], std::vector<int>({kDepotSentinel}));
  EXPECT_EQ(s.per_vehicle[1], std::vector<int>({1}));
  EXPECT_EQ(s.per_vehicle[2], std::vector<int>({kDepotSentinel}));
  s = step(s, 1);  // task 2 -> vehicle 1
  EXPECT_EQ(s.per_vehicle[0], std::vector<int>({kDepotSentinel, 2}));
  EXPECT_EQ(s.per_vehicle[1], std::vector<int>({1, 1}));
  EXPECT_EQ(s.per_vehicle[2], std::vector<int>({kDepotSentinel, kDepotSentinel}));
  s = step(s, 2);  // task 3 -> vehicle 2
  EXPECT_EQ(s.per_vehicle[1], std::vector<int>({1, 1, 3}));
  EXPECT_EQ(s.allocated(2), std::vector<int>({1, 3}));
  EXPECT_EQ(s.allocated(1), std::vector<int>({2}));
  EXPECT_TRUE(s.allocated(3).empty());
}

TEST(AllocEnv, BadActionsAreRejected) {
  const Instance inst = sized(3, 2);
  const AllocationState s = reset(inst);
  EXPECT_THROW(step(s, 0), ArgumentError);
  EXPECT_THROW(step(s, 3), ArgumentError);
  EXPECT_THROW(finalize(s), ContractError);
  EXPECT_THROW(reset(inst, {1, 1, 2}), ArgumentError);
  EXPECT_THROW(reset(inst, {1, 2}), ArgumentError);
}

TEST(AllocEnv, StepIsPure) {
  const Instance inst = sized(3, 2);
  const AllocationState s = reset(inst);
  const AllocationState next = step(s, 1);
  EXPECT_EQ(s.step, 0);
  EXPECT_TRUE(s.per_vehicle[0].empty());
  AllocationState inplace = s;
  apply_step(inplace, 1);
  EXPECT_EQ(inplace.per_vehicle, next.per_vehicle);
  EXPECT_EQ(inplace.step, next.step);
}

// Random episodes: padded lists stay equal length, the chosen list ends with
// the current task, the others repeat their tail, and finalize partitions.
TEST(AllocEnv, RandomEpisodesKeepInvariants) {
  Rng rng(2024);
  for (int ep = 0; ep < 100; ++ep) {
    const int n = 1 + static_cast<int>(rng.uniform_int(30));
    const int v = 1 + static_cast<int>(rng.uniform_int(5));
    const Instance inst = generate_instance(rng.next(), n, v, 2.0);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 1);
    if (ep % 2) rng.shuffle(std::span<int>(order));
    AllocationState s = reset(inst, order);
    for (int t = 0; t < n; ++t) {
      const int a = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(v)));
      const int task = s.current_task();
      EXPECT_EQ(task, order[static_cast<std::size_t>(t)]);
      const AllocationState prev = s;
      s = step(s, a);
      for (int k = 1; k <= v; ++k) {
        const auto& l = s.per_vehicle[static_cast<std::size_t>(k - 1)];
        ASSERT_EQ(l.size(), static_cast<std::size_t>(t + 1));
        if (k == a) {
          EXPECT_EQ(l.back(), task);
        } else {
          const auto& before = prev.per_vehicle[static_cast<std::size_t>(k - 1)];
          EXPECT_EQ(l.back(), before.empty() ? kDepotSentinel : before.back());
        }
      }
    }
    EXPECT_TRUE(s.terminal());
    const Allocation alloc = finalize(s);
    std::vector<int> all;
    for (const auto& sub : alloc.subsets) all.insert(all.end(), sub.begin(), sub.end());
    std::sort(all.begin(), all.end());
    std::vector<int> expect(static_cast<std::size_t>(n));
    std::iota(expect.begin(), expect.end(), 1);
    EXPECT_EQ(all, expect);
  }
}

TEST(AllocEnv, AllToVehicleOne) {
  const Instance inst = sized(7, 3);
  const Allocation a = allocation_from_actions(inst, std::vector<int>(7, 1));
  EXPECT_EQ(a.subsets[0], std::vector<int>({1, 2, 3, 4, 5, 6, 7}));
  EXPECT_TRUE(a.subsets[1].empty());
  EXPECT_TRUE(a.subsets[2].empty());
}

TEST(AllocEnv, RoundRobinSplitsEvenly) {
  const Instance inst = sized(80, 4);
  std::vector<int> actions;
  for (int t = 0; t < 80; ++t) actions.push_back(1 + t % 4);
  const Allocation a = allocation_from_actions(inst, actions);
  for (const auto& sub : a.subsets) EXPECT_EQ(sub.size(), 20u);
}

TEST(Reward, SumsPerVehicleCounts) {
  Allocation a;
  a.subsets = {{1, 2}, {3}, {}};
  const RewardRecord empty = reward(a, {Route{1, {}}, Route{2, {}}, Route{3, {}}});
  EXPECT_EQ(empty.total, 0);
  const RewardRecord r = reward(a, {Route{1, {2, 1}}, Route{2, {3}}, Route{3, {}}});
  EXPECT_EQ(r.per_vehicle_executed, std::vector<int>({2, 1, 0}));
  EXPECT_EQ(r.total, 3);
}

TEST(Reward, SixtyThreeFromFourVehicles) {
  Allocation a;
  std::vector<Route> routes;
  const int counts[] = {16, 16, 16, 15};
  int next = 1;
  for (int k = 0; k < 4; ++k) {
    a.subsets.emplace_back();
    Route r{k + 1, {}};
    for (int i = 0; i < counts[k]; ++i) {
      a.subsets.back().push_back(next);
      r.visits.push_back(next++);
    }
    routes.push_back(r);
  }
  EXPECT_EQ(reward(a, routes).total, 63);
}

TEST(Reward, RouteOutsideSubsetIsContractError) {
  Allocation a;
  a.subsets = {{1}, {2}};
  EXPECT_THROW(reward(a, {Route{1, {2}}, Route{2, {}}}), ContractError);
  EXPECT_THROW(reward(a, {Route{1, {1}}}), ContractError);
}
