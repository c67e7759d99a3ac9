#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "uavsched/alloc_env.hpp"
#include "uavsched/autodiff.hpp"
#include "uavsched/decoding.hpp"
#include "uavsched/encoder.hpp"
#include "uavsched/instance.hpp"
#include "uavsched/params.hpp"

namespace uavsched {

/// Single-vehicle routing problem: visit as many tasks as possible on a
/// closed depot tour of length at most `budget`.
struct RouteProblem {
  Point depot;
  std::vector<Point> tasks;
  double budget = 1.0;
};

// Tasks of `subset` (instance task indices) in the given order.
RouteProblem route_problem(const Instance& instance, const std::vector<int>& subset);

// Length of the tour through 1-based task positions; IndexError on a bad position.
double tour_length(const RouteProblem& problem, std::span<const int> visits);

struct LowerHyper {
  std::size_t d_h = 128;
  std::size_t heads = 8;
  std::size_t layers = 3;
  std::size_t ff_hidden = 512;
  double tanh_clip = 10.0;

  EncoderHyper encoder() const { return {d_h, heads, layers, ff_hidden, true}; }
  void validate() const;
};

/// Attention route planner. The decoder context concatenates the graph
/// mean embedding, the current node embedding and the remaining budget
/// projected to d_h; a single-head pointer over the segment's nodes gives
/// clipped logits, with infeasible and visited nodes masked out.
/// Parameters are named "lower/...".
struct LowerModel {
  LowerHyper hyper;
  ParamStore params;

  LowerModel() = default;
  LowerModel(const LowerHyper& hyper, std::uint64_t seed);
};

void save_model(Checkpoint& ckpt, const LowerModel& model);
LowerModel load_lower(const Checkpoint& ckpt);

struct RouteRollouts {
  std::vector<std::vector<int>> visits;  // 1-based task positions
  std::vector<double> lengths;
  std::vector<std::vector<double>> step_log_probs;
  Var log_prob_sum;  // rollouts x 1
};

struct RouteRolloutOptions {
  DecodeKind kind = DecodeKind::Greedy;
  Rng* rng = nullptr;
  // Replay: per rollout the chosen columns per step, 0 = depot, ending
  // with the terminating 0.
  const std::vector<std::vector<int>>* forced = nullptr;
  // Rollout r decodes problem problem_of[r]; default one per problem.
  const std::vector<int>* problem_of = nullptr;
};

RouteRollouts rollout_routes(Tape& tape, LowerModel& model, std::span<const RouteProblem> problems,
                             bool training, const RouteRolloutOptions& options);

struct PlannedRoute {
  std::vector<int> visits;  // 1-based task positions
  int count = 0;
  double length = 0.0;
  std::vector<double> step_log_probs;
};

// Greedy: one rollout. sample(k, seed): k rollouts, best count kept
// (shorter length, then earlier rollout, on ties).
PlannedRoute plan_route(LowerModel& model, const RouteProblem& problem, const DecodeMode& mode);

// Inference over many problems, batched internally.
std::vector<PlannedRoute> plan_routes(LowerModel& model, std::span<const RouteProblem> problems,
                                      const DecodeMode& mode, std::size_t chunk = 1024);

// Routes (instance task indices) for every subset of an allocation.
std::vector<Route> plan_allocation(LowerModel& model, const Instance& instance,
                                   const Allocation& allocation, const DecodeMode& mode);

inline constexpr std::size_t kBruteForceLimit = 9;

// Exhaustive optimum for at most kBruteForceLimit tasks (ArgumentError
// beyond). Ties: shorter length, then lexicographically smaller visits.
PlannedRoute brute_force_route(const RouteProblem& problem);

// Cheapest insertion while the budget allows.
PlannedRoute greedy_insert_route(const RouteProblem& problem);

}  // namespace uavsched
