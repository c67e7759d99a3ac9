#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "uavsched/alloc_env.hpp"
#include "uavsched/autodiff.hpp"
#include "uavsched/instance.hpp"
#include "uavsched/route_policy.hpp"
#include "uavsched/upper_policy.hpp"

namespace uavsched {

struct TrainConfig {
  // scenario
  int tasks = 20;
  int vehicles = 2;
  double budget = 2.0;
  // schedule: E, E_p, E_t, E_c
  int epochs = 20;
  int pretrain_epochs = 5;
  int intensive_epochs = 8;
  int continuous_epochs = 4;
  // ablation switches
  bool pretrain = true;
  bool intensive = true;  // off: lower trained every epoch from the start
  bool alternate = true;  // off: lower frozen from epoch E_t on
  // data and optimization
  std::size_t instances_per_epoch = 10000;
  std::size_t batch_size = 256;
  double lr = 1e-4;
  double upper_lr_decay = 0.995;
  double upper_grad_clip = 3.0;
  double lower_lr_decay = 1.0;
  double lower_grad_clip = 1.0;
  double alpha = 0.05;
  std::size_t eval_size = 1000;
  std::uint64_t seed = 1;
  bool shuffle_tasks = false;  // random task presentation order per episode
  // architecture (both layers)
  std::size_t d_h = 128;
  std::size_t heads = 8;
  std::size_t layers = 3;
  std::size_t ff_hidden = 512;
  std::size_t decoder_ff = 512;

  void validate() const;  // throws ArgumentError
  UpperHyper upper_hyper() const;
  LowerHyper lower_hyper() const;

  // `key = value` settings, names equal to the fields above.
  void set(const std::string& key, const std::string& value);  // ArgumentError
  std::vector<std::pair<std::string, std::string>> settings() const;
};

/// Adaptive-moment optimizer (beta1 0.9, beta2 0.999, eps 1e-8) with
/// moments keyed by parameter name.
class Adam {
 public:
  explicit Adam(double lr) : lr_(lr) {}
  void step(ParamStore& params, const Grad& grad);
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  long steps() const { return t_; }

 private:
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  std::unordered_map<std::string, std::pair<Tensor, Tensor>> moments_;
};

// Scales grad to at most max_norm; returns the norm before clipping.
double clip_grad_norm(Grad& grad, double max_norm);

struct TTestResult {
  double mean_diff = 0.0;  // mean(candidate - baseline)
  double t = 0.0;
  double p_value = 1.0;
  bool significant = false;
};

// Paired one-sided test of "candidate cost < baseline cost".
// ArgumentError if fewer than two pairs or sizes differ.
TTestResult paired_ttest_less(std::span<const double> candidate,
                              std::span<const double> baseline, double alpha);

// Greedy allocations, batched.
std::vector<Allocation> greedy_allocations(UpperModel& upper, std::span<const Instance> instances,
                                           std::size_t chunk = 512);
// Executed-task counts for each allocation using greedy lower decoding.
std::vector<int> executed_counts(LowerModel& lower, std::span<const Instance> instances,
                                 const std::vector<Allocation>& allocations);
// Per-instance cost (negative executed count) of greedy upper + greedy lower.
std::vector<double> upper_costs(UpperModel& upper, LowerModel& lower,
                                std::span<const Instance> instances);
// Per-problem cost of greedy lower decoding.
std::vector<double> lower_costs(LowerModel& lower, std::span<const RouteProblem> problems);

// Uniform synthetic subsets: sizes in [ceil(n/V)-5, ceil(n/V)+5] (at
// least 1), coordinates uniform on the unit square.
std::vector<RouteProblem> pretrain_problems(std::size_t count, int tasks, int vehicles,
                                            double budget, Rng& rng);

// Greedy upper allocation of every instance, flattened to per-vehicle
// routing problems and shuffled.
std::vector<RouteProblem> gen_lower_data(UpperModel& upper, std::span<const Instance> instances,
                                         Rng& rng);

std::vector<Instance> random_instances(std::size_t count, int tasks, int vehicles, double budget,
                                       Rng& rng);

struct OptimState {
  Adam adam;
  double decay;
  double clip;
  std::size_t batch_size;
};

struct EpochStats {
  int epoch = 0;
  std::string layer;
  double mean_cost = 0.0;
  double grad_norm = 0.0;  // mean pre-clip norm over batches
  double lr = 0.0;
  bool baseline_replaced = false;
};

// REINFORCE over `data` in batches: sampled rollouts against greedy
// baseline rollouts. The lr decay is applied after the epoch.
EpochStats reinforce_upper_epoch(UpperModel& model, UpperModel& baseline, LowerModel& lower,
                                 std::span<const Instance> data, OptimState& opt, Rng& rng,
                                 bool shuffle_tasks = false);
EpochStats reinforce_lower_epoch(LowerModel& model, LowerModel& baseline,
                                 std::span<const RouteProblem> data, OptimState& opt, Rng& rng);

// Scalar REINFORCE loss mean(adv * log_prob_sum) with advantages held constant.
Var reinforce_loss(Var log_prob_sum, const std::vector<double>& advantage);

struct BaselineDecision {
  TTestResult test;
  double baseline_cost = 0.0;   // mean eval cost before the decision
  double candidate_cost = 0.0;  // mean eval cost of the trained model
  bool replaced = false;
};

BaselineDecision baseline_update(UpperModel& model, UpperModel& baseline, LowerModel& lower,
                                 std::span<const Instance> eval_set, double alpha);
BaselineDecision baseline_update(LowerModel& model, LowerModel& baseline,
                                 std::span<const RouteProblem> eval_set, double alpha);

/// One scheduled lower-layer training event; epoch 0 marks pre-training.
struct ScheduleEvent {
  int epoch = 0;
  std::string layer;  // "lower-pretrain", "upper", "lower"
  friend bool operator==(const ScheduleEvent&, const ScheduleEvent&) = default;
};

// Training events of the interactive schedule in execution order.
std::vector<ScheduleEvent> its_schedule(const TrainConfig& config);

struct TrainOutcome {
  UpperModel upper;
  LowerModel lower;
  std::vector<ScheduleEvent> events;
  std::vector<EpochStats> stats;
  // Greedy eval-set costs: (epoch, layer, cost). Epoch 0 is after pre-training.
  std::vector<std::tuple<int, std::string, double>> eval_costs;
  std::vector<std::tuple<int, std::string, BaselineDecision>> baseline_log;
};

using ProgressFn = std::function<void(const std::string&)>;

// Runs the full schedule. With a non-empty run_dir writes config.txt,
// train.csv, eval.csv, baseline.csv and epoch_k.ckpt files there.
TrainOutcome its_train(const TrainConfig& config, const std::filesystem::path& run_dir = {},
                       const ProgressFn& progress = {});

Checkpoint make_checkpoint(const UpperModel& upper, const LowerModel& lower);

}  // namespace uavsched
