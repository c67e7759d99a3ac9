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

struct UpperHyper {
  std::size_t d_h = 128;
  std::size_t heads = 8;
  std::size_t layers = 3;
  std::size_t ff_hidden = 512;
  std::size_t decoder_ff = 512;

  std::size_t head_dim() const { return d_h / heads; }
  EncoderHyper encoder() const { return {d_h, heads, layers, ff_hidden, false}; }
  void validate() const;
};

/// Allocation policy: attention encoder over depot + tasks, then per step
/// a max-pooled context per vehicle, concatenated and projected to a
/// task-subset embedding, joined with the current task embedding and
/// mapped to one logit per vehicle. Parameters are named "upper/...".
struct UpperModel {
  UpperHyper hyper;
  int n_vehicles = 0;
  ParamStore params;

  UpperModel() = default;
  UpperModel(const UpperHyper& hyper, int n_vehicles, std::uint64_t seed);
};

void save_model(Checkpoint& ckpt, const UpperModel& model);
UpperModel load_upper(const Checkpoint& ckpt);  // FormatError if absent

// Node embeddings for a batch of instances with equal task and vehicle
// counts; instance b occupies rows [b*N, (b+1)*N), depot first.
Var upper_encode(Tape& tape, UpperModel& model, std::span<const Instance> batch, bool training);

// Inference embeddings (N x d_h) of one instance.
Tensor upper_embeddings(UpperModel& model, const Instance& instance);

// Logits (rows x V). contexts[r][k] lists embedding rows for vehicle k+1
// of rollout r (never empty); current[r] is the row of the task being
// allocated.
Var upper_logits(Tape& tape, UpperModel& model, Var embeddings,
                 const std::vector<std::vector<std::vector<int>>>& contexts,
                 const std::vector<int>& current);

// One decoder step on precomputed embeddings (N x d_h). contexts[k] holds
// node indices of vehicle k+1's allocated tasks, or kDepotSentinel alone.
// Throws ContractError on an empty context.
std::vector<double> decode_step(UpperModel& model, const Tensor& embeddings,
                                const std::vector<std::vector<int>>& contexts, int current);

/// Result of a batch of allocation episodes.
struct UpperRollout {
  std::vector<Allocation> allocations;
  std::vector<std::vector<int>> actions;           // 1-based vehicles per step
  std::vector<std::vector<double>> step_log_probs;
  Var log_prob_sum;                                 // rows x 1, on the tape
};

struct UpperRolloutOptions {
  DecodeKind kind = DecodeKind::Greedy;
  Rng* rng = nullptr;                                 // required for sampling
  const std::vector<std::vector<int>>* forced = nullptr;  // actions to replay
  const std::vector<std::vector<int>>* orders = nullptr;  // task presentation orders
};

// Encodes `batch` and runs one episode per instance.
UpperRollout rollout_allocations(Tape& tape, UpperModel& model, std::span<const Instance> batch,
                                 bool training, const UpperRolloutOptions& options);

// Runs episodes over already-encoded instances: rollout r uses rows
// starting at base_rows[r].
UpperRollout decode_allocations(Tape& tape, UpperModel& model, Var embeddings,
                                const std::vector<int>& base_rows, int n_tasks,
                                const UpperRolloutOptions& options);

struct AllocationResult {
  Allocation allocation;
  std::vector<double> step_log_probs;
};

// Greedy gives one result; sample(k, seed) gives k independent rollouts.
std::vector<AllocationResult> allocate(UpperModel& model, const Instance& instance,
                                       const DecodeMode& mode);

}  // namespace uavsched
