#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uavsched/decoding.hpp"
#include "uavsched/instance.hpp"
#include "uavsched/route_policy.hpp"
#include "uavsched/trainer.hpp"
#include "uavsched/upper_policy.hpp"

namespace uavsched {

// Line-oriented `key = value` text; '#' starts a comment. ArgumentError
// on a line without '='.
std::vector<std::pair<std::string, std::string>> parse_config(std::string_view text);
TrainConfig load_train_config(const std::filesystem::path& path);

inline const std::vector<std::string>& known_methods() {
  static const std::vector<std::string> m{"dl-drl", "kmeans-vnd", "kmeans-am", "kmeans-greedy",
                                          "random-greedy"};
  return m;
}

// Methods that need a checkpoint.
bool is_learned(const std::string& method);

struct RunConfig {
  int tasks = 20;
  int vehicles = 2;
  double budget = 2.0;
  std::vector<std::string> methods{"dl-drl", "kmeans-vnd", "kmeans-am", "random-greedy"};
  std::size_t test_size = 500;
  std::uint64_t test_seed = 12345;
  std::string mode = "greedy";
  std::string out = "eval_out";
  std::string checkpoint;
  int jobs = 1;

  void set(const std::string& key, const std::string& value);  // ArgumentError
  void validate() const;
  std::string scenario_label() const;  // e.g. "U2-20"
};

RunConfig load_run_config(const std::filesystem::path& path);

/// Trained models of both layers.
struct Models {
  UpperModel upper;
  LowerModel lower;
};

Models load_models(const std::filesystem::path& checkpoint);

// Solves one instance. Learned methods need `models`; the seed drives
// K-means initialization, random allocation and sampling.
Solution solve_instance(const std::string& method, const Instance& instance, Models* models,
                        const DecodeMode& mode, std::uint64_t seed);

// Greedy or best-of-K sampled allocations, each routed greedily by the
// lower model.
Solution dl_drl(const Instance& instance, Models& models, const DecodeMode& mode);

struct ResultRow {
  std::string method;
  double obj = 0.0;    // mean executed tasks
  double gap = 0.0;    // percent below the best row
  double time_s = 0.0;  // mean wall-clock per instance
};

struct ResultTable {
  std::string scenario;
  std::size_t test_size = 0;
  std::string mode;
  std::vector<ResultRow> rows;

  void compute_gaps();
  // Six-decimal CSV. Timing varies between runs, so it is opt-in.
  std::string to_csv(bool with_time) const;
  std::string to_text() const;
};

std::vector<Instance> test_instances(const RunConfig& config);

// ContractError if any solution fails validation.
ResultTable evaluate(const RunConfig& config, std::span<const Instance> instances,
                     Models* models);

// SVG drawing: depot square, one polyline per route (depot to depot),
// served tasks filled, unserved tasks hollow.
std::string render_svg(const Instance& instance, const Solution& solution);

struct AblationVariant {
  std::string name;  // "ITS", "ITS/pre-training", ...
  std::string dir;
  bool pretrain;
  bool intensive;
};

const std::vector<AblationVariant>& ablation_variants();

// Trains each variant under out/<dir>/ and writes out/curves.csv
// (variant,epoch,layer,eval_cost) and out/train_curves.csv
// (variant,epoch,layer,mean_cost).
void run_ablation(const TrainConfig& base, const std::filesystem::path& out,
                  const ProgressFn& progress = {});

}  // namespace uavsched
