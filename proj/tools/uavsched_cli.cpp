// Command-line front end: instance generation, training, evaluation,
// single-instance solving, MILP export, plotting and ablation runs.
//
// Exit codes: 0 success, 1 usage error, 2 infeasible or invalid data.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "uavsched/error.hpp"
#include "uavsched/harness.hpp"
#include "uavsched/instance.hpp"
#include "uavsched/io.hpp"
#include "uavsched/milp.hpp"
#include "uavsched/trainer.hpp"

namespace fs = std::filesystem;
using namespace uavsched;

namespace {

struct Scenario {
  std::optional<std::uint64_t> seed;
  std::optional<int> tasks;
  std::optional<int> vehicles;
  std::optional<double> budget;
};

void add_scenario(CLI::App* cmd, Scenario& s) {
  cmd->add_option("--seed", s.seed, "random seed");
  cmd->add_option("--tasks", s.tasks, "number of tasks (N-1)")->check(CLI::PositiveNumber);
  cmd->add_option("--vehicles", s.vehicles, "number of vehicles")->check(CLI::PositiveNumber);
  cmd->add_option("--budget", s.budget, "flight budget D")->check(CLI::PositiveNumber);
}

void progress(const std::string& msg) { std::cerr << msg << std::endl; }

int data_error(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-layer task allocation and routing for distance-budgeted vehicles"};
  app.require_subcommand(1);

  Scenario sc;
  std::string config, out, checkpoint, mode = "greedy", method = "dl-drl", instance_path, solution_path;
  int count = 1, jobs = 0;
  std::optional<std::size_t> test_size;

  auto* gen = app.add_subcommand("gen", "write random instance files");
  add_scenario(gen, sc);
  gen->add_option("--count", count, "number of instances")->check(CLI::PositiveNumber);
  gen->add_option("--out", out, "output directory")->required();

  auto* train = app.add_subcommand("train", "run the interactive training schedule");
  add_scenario(train, sc);
  train->add_option("--config", config, "training config (key = value)");
  train->add_option("--out", out, "run directory")->required();

  auto* eval = app.add_subcommand("eval", "compare methods on a seeded test set");
  add_scenario(eval, sc);
  eval->add_option("--config", config, "evaluation config (key = value)");
  eval->add_option("--checkpoint", checkpoint, "trained model checkpoint");
  eval->add_option("--mode", mode, "greedy | sample:K");
  eval->add_option("--out", out, "output directory");
  eval->add_option("--jobs", jobs, "parallel workers")->check(CLI::PositiveNumber);
  eval->add_option("--test-size", test_size, "number of test instances");

  auto* solve = app.add_subcommand("solve", "solve one instance file");
  solve->add_option("instance", instance_path, "instance file")->required();
  solve->add_option("--method", method, "dl-drl | kmeans-vnd | kmeans-am | kmeans-greedy | random-greedy");
  solve->add_option("--checkpoint", checkpoint, "trained model checkpoint");
  solve->add_option("--mode", mode, "greedy | sample:K");
  solve->add_option("--seed", sc.seed, "random seed");
  solve->add_option("--out", out, "solution file")->required();

  auto* lp = app.add_subcommand("export-lp", "write the MILP model in LP format");
  lp->add_option("instance", instance_path, "instance file (omit to generate one)");
  add_scenario(lp, sc);
  lp->add_option("--out", out, "LP file")->required();

  auto* plot = app.add_subcommand("plot", "render a solution as SVG");
  plot->add_option("instance", instance_path, "instance file")->required();
  plot->add_option("solution", solution_path, "solution file")->required();
  plot->add_option("--out", out, "SVG file")->required();

  auto* ablate = app.add_subcommand("ablate", "train the ITS ablation variants");
  add_scenario(ablate, sc);
  ablate->add_option("--config", config, "training config (key = value)");
  ablate->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      const std::uint64_t seed = sc.seed.value_or(1);
      Rng rng(seed);
      fs::create_directories(out);
      for (int i = 0; i < count; ++i) {
        const std::uint64_t s = rng.next();
        const Instance inst = generate_instance(s, sc.tasks.value_or(20), sc.vehicles.value_or(2),
                                                sc.budget.value_or(2.0));
        char name[64];
        std::snprintf(name, sizeof name, "instance_%04d.txt", i);
        write_file(fs::path(out) / name, format_instance(inst, s));
      }
      return 0;
    }

    if (train->parsed() || ablate->parsed()) {
      TrainConfig c = config.empty() ? TrainConfig{} : load_train_config(config);
      if (sc.seed) c.seed = *sc.seed;
      if (sc.tasks) c.tasks = *sc.tasks;
      if (sc.vehicles) c.vehicles = *sc.vehicles;
      if (sc.budget) c.budget = *sc.budget;
      c.validate();
      if (train->parsed()) {
        its_train(c, out, progress);
      } else {
        run_ablation(c, out, progress);
      }
      return 0;
    }

    if (eval->parsed()) {
      RunConfig c = config.empty() ? RunConfig{} : load_run_config(config);
      if (sc.seed) c.test_seed = *sc.seed;
      if (sc.tasks) c.tasks = *sc.tasks;
      if (sc.vehicles) c.vehicles = *sc.vehicles;
      if (sc.budget) c.budget = *sc.budget;
      if (test_size) c.test_size = *test_size;
      if (eval->count("--mode")) c.mode = mode;
      if (!checkpoint.empty()) c.checkpoint = checkpoint;
      if (!out.empty()) c.out = out;
      if (jobs > 0) c.jobs = jobs;
      c.validate();
      std::optional<Models> models;
      bool learned = false;
      for (const auto& m : c.methods) learned = learned || is_learned(m);
      if (learned) {
        if (c.checkpoint.empty()) throw ArgumentError("learned methods need --checkpoint");
        models = load_models(c.checkpoint);
      }
      const auto instances = test_instances(c);
      const ResultTable table = evaluate(c, instances, models ? &*models : nullptr);
      write_file(fs::path(c.out) / "results.csv", table.to_csv(false));
      write_file(fs::path(c.out) / "timing.csv", table.to_csv(true));
      std::cout << table.to_text();
      return 0;
    }

    if (solve->parsed()) {
      const Instance inst = load_instance(instance_path);
      std::optional<Models> models;
      if (is_learned(method)) {
        if (checkpoint.empty()) throw ArgumentError("method '" + method + "' needs --checkpoint");
        models = load_models(checkpoint);
      }
      const std::uint64_t seed = sc.seed.value_or(1);
      const Solution sol = solve_instance(method, inst, models ? &*models : nullptr,
                                          DecodeMode::parse(mode, seed), seed);
      const auto report = validate_solution(sol, inst);
      write_file(out, format_solution(sol));
      if (!report.feasible) {
        return data_error("solution violates constraint " + report.violations.front().constraint +
                          ": " + report.violations.front().detail);
      }
      std::cout << "objective " << objective(sol) << "\n";
      return 0;
    }

    if (lp->parsed()) {
      const Instance inst = instance_path.empty()
                                ? generate_instance(sc.seed.value_or(1), sc.tasks.value_or(5),
                                                    sc.vehicles.value_or(2), sc.budget.value_or(2.0))
                                : load_instance(instance_path);
      const MilpModel model = build_milp(inst);
      write_file(out, export_lp(model));
      const MilpCounts counts = milp_counts(inst.n_tasks(), static_cast<std::size_t>(inst.n_vehicles));
      std::cout << "variables " << model.variables().size() << " (expected " << counts.variables()
                << "), constraints " << model.constraints().size() << " (expected "
                << counts.constraints() << ")\n";
      return 0;
    }

    if (plot->parsed()) {
      const Instance inst = load_instance(instance_path);
      const Solution sol = load_solution(solution_path);
      const auto report = validate_solution(sol, inst);
      if (!report.feasible) {
        return data_error("solution violates constraint " + report.violations.front().constraint);
      }
      write_file(out, render_svg(inst, sol));
      return 0;
    }
  } catch (const ArgumentError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    return data_error(e.what());
  }
  return 1;
}
