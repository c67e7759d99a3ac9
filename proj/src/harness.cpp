#include "uavsched/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <sstream>
#include <thread>

#include "uavsched/baselines.hpp"
#include "uavsched/error.hpp"
#include "uavsched/io.hpp"

namespace uavsched {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fixed6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_config(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ArgumentError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ArgumentError("config line " + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  TrainConfig c;
  for (const auto& [k, v] : parse_config(read_file(path))) c.set(k, v);
  return c;
}

bool is_learned(const std::string& method) { return method == "dl-drl" || method == "kmeans-am"; }

void RunConfig::set(const std::string& key, const std::string& value) {
  try {
    if (key == "tasks") tasks = std::stoi(value);
    else if (key == "vehicles") vehicles = std::stoi(value);
    else if (key == "budget") budget = std::stod(value);
    else if (key == "test_size") test_size = static_cast<std::size_t>(std::stoull(value));
    else if (key == "test_seed") test_seed = std::stoull(value);
    else if (key == "mode") mode = value;
    else if (key == "out") out = value;
    else if (key == "checkpoint") checkpoint = value;
    else if (key == "jobs") jobs = std::stoi(value);
    else if (key == "methods") {
      methods.clear();
      std::stringstream ss(value);
      std::string m;
      while (std::getline(ss, m, ',')) {
        if (!trim(m).empty()) methods.push_back(trim(m));
      }
    } else {
      throw ArgumentError("config: unknown evaluation key '" + key + "'");
    }
  } catch (const std::invalid_argument&) {
    throw ArgumentError("config: bad value '" + value + "' for " + key);
  } catch (const std::out_of_range&) {
    throw ArgumentError("config: value out of range for " + key);
  }
}

void RunConfig::validate() const {
  if (methods.empty()) throw ArgumentError("no methods selected");
  for (const auto& m : methods) {
    if (std::find(known_methods().begin(), known_methods().end(), m) == known_methods().end()) {
      throw ArgumentError("unknown method '" + m + "'");
    }
  }
  if (tasks < 1 || vehicles < 1 || !(budget > 0.0)) throw ArgumentError("scenario sizes must be positive");
  if (test_size < 1) throw ArgumentError("test_size must be positive");
  if (jobs < 1) throw ArgumentError("jobs must be >= 1");
  DecodeMode::parse(mode);
}

std::string RunConfig::scenario_label() const {
  return "U" + std::to_string(vehicles) + "-" + std::to_string(tasks);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig c;
  for (const auto& [k, v] : parse_config(read_file(path))) c.set(k, v);
  return c;
}

Models load_models(const std::filesystem::path& checkpoint) {
  const Checkpoint ckpt = read_checkpoint(checkpoint);
  return {load_upper(ckpt), load_lower(ckpt)};
}

Solution dl_drl(const Instance& instance, Models& models, const DecodeMode& mode) {
  if (instance.n_vehicles != models.upper.n_vehicles) {
    throw ArgumentError("checkpoint was trained for " + std::to_string(models.upper.n_vehicles) +
                        " vehicles, instance has " + std::to_string(instance.n_vehicles));
  }
  const auto results = allocate(models.upper, instance, mode);
  std::vector<RouteProblem> problems;
  for (const auto& r : results) {
    for (const auto& subset : r.allocation.subsets) problems.push_back(route_problem(instance, subset));
  }
  const auto planned = plan_routes(models.lower, problems, DecodeMode::greedy());
  const std::size_t v = static_cast<std::size_t>(instance.n_vehicles);
  std::size_t best = 0;
  int best_count = -1;
  for (std::size_t s = 0; s < results.size(); ++s) {
    int count = 0;
    for (std::size_t k = 0; k < v; ++k) count += planned[s * v + k].count;
    if (count > best_count) {
      best_count = count;
      best = s;
    }
  }
  Solution sol;
  const auto& subsets = results[best].allocation.subsets;
  for (std::size_t k = 0; k < v; ++k) {
    Route r;
    r.vehicle_id = static_cast<int>(k + 1);
    for (int pos : planned[best * v + k].visits) {
      r.visits.push_back(subsets[k][static_cast<std::size_t>(pos - 1)]);
    }
    sol.routes.push_back(std::move(r));
  }
  return sol;
}

Solution solve_instance(const std::string& method, const Instance& instance, Models* models,
                        const DecodeMode& mode, std::uint64_t seed) {
  if (is_learned(method) && models == nullptr) {
    throw ArgumentError("method '" + method + "' needs a checkpoint");
  }
  if (method == "dl-drl") return dl_drl(instance, *models, mode);
  if (method == "kmeans-am") return kmeans_am(instance, models->lower, mode, seed);
  if (method == "kmeans-vnd") return kmeans_vnd(instance, seed);
  if (method == "kmeans-greedy") return kmeans_greedy(instance, seed);
  if (method == "random-greedy") return random_greedy(instance, seed);
  throw ArgumentError("unknown method '" + method + "'");
}

void ResultTable::compute_gaps() {
  double best = 0.0;
  for (const auto& r : rows) best = std::max(best, r.obj);
  for (auto& r : rows) r.gap = best > 0.0 ? gap(r.obj, best) : 0.0;
}

std::string ResultTable::to_csv(bool with_time) const {
  std::string out = "scenario,test_size,mode,method,obj,gap";
  out += with_time ? ",time_s\n" : "\n";
  for (const auto& r : rows) {
    out += scenario + "," + std::to_string(test_size) + "," + mode + "," + r.method + "," +
           fixed6(r.obj) + "," + fixed6(r.gap);
    out += with_time ? "," + fixed6(r.time_s) + "\n" : "\n";
  }
  return out;
}

std::string ResultTable::to_text() const {
  std::string out = scenario + ", " + std::to_string(test_size) + " test instances, mode " + mode + "\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-16s %10s %9s %11s\n", "method", "Obj.", "Gap(%)", "Time(s)");
  out += buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-16s %10.2f %9.2f %11.4f\n", r.method.c_str(), r.obj, r.gap, r.time_s);
    out += buf;
  }
  return out;
}

std::vector<Instance> test_instances(const RunConfig& c) {
  Rng rng(c.test_seed);
  return random_instances(c.test_size, c.tasks, c.vehicles, c.budget, rng);
}

ResultTable evaluate(const RunConfig& c, std::span<const Instance> instances, Models* models) {
  c.validate();
  const DecodeMode mode = DecodeMode::parse(c.mode, c.test_seed);
  ResultTable table;
  table.scenario = c.scenario_label();
  table.test_size = instances.size();
  table.mode = mode.to_string();
  for (const auto& method : c.methods) {
    if (is_learned(method) && models == nullptr) {
      throw ArgumentError("method '" + method + "' needs a checkpoint");
    }
  }
  using Clock = std::chrono::steady_clock;
  for (const auto& method : c.methods) {
    std::vector<int> objective_of(instances.size());
    std::vector<double> seconds(instances.size());
    std::vector<std::string> errors(instances.size());
    auto work = [&](std::size_t i) {
      try {
        // Per-instance seed so results do not depend on the job split.
        DecodeMode m = mode;
        m.seed = c.test_seed + 7919 * (i + 1);
        const auto t0 = Clock::now();
        const Solution sol = solve_instance(method, instances[i], models, m, m.seed);
        seconds[i] = std::chrono::duration<double>(Clock::now() - t0).count();
        const auto report = validate_solution(sol, instances[i]);
        if (!report.feasible) {
          errors[i] = "infeasible solution from " + method + " on instance " + std::to_string(i) +
                      ": " + report.violations.front().detail;
        }
        objective_of[i] = objective(sol);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    };
    const std::size_t jobs = std::min<std::size_t>(static_cast<std::size_t>(c.jobs), instances.size());
    if (jobs <= 1) {
      for (std::size_t i = 0; i < instances.size(); ++i) work(i);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t j = 0; j < jobs; ++j) {
        pool.emplace_back([&, j] {
          for (std::size_t i = j; i < instances.size(); i += jobs) work(i);
        });
      }
      for (auto& t : pool) t.join();
    }
    for (const auto& e : errors) {
      if (!e.empty()) throw ContractError(e);
    }
    ResultRow row;
    row.method = method;
    double obj = 0.0, secs = 0.0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      obj += objective_of[i];
      secs += seconds[i];
    }
    row.obj = obj / static_cast<double>(instances.size());
    row.time_s = secs / static_cast<double>(instances.size());
    table.rows.push_back(row);
  }
  table.compute_gaps();
  return table;
}

std::string render_svg(const Instance& instance, const Solution& solution) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f"};
  const double size = 500.0, margin = 20.0;
  auto sx = [&](double x) { return margin + x * size; };
  auto sy = [&](double y) { return margin + (1.0 - y) * size; };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  std::vector<char> served(instance.n_tasks() + 1, 0);
  for (const auto& r : solution.routes) {
    for (int v : r.visits) {
      if (v >= 1 && static_cast<std::size_t>(v) <= instance.n_tasks()) served[static_cast<std::size_t>(v)] = 1;
    }
  }
  const double full = size + 2 * margin;
  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(full) + "\" height=\"" + num(full) +
         "\" viewBox=\"0 0 " + num(full) + " " + num(full) + "\">\n";
  svg += "  <rect x=\"0\" y=\"0\" width=\"" + num(full) + "\" height=\"" + num(full) + "\" fill=\"white\"/>\n";
  for (std::size_t k = 0; k < solution.routes.size(); ++k) {
    std::string pts = num(sx(instance.depot.x)) + "," + num(sy(instance.depot.y));
    for (int v : solution.routes[k].visits) {
      const Point p = instance.node(v);
      pts += " " + num(sx(p.x)) + "," + num(sy(p.y));
    }
    pts += " " + num(sx(instance.depot.x)) + "," + num(sy(instance.depot.y));
    svg += "  <polyline class=\"route\" data-vehicle=\"" + std::to_string(solution.routes[k].vehicle_id) +
           "\" fill=\"none\" stroke=\"" + colors[k % 10] + "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
  }
  for (std::size_t t = 1; t <= instance.n_tasks(); ++t) {
    const Point p = instance.tasks[t - 1];
    svg += "  <circle class=\"" + std::string(served[t] ? "served" : "unserved") + "\" cx=\"" +
           num(sx(p.x)) + "\" cy=\"" + num(sy(p.y)) + "\" r=\"4\" stroke=\"black\" fill=\"" +
           (served[t] ? "black" : "none") + "\"/>\n";
  }
  svg += "  <rect class=\"depot\" x=\"" + num(sx(instance.depot.x) - 6) + "\" y=\"" +
         num(sy(instance.depot.y) - 6) + "\" width=\"12\" height=\"12\" fill=\"gold\" stroke=\"black\"/>\n";
  svg += "</svg>\n";
  return svg;
}

const std::vector<AblationVariant>& ablation_variants() {
  static const std::vector<AblationVariant> v{
      {"ITS", "its", true, true},
      {"ITS/pre-training", "its_no_pretrain", false, true},
      {"ITS/intensive", "its_no_intensive", true, false},
      {"ITS/pre-training&intensive", "its_no_pretrain_no_intensive", false, false},
  };
  return v;
}

void run_ablation(const TrainConfig& base, const std::filesystem::path& out,
                  const ProgressFn& progress) {
  std::string curves = "variant,epoch,layer,eval_cost\n";
  std::string train = "variant,epoch,layer,mean_cost\n";
  for (const auto& variant : ablation_variants()) {
    TrainConfig c = base;
    c.pretrain = variant.pretrain;
    c.intensive = variant.intensive;
    if (progress) progress("ablation variant " + variant.name);
    const TrainOutcome o = its_train(c, out / variant.dir, progress);
    for (const auto& [epoch, layer, cost] : o.eval_costs) {
      curves += variant.name + "," + std::to_string(epoch) + "," + layer + "," + fixed6(cost) + "\n";
    }
    for (const auto& s : o.stats) {
      train += variant.name + "," + std::to_string(s.epoch) + "," + s.layer + "," + fixed6(s.mean_cost) + "\n";
    }
  }
  write_file(out / "curves.csv", curves);
  write_file(out / "train_curves.csv", train);
}

}  // namespace uavsched
