#include "uavsched/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "uavsched/error.hpp"
#include "uavsched/io.hpp"

namespace uavsched {

// ---------------------------------------------------------------- config

void TrainConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ArgumentError("config: " + msg); };
  if (tasks < 1) fail("tasks must be >= 1");
  if (vehicles < 1) fail("vehicles must be >= 1");
  if (!(budget > 0.0)) fail("budget must be positive");
  if (epochs < 1) fail("epochs must be >= 1");
  if (pretrain_epochs < 0) fail("pretrain_epochs must be >= 0");
  if (continuous_epochs < 1) fail("continuous_epochs must be >= 1");
  if (intensive_epochs < continuous_epochs) fail("intensive_epochs must be >= continuous_epochs");
  if (instances_per_epoch < 1 || batch_size < 1) fail("data sizes must be positive");
  if (eval_size < 2) fail("eval_size must be >= 2");
  if (!(lr > 0.0) || !(upper_lr_decay > 0.0) || !(lower_lr_decay > 0.0)) fail("lr settings must be positive");
  if (!(upper_grad_clip > 0.0) || !(lower_grad_clip > 0.0)) fail("grad clip must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must be in (0, 1)");
  upper_hyper().validate();
  lower_hyper().validate();
}

UpperHyper TrainConfig::upper_hyper() const { return {d_h, heads, layers, ff_hidden, decoder_ff}; }

LowerHyper TrainConfig::lower_hyper() const {
  LowerHyper h;
  h.d_h = d_h;
  h.heads = heads;
  h.layers = layers;
  h.ff_hidden = ff_hidden;
  return h;
}

namespace {

long long parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ArgumentError("config: " + key + " expects an integer, got '" + v + "'");
  return out;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  const long long x = parse_int(key, v);
  if (x < 0) throw ArgumentError("config: " + key + " must be non-negative");
  return static_cast<std::size_t>(x);
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != v.size()) throw ArgumentError("config: " + key + " expects a number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ArgumentError("config: " + key + " expects true/false, got '" + v + "'");
}

std::string real(double x) { return format_real(x); }

}  // namespace

void TrainConfig::set(const std::string& key, const std::string& v) {
  if (key == "tasks") tasks = static_cast<int>(parse_int(key, v));
  else if (key == "vehicles") vehicles = static_cast<int>(parse_int(key, v));
  else if (key == "budget") budget = parse_double(key, v);
  else if (key == "epochs") epochs = static_cast<int>(parse_int(key, v));
  else if (key == "pretrain_epochs") pretrain_epochs = static_cast<int>(parse_int(key, v));
  else if (key == "intensive_epochs") intensive_epochs = static_cast<int>(parse_int(key, v));
  else if (key == "continuous_epochs") continuous_epochs = static_cast<int>(parse_int(key, v));
  else if (key == "pretrain") pretrain = parse_bool(key, v);
  else if (key == "intensive") intensive = parse_bool(key, v);
  else if (key == "alternate") alternate = parse_bool(key, v);
  else if (key == "instances_per_epoch") instances_per_epoch = parse_size(key, v);
  else if (key == "batch_size") batch_size = parse_size(key, v);
  else if (key == "lr") lr = parse_double(key, v);
  else if (key == "upper_lr_decay") upper_lr_decay = parse_double(key, v);
  else if (key == "upper_grad_clip") upper_grad_clip = parse_double(key, v);
  else if (key == "lower_lr_decay") lower_lr_decay = parse_double(key, v);
  else if (key == "lower_grad_clip") lower_grad_clip = parse_double(key, v);
  else if (key == "alpha") alpha = parse_double(key, v);
  else if (key == "eval_size") eval_size = parse_size(key, v);
  else if (key == "seed") seed = static_cast<std::uint64_t>(parse_size(key, v));
  else if (key == "shuffle_tasks") shuffle_tasks = parse_bool(key, v);
  else if (key == "d_h") d_h = parse_size(key, v);
  else if (key == "heads") heads = parse_size(key, v);
  else if (key == "layers") layers = parse_size(key, v);
  else if (key == "ff_hidden") ff_hidden = parse_size(key, v);
  else if (key == "decoder_ff") decoder_ff = parse_size(key, v);
  else throw ArgumentError("config: unknown training key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> TrainConfig::settings() const {
  auto b = [](bool x) { return std::string(x ? "true" : "false"); };
  return {
      {"tasks", std::to_string(tasks)},
      {"vehicles", std::to_string(vehicles)},
      {"budget", real(budget)},
      {"epochs", std::to_string(epochs)},
      {"pretrain_epochs", std::to_string(pretrain_epochs)},
      {"intensive_epochs", std::to_string(intensive_epochs)},
      {"continuous_epochs", std::to_string(continuous_epochs)},
      {"pretrain", b(pretrain)},
      {"intensive", b(intensive)},
      {"alternate", b(alternate)},
      {"instances_per_epoch", std::to_string(instances_per_epoch)},
      {"batch_size", std::to_string(batch_size)},
      {"lr", real(lr)},
      {"upper_lr_decay", real(upper_lr_decay)},
      {"upper_grad_clip", real(upper_grad_clip)},
      {"lower_lr_decay", real(lower_lr_decay)},
      {"lower_grad_clip", real(lower_grad_clip)},
      {"alpha", real(alpha)},
      {"eval_size", std::to_string(eval_size)},
      {"seed", std::to_string(seed)},
      {"shuffle_tasks", b(shuffle_tasks)},
      {"d_h", std::to_string(d_h)},
      {"heads", std::to_string(heads)},
      {"layers", std::to_string(layers)},
      {"ff_hidden", std::to_string(ff_hidden)},
      {"decoder_ff", std::to_string(decoder_ff)},
  };
}

// ------------------------------------------------------------- optimizer

void Adam::step(ParamStore& params, const Grad& grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& p : params) {
    if (!p.trainable) continue;
    const Tensor* g = grad.find(p);
    auto it = moments_.find(p.name);
    if (it == moments_.end()) {
      it = moments_.emplace(p.name, std::make_pair(Tensor(p.value.shape()), Tensor(p.value.shape()))).first;
    }
    auto& [m, v] = it->second;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double gi = g ? (*g)[i] : 0.0;
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * gi;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * gi * gi;
      p.value[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

double clip_grad_norm(Grad& grad, double max_norm) {
  const double norm = grad.norm();
  if (norm > max_norm) grad.scale(max_norm / norm);
  return norm;
}

TTestResult paired_ttest_less(std::span<const double> candidate, std::span<const double> baseline,
                              double alpha) {
  if (candidate.size() != baseline.size()) throw ArgumentError("t-test: sample sizes differ");
  const std::size_t n = candidate.size();
  if (n < 2) throw ArgumentError("t-test needs at least two pairs");
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = candidate[i] - baseline[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  TTestResult r;
  r.mean_diff = mean;
  if (sd == 0.0) {
    // Degenerate: every difference equal.
    r.t = mean < 0.0 ? -INFINITY : (mean > 0.0 ? INFINITY : 0.0);
    r.p_value = mean < 0.0 ? 0.0 : 1.0;
  } else {
    r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    boost::math::students_t dist(static_cast<double>(n - 1));
    r.p_value = boost::math::cdf(dist, r.t);
  }
  r.significant = r.p_value < alpha;
  return r;
}

// ------------------------------------------------------------ evaluation

std::vector<Allocation> greedy_allocations(UpperModel& upper, std::span<const Instance> instances,
                                           std::size_t chunk) {
  std::vector<Allocation> out;
  out.reserve(instances.size());
  for (std::size_t s = 0; s < instances.size(); s += chunk) {
    Tape tape(false);
    auto ro = rollout_allocations(tape, upper, instances.subspan(s, std::min(chunk, instances.size() - s)),
                                  false, {});
    for (auto& a : ro.allocations) out.push_back(std::move(a));
  }
  return out;
}

std::vector<int> executed_counts(LowerModel& lower, std::span<const Instance> instances,
                                 const std::vector<Allocation>& allocations) {
  std::vector<RouteProblem> problems;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (const auto& subset : allocations[i].subsets) {
      problems.push_back(route_problem(instances[i], subset));
      owner.push_back(i);
    }
  }
  const auto planned = plan_routes(lower, problems, DecodeMode::greedy());
  std::vector<int> counts(instances.size(), 0);
  for (std::size_t k = 0; k < planned.size(); ++k) counts[owner[k]] += planned[k].count;
  return counts;
}

std::vector<double> upper_costs(UpperModel& upper, LowerModel& lower,
                                std::span<const Instance> instances) {
  const auto counts = executed_counts(lower, instances, greedy_allocations(upper, instances));
  std::vector<double> cost(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) cost[i] = -counts[i];
  return cost;
}

std::vector<double> lower_costs(LowerModel& lower, std::span<const RouteProblem> problems) {
  const auto planned = plan_routes(lower, problems, DecodeMode::greedy());
  std::vector<double> cost(planned.size());
  for (std::size_t i = 0; i < planned.size(); ++i) cost[i] = -planned[i].count;
  return cost;
}

// ------------------------------------------------------------------ data

std::vector<RouteProblem> pretrain_problems(std::size_t count, int tasks, int vehicles,
                                            double budget, Rng& rng) {
  const int center = (tasks + vehicles - 1) / vehicles;
  const int lo = std::max(1, center - 5);
  const int hi = std::max(lo, center + 5);
  std::vector<RouteProblem> out(count);
  for (auto& p : out) {
    const int n = lo + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(hi - lo + 1)));
    p.budget = budget;
    p.depot = {rng.uniform(), rng.uniform()};
    p.tasks.resize(static_cast<std::size_t>(n));
    for (auto& t : p.tasks) t = {rng.uniform(), rng.uniform()};
  }
  return out;
}

std::vector<RouteProblem> gen_lower_data(UpperModel& upper, std::span<const Instance> instances,
                                         Rng& rng) {
  const auto allocations = greedy_allocations(upper, instances);
  std::vector<RouteProblem> out;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    for (const auto& subset : allocations[i].subsets) {
      out.push_back(route_problem(instances[i], subset));
    }
  }
  rng.shuffle(std::span<RouteProblem>(out));
  return out;
}

std::vector<Instance> random_instances(std::size_t count, int tasks, int vehicles, double budget,
                                       Rng& rng) {
  std::vector<Instance> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(generate_instance(rng.next(), tasks, vehicles, budget));
  }
  return out;
}

// -------------------------------------------------------------- REINFORCE

Var reinforce_loss(Var log_prob_sum, const std::vector<double>& advantage) {
  if (log_prob_sum.rows() != advantage.size() || log_prob_sum.cols() != 1) {
    throw ShapeError("reinforce_loss: one advantage per rollout");
  }
  Tensor adv = Tensor::matrix(advantage.size(), 1);
  std::copy(advantage.begin(), advantage.end(), adv.values().begin());
  Var a = log_prob_sum.tape().constant(std::move(adv));
  return ad::mean(ad::mul(a, log_prob_sum));
}

namespace {

void check_finite(const Grad& grad, const Var& loss, const char* layer) {
  if (!std::isfinite(loss.value().item()) || !grad.all_finite()) {
    throw NumericError(std::string(layer) + " REINFORCE produced a non-finite loss or gradient (loss " +
                       std::to_string(loss.value().item()) + ")");
  }
}

template <typename Fn>
EpochStats run_batches(std::size_t n, OptimState& opt, const char* layer, Fn&& batch_fn) {
  EpochStats st;
  st.layer = layer;
  st.lr = opt.adam.lr();
  double cost_sum = 0.0, norm_sum = 0.0;
  std::size_t batches = 0;
  for (std::size_t s = 0; s < n; s += opt.batch_size) {
    const std::size_t len = std::min(opt.batch_size, n - s);
    auto [costs, norm] = batch_fn(s, len);
    cost_sum += std::accumulate(costs.begin(), costs.end(), 0.0);
    norm_sum += norm;
    ++batches;
  }
  st.mean_cost = n ? cost_sum / static_cast<double>(n) : 0.0;
  st.grad_norm = batches ? norm_sum / static_cast<double>(batches) : 0.0;
  opt.adam.set_lr(opt.adam.lr() * opt.decay);
  return st;
}

}  // namespace

EpochStats reinforce_upper_epoch(UpperModel& model, UpperModel& baseline, LowerModel& lower,
                                 std::span<const Instance> data, OptimState& opt, Rng& rng,
                                 bool shuffle_tasks) {
  return run_batches(data.size(), opt, "upper", [&](std::size_t s, std::size_t len) {
    const auto batch = data.subspan(s, len);
    std::vector<std::vector<int>> orders;
    if (shuffle_tasks) {
      for (const auto& inst : batch) {
        std::vector<int> o(inst.n_tasks());
        std::iota(o.begin(), o.end(), 1);
        rng.shuffle(std::span<int>(o));
        orders.push_back(std::move(o));
      }
    }
    Tape tape(true);
    UpperRolloutOptions ro_opt;
    ro_opt.kind = DecodeKind::Sample;
    ro_opt.rng = &rng;
    if (shuffle_tasks) ro_opt.orders = &orders;
    auto ro = rollout_allocations(tape, model, batch, true, ro_opt);
    const auto counts = executed_counts(lower, batch, ro.allocations);
    const auto base_counts = executed_counts(lower, batch, greedy_allocations(baseline, batch));
    std::vector<double> costs(len), adv(len);
    for (std::size_t i = 0; i < len; ++i) {
      costs[i] = -counts[i];
      adv[i] = costs[i] + base_counts[i];
    }
    Var loss = reinforce_loss(ro.log_prob_sum, adv);
    Grad grad = tape.backward(loss);
    check_finite(grad, loss, "upper");
    const double norm = clip_grad_norm(grad, opt.clip);
    opt.adam.step(model.params, grad);
    return std::make_pair(costs, norm);
  });
}

EpochStats reinforce_lower_epoch(LowerModel& model, LowerModel& baseline,
                                 std::span<const RouteProblem> data, OptimState& opt, Rng& rng) {
  return run_batches(data.size(), opt, "lower", [&](std::size_t s, std::size_t len) {
    const auto batch = data.subspan(s, len);
    Tape tape(true);
    RouteRolloutOptions ro_opt;
    ro_opt.kind = DecodeKind::Sample;
    ro_opt.rng = &rng;
    auto ro = rollout_routes(tape, model, batch, true, ro_opt);
    const auto base = plan_routes(baseline, batch, DecodeMode::greedy());
    std::vector<double> costs(len), adv(len);
    for (std::size_t i = 0; i < len; ++i) {
      costs[i] = -static_cast<double>(ro.visits[i].size());
      adv[i] = costs[i] + base[i].count;
    }
    Var loss = reinforce_loss(ro.log_prob_sum, adv);
    Grad grad = tape.backward(loss);
    check_finite(grad, loss, "lower");
    const double norm = clip_grad_norm(grad, opt.clip);
    opt.adam.step(model.params, grad);
    return std::make_pair(costs, norm);
  });
}

namespace {

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

BaselineDecision decide(const std::vector<double>& model_cost, const std::vector<double>& base_cost,
                        double alpha) {
  BaselineDecision d;
  d.test = paired_ttest_less(model_cost, base_cost, alpha);
  d.baseline_cost = mean_of(base_cost);
  d.candidate_cost = mean_of(model_cost);
  d.replaced = d.test.significant;
  return d;
}

}  // namespace

BaselineDecision baseline_update(UpperModel& model, UpperModel& baseline, LowerModel& lower,
                                 std::span<const Instance> eval_set, double alpha) {
  auto d = decide(upper_costs(model, lower, eval_set), upper_costs(baseline, lower, eval_set), alpha);
  if (d.replaced) baseline.params.assign_values(model.params);
  return d;
}

BaselineDecision baseline_update(LowerModel& model, LowerModel& baseline,
                                 std::span<const RouteProblem> eval_set, double alpha) {
  auto d = decide(lower_costs(model, eval_set), lower_costs(baseline, eval_set), alpha);
  if (d.replaced) baseline.params.assign_values(model.params);
  return d;
}

// -------------------------------------------------------------- schedule

std::vector<ScheduleEvent> its_schedule(const TrainConfig& c) {
  std::vector<ScheduleEvent> ev;
  if (c.pretrain) {
    for (int i = 0; i < c.pretrain_epochs; ++i) ev.push_back({0, "lower-pretrain"});
  }
  for (int epoch = 1; epoch <= c.epochs; ++epoch) {
    ev.push_back({epoch, "upper"});
    bool lower;
    if (epoch < c.intensive_epochs) {
      lower = c.intensive ? epoch % c.continuous_epochs == 0 : true;
    } else {
      lower = c.alternate;
    }
    if (lower) ev.push_back({epoch, "lower"});
  }
  return ev;
}

Checkpoint make_checkpoint(const UpperModel& upper, const LowerModel& lower) {
  Checkpoint ckpt;
  save_model(ckpt, upper);
  save_model(ckpt, lower);
  return ckpt;
}

namespace {

class RunFiles {
 public:
  explicit RunFiles(const std::filesystem::path& dir) : dir_(dir) {
    if (dir_.empty()) return;
    std::filesystem::create_directories(dir_);
    train_.open(dir_ / "train.csv");
    eval_.open(dir_ / "eval.csv");
    base_.open(dir_ / "baseline.csv");
    if (!train_ || !eval_ || !base_) throw FormatError("cannot create run files in " + dir_.string());
    train_ << "epoch,layer,mean_cost,grad_norm,lr,baseline_replaced\n";
    eval_ << "epoch,layer,eval_cost\n";
    base_ << "epoch,layer,baseline_cost,candidate_cost,t,p_value,replaced\n";
  }
  bool enabled() const { return !dir_.empty(); }
  const std::filesystem::path& dir() const { return dir_; }

  void stats(const EpochStats& s) {
    if (!enabled()) return;
    train_ << s.epoch << ',' << s.layer << ',' << fixed(s.mean_cost) << ',' << fixed(s.grad_norm)
           << ',' << fixed(s.lr, 10) << ',' << (s.baseline_replaced ? 1 : 0) << '\n';
    train_.flush();
  }
  void eval(int epoch, const std::string& layer, double cost) {
    if (!enabled()) return;
    eval_ << epoch << ',' << layer << ',' << fixed(cost) << '\n';
    eval_.flush();
  }
  void baseline(int epoch, const std::string& layer, const BaselineDecision& d) {
    if (!enabled()) return;
    base_ << epoch << ',' << layer << ',' << fixed(d.baseline_cost) << ',' << fixed(d.candidate_cost)
          << ',' << fixed(d.test.t) << ',' << fixed(d.test.p_value) << ',' << (d.replaced ? 1 : 0)
          << '\n';
    base_.flush();
  }

  static std::string fixed(double x, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
  }

 private:
  std::filesystem::path dir_;
  std::ofstream train_, eval_, base_;
};

}  // namespace

TrainOutcome its_train(const TrainConfig& c, const std::filesystem::path& run_dir,
                       const ProgressFn& progress) {
  c.validate();
  auto say = [&](const std::string& msg) {
    if (progress) progress(msg);
  };
  Rng master(c.seed);
  Rng init_rng = master.split();
  Rng eval_rng = master.split();
  Rng data_rng = master.split();
  Rng sample_rng = master.split();

  TrainOutcome out{UpperModel(c.upper_hyper(), c.vehicles, init_rng.next()),
                   LowerModel(c.lower_hyper(), init_rng.next()), its_schedule(c), {}, {}, {}};
  UpperModel upper_base = out.upper;
  LowerModel lower_base = out.lower;
  OptimState upper_opt{Adam(c.lr), c.upper_lr_decay, c.upper_grad_clip, c.batch_size};
  OptimState lower_opt{Adam(c.lr), c.lower_lr_decay, c.lower_grad_clip, c.batch_size};

  const auto upper_eval = random_instances(c.eval_size, c.tasks, c.vehicles, c.budget, eval_rng);
  const auto lower_eval = pretrain_problems(c.eval_size, c.tasks, c.vehicles, c.budget, eval_rng);
  const std::size_t lower_per_epoch = c.instances_per_epoch * static_cast<std::size_t>(c.vehicles);

  RunFiles files(run_dir);
  if (files.enabled()) {
    std::string cfg;
    for (const auto& [k, v] : c.settings()) cfg += k + " = " + v + "\n";
    write_file(run_dir / "config.txt", cfg);
  }
  auto record_eval = [&](int epoch) {
    const double lc = mean_of(lower_costs(out.lower, lower_eval));
    const double uc = mean_of(upper_costs(out.upper, out.lower, upper_eval));
    out.eval_costs.emplace_back(epoch, "lower", lc);
    out.eval_costs.emplace_back(epoch, "upper", uc);
    files.eval(epoch, "lower", lc);
    files.eval(epoch, "upper", uc);
    say("epoch " + std::to_string(epoch) + " eval: upper " + RunFiles::fixed(uc, 3) + ", lower " +
        RunFiles::fixed(lc, 3));
  };
  auto save = [&](int epoch) {
    if (!files.enabled()) return;
    write_checkpoint(run_dir / ("epoch_" + std::to_string(epoch) + ".ckpt"),
                     make_checkpoint(out.upper, out.lower));
  };
  using Clock = std::chrono::steady_clock;

  int current_epoch = -1;
  for (const auto& ev : out.events) {
    if (ev.epoch != current_epoch) {
      // Close the previous epoch before starting a new one.
      if (current_epoch >= 0) {
        record_eval(current_epoch);
        save(current_epoch);
      } else if (ev.epoch > 0) {
        record_eval(0);
        save(0);
      }
      current_epoch = ev.epoch;
    }
    const auto t0 = Clock::now();
    EpochStats st;
    BaselineDecision d;
    if (ev.layer == "upper") {
      const auto data = random_instances(c.instances_per_epoch, c.tasks, c.vehicles, c.budget, data_rng);
      st = reinforce_upper_epoch(out.upper, upper_base, out.lower, data, upper_opt, sample_rng,
                                 c.shuffle_tasks);
      d = baseline_update(out.upper, upper_base, out.lower, upper_eval, c.alpha);
    } else {
      std::vector<RouteProblem> data;
      if (ev.layer == "lower-pretrain") {
        data = pretrain_problems(lower_per_epoch, c.tasks, c.vehicles, c.budget, data_rng);
      } else {
        const auto inst = random_instances(c.instances_per_epoch, c.tasks, c.vehicles, c.budget, data_rng);
        data = gen_lower_data(out.upper, inst, data_rng);
      }
      st = reinforce_lower_epoch(out.lower, lower_base, data, lower_opt, sample_rng);
      d = baseline_update(out.lower, lower_base, lower_eval, c.alpha);
    }
    st.epoch = ev.epoch;
    st.layer = ev.layer;
    st.baseline_replaced = d.replaced;
    out.stats.push_back(st);
    out.baseline_log.emplace_back(ev.epoch, ev.layer, d);
    files.stats(st);
    files.baseline(ev.epoch, ev.layer, d);
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    say("epoch " + std::to_string(ev.epoch) + " " + ev.layer + ": cost " +
        RunFiles::fixed(st.mean_cost, 3) + ", grad " + RunFiles::fixed(st.grad_norm, 3) +
        ", baseline " + (d.replaced ? "replaced" : "kept") + " (p=" +
        RunFiles::fixed(d.test.p_value, 4) + "), " + RunFiles::fixed(secs, 1) + "s");
  }
  if (current_epoch >= 0) {
    record_eval(current_epoch);
    save(current_epoch);
  }
  if (files.enabled()) {
    write_checkpoint(run_dir / "final.ckpt", make_checkpoint(out.upper, out.lower));
  }
  return out;
}

}  // namespace uavsched
