#include "uavsched/route_policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "uavsched/error.hpp"

namespace uavsched {

namespace {

const std::string kPrefix = "lower";

Point node_of(const RouteProblem& p, int pos) {
  if (pos == 0) return p.depot;
  if (pos < 0 || static_cast<std::size_t>(pos) > p.tasks.size()) {
    throw IndexError("task position " + std::to_string(pos) + " out of range");
  }
  return p.tasks[static_cast<std::size_t>(pos - 1)];
}

// True if `cand` beats `best` by count, then length, otherwise keep best.
bool better(int count, double length, int best_count, double best_length) {
  if (count != best_count) return count > best_count;
  return length < best_length - 1e-12;
}

}  // namespace

RouteProblem route_problem(const Instance& instance, const std::vector<int>& subset) {
  RouteProblem p;
  p.depot = instance.depot;
  p.budget = instance.budget;
  for (int t : subset) {
    if (t < 1 || static_cast<std::size_t>(t) > instance.n_tasks()) {
      throw IndexError("subset task " + std::to_string(t) + " out of range");
    }
    p.tasks.push_back(instance.tasks[static_cast<std::size_t>(t - 1)]);
  }
  return p;
}

double tour_length(const RouteProblem& problem, std::span<const int> visits) {
  double len = 0.0;
  Point cur = problem.depot;
  for (int v : visits) {
    const Point next = node_of(problem, v);
    len += distance(cur, next);
    cur = next;
  }
  return len + distance(cur, problem.depot);
}

void LowerHyper::validate() const {
  encoder().validate();
  if (!(tanh_clip > 0.0)) throw ArgumentError("tanh_clip must be positive");
}

LowerModel::LowerModel(const LowerHyper& h, std::uint64_t seed) : hyper(h) {
  h.validate();
  Rng rng(seed);
  init_encoder(params, kPrefix, h.encoder(), rng);
  params.add("lower/dec/w_budget", uniform_init(1, h.d_h, rng));
  params.add("lower/dec/w_q", uniform_init(3 * h.d_h, h.d_h, rng));
  params.add("lower/dec/w_k", uniform_init(h.d_h, h.d_h, rng));
}

void save_model(Checkpoint& ckpt, const LowerModel& m) {
  ckpt.hyper.emplace_back("lower.d_h", static_cast<double>(m.hyper.d_h));
  ckpt.hyper.emplace_back("lower.heads", static_cast<double>(m.hyper.heads));
  ckpt.hyper.emplace_back("lower.layers", static_cast<double>(m.hyper.layers));
  ckpt.hyper.emplace_back("lower.ff_hidden", static_cast<double>(m.hyper.ff_hidden));
  ckpt.hyper.emplace_back("lower.tanh_clip", m.hyper.tanh_clip);
  ckpt.add_params(m.params);
}

LowerModel load_lower(const Checkpoint& ckpt) {
  auto size = [&](const char* name) {
    return static_cast<std::size_t>(ckpt.hyper_value(name));
  };
  LowerHyper h;
  h.d_h = size("lower.d_h");
  h.heads = size("lower.heads");
  h.layers = size("lower.layers");
  h.ff_hidden = size("lower.ff_hidden");
  h.tanh_clip = ckpt.hyper_value("lower.tanh_clip");
  LowerModel m(h, 0);
  ckpt.load_params(m.params);
  return m;
}

RouteRollouts rollout_routes(Tape& tape, LowerModel& model, std::span<const RouteProblem> problems,
                             bool training, const RouteRolloutOptions& opt) {
  if (problems.empty()) throw ArgumentError("no routing problems");
  std::vector<int> problem_of;
  if (opt.problem_of) {
    problem_of = *opt.problem_of;
    for (int p : problem_of) {
      if (p < 0 || static_cast<std::size_t>(p) >= problems.size()) {
        throw IndexError("problem_of entry out of range");
      }
    }
  } else {
    problem_of.resize(problems.size());
    for (std::size_t i = 0; i < problems.size(); ++i) problem_of[i] = static_cast<int>(i);
  }
  const std::size_t R = problem_of.size();
  if (opt.kind == DecodeKind::Sample && !opt.rng && !opt.forced) {
    throw ArgumentError("sampling needs an Rng");
  }
  if (opt.forced && opt.forced->size() != R) throw ArgumentError("forced actions per rollout");

  std::vector<std::size_t> lengths;
  for (const auto& p : problems) {
    if (!(p.budget > 0.0)) throw ArgumentError("route budget must be positive");
    lengths.push_back(p.tasks.size() + 1);
  }
  const Segments segs = Segments::from_lengths(lengths);
  Tensor coords = Tensor::matrix(segs.total_rows(), 2);
  for (std::size_t s = 0; s < problems.size(); ++s) {
    const std::size_t o = segs.offset[s];
    coords(o, 0) = problems[s].depot.x;
    coords(o, 1) = problems[s].depot.y;
    for (std::size_t i = 0; i < problems[s].tasks.size(); ++i) {
      coords(o + 1 + i, 0) = problems[s].tasks[i].x;
      coords(o + 1 + i, 1) = problems[s].tasks[i].y;
    }
  }

  const std::size_t d = model.hyper.d_h;
  auto W = [&](const char* name) { return tape.param(model.params.get(name)); };
  Var emb = encode_nodes(tape, model.params, kPrefix, model.hyper.encoder(), coords, segs, training);
  Var graph = ad::segment_mean(emb, segs);
  Var keys = ad::matmul(emb, W("lower/dec/w_k"));

  Segments rsegs;
  std::vector<int> graph_rows(R);
  for (std::size_t r = 0; r < R; ++r) {
    const auto p = static_cast<std::size_t>(problem_of[r]);
    rsegs.offset.push_back(segs.offset[p]);
    rsegs.length.push_back(segs.length[p]);
    graph_rows[r] = static_cast<int>(p);
  }
  const std::size_t width = rsegs.max_length();
  Var graph_r = ad::gather_rows(graph, graph_rows);

  // Decoder state per rollout.
  std::vector<int> cur(R, 0);
  std::vector<double> remaining(R);
  std::vector<char> done(R, 0);
  std::vector<std::vector<char>> visited(R);
  for (std::size_t r = 0; r < R; ++r) {
    remaining[r] = problems[static_cast<std::size_t>(problem_of[r])].budget;
    visited[r].assign(rsegs.length[r], 0);
  }

  RouteRollouts out;
  out.visits.assign(R, {});
  out.step_log_probs.assign(R, {});
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t t = 0;; ++t) {
    if (std::all_of(done.begin(), done.end(), [](char c) { return c != 0; })) break;

    Tensor mask = Tensor::matrix(R, width, 1.0);
    Tensor budget = Tensor::matrix(R, 1);
    std::vector<int> cur_rows(R);
    for (std::size_t r = 0; r < R; ++r) {
      const RouteProblem& p = problems[static_cast<std::size_t>(problem_of[r])];
      budget(r, 0) = remaining[r];
      cur_rows[r] = static_cast<int>(rsegs.offset[r]) + cur[r];
      mask(r, 0) = 0.0;
      if (done[r]) continue;
      const Point here = node_of(p, cur[r]);
      bool any = false;
      for (std::size_t j = 1; j < rsegs.length[r]; ++j) {
        if (visited[r][j]) continue;
        const Point q = p.tasks[j - 1];
        if (distance(here, q) + distance(q, p.depot) <= remaining[r]) {
          mask(r, j) = 0.0;
          any = true;
        }
      }
      if (t == 0 && any) mask(r, 0) = 1.0;
    }

    Var ctx = ad::concat({graph_r, ad::gather_rows(emb, cur_rows),
                          ad::matmul(tape.constant(std::move(budget)), W("lower/dec/w_budget"))},
                         1);
    Var q = ad::matmul(ctx, W("lower/dec/w_q"));
    Var logits = ad::scale(
        ad::tanh(ad::scale(ad::segment_scores(q, keys, rsegs, width), inv_sqrt_d)),
        model.hyper.tanh_clip);
    Var probs = ad::masked_softmax(logits, mask);
    const Tensor& P = probs.value();

    std::vector<int> cols(R, 0);
    for (std::size_t r = 0; r < R; ++r) {
      if (done[r]) continue;
      int col;
      if (opt.forced) {
        const auto& f = (*opt.forced)[r];
        if (t >= f.size()) throw ArgumentError("forced route ends before termination");
        col = f[t];
        if (col < 0 || static_cast<std::size_t>(col) >= width || mask(r, static_cast<std::size_t>(col)) != 0.0) {
          throw ContractError("forced route action " + std::to_string(col) + " is masked");
        }
      } else {
        col = choose({P.data() + r * width, width}, opt.kind, opt.rng);
      }
      cols[r] = col;
      out.step_log_probs[r].push_back(std::log(P(r, static_cast<std::size_t>(col))));
      const RouteProblem& p = problems[static_cast<std::size_t>(problem_of[r])];
      remaining[r] -= distance(node_of(p, cur[r]), node_of(p, col));
      // a + b <= c does not imply c - a >= b in floating point; allow an ulp.
      if (remaining[r] < -kBudgetTolerance) throw ContractError("route budget went negative");
      remaining[r] = std::max(remaining[r], 0.0);
      if (col == 0) {
        done[r] = 1;
      } else {
        visited[r][static_cast<std::size_t>(col)] = 1;
        out.visits[r].push_back(col);
      }
      cur[r] = col;
    }
    Var lp = ad::log(ad::pick(probs, cols));
    out.log_prob_sum = out.log_prob_sum.valid() ? ad::add(out.log_prob_sum, lp) : lp;
  }
  for (std::size_t r = 0; r < R; ++r) {
    out.lengths.push_back(tour_length(problems[static_cast<std::size_t>(problem_of[r])], out.visits[r]));
  }
  return out;
}

std::vector<PlannedRoute> plan_routes(LowerModel& model, std::span<const RouteProblem> problems,
                                      const DecodeMode& mode, std::size_t chunk) {
  std::vector<PlannedRoute> out(problems.size());
  if (problems.empty()) return out;
  const std::size_t k = mode.kind == DecodeKind::Greedy ? 1 : static_cast<std::size_t>(mode.samples);
  const std::size_t per_chunk = std::max<std::size_t>(1, chunk / k);
  Rng rng(mode.seed);
  for (std::size_t start = 0; start < problems.size(); start += per_chunk) {
    const std::size_t n = std::min(per_chunk, problems.size() - start);
    std::vector<int> problem_of;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t s = 0; s < k; ++s) problem_of.push_back(static_cast<int>(i));
    }
    Tape tape(false);
    RouteRolloutOptions opt;
    opt.kind = mode.kind;
    opt.rng = &rng;
    opt.problem_of = &problem_of;
    auto ro = rollout_routes(tape, model, problems.subspan(start, n), false, opt);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = i * k;
      for (std::size_t s = 1; s < k; ++s) {
        const std::size_t r = i * k + s;
        if (better(static_cast<int>(ro.visits[r].size()), ro.lengths[r],
                   static_cast<int>(ro.visits[best].size()), ro.lengths[best])) {
          best = r;
        }
      }
      PlannedRoute& pr = out[start + i];
      pr.visits = std::move(ro.visits[best]);
      pr.count = static_cast<int>(pr.visits.size());
      pr.length = ro.lengths[best];
      pr.step_log_probs = std::move(ro.step_log_probs[best]);
    }
  }
  return out;
}

PlannedRoute plan_route(LowerModel& model, const RouteProblem& problem, const DecodeMode& mode) {
  return plan_routes(model, std::span<const RouteProblem>(&problem, 1), mode).front();
}

std::vector<Route> plan_allocation(LowerModel& model, const Instance& instance,
                                   const Allocation& allocation, const DecodeMode& mode) {
  std::vector<RouteProblem> problems;
  for (const auto& subset : allocation.subsets) problems.push_back(route_problem(instance, subset));
  auto planned = plan_routes(model, problems, mode);
  std::vector<Route> routes;
  for (std::size_t k = 0; k < planned.size(); ++k) {
    Route r;
    r.vehicle_id = static_cast<int>(k + 1);
    for (int pos : planned[k].visits) {
      r.visits.push_back(allocation.subsets[k][static_cast<std::size_t>(pos - 1)]);
    }
    routes.push_back(std::move(r));
  }
  return routes;
}

PlannedRoute brute_force_route(const RouteProblem& problem) {
  const std::size_t n = problem.tasks.size();
  if (n > kBruteForceLimit) {
    throw ArgumentError("brute force handles at most " + std::to_string(kBruteForceLimit) +
                        " tasks, got " + std::to_string(n));
  }
  PlannedRoute best;
  best.length = 0.0;
  std::vector<int> path;
  std::vector<char> used(n + 1, 0);
  // Remaining budget is updated by subtraction in visit order, exactly as
  // the learned decoder does, so both agree on knife-edge feasibility.
  auto dfs = [&](auto&& self, int cur, double remaining) -> void {
    if (!path.empty()) {
      const double len = tour_length(problem, path);
      if (better(static_cast<int>(path.size()), len, best.count, best.length)) {
        best.visits = path;
        best.count = static_cast<int>(path.size());
        best.length = len;
      }
    }
    const Point here = node_of(problem, cur);
    for (std::size_t j = 1; j <= n; ++j) {
      if (used[j]) continue;
      const Point q = problem.tasks[j - 1];
      const double step = distance(here, q);
      if (step + distance(q, problem.depot) > remaining) continue;
      used[j] = 1;
      path.push_back(static_cast<int>(j));
      self(self, static_cast<int>(j), remaining - step);
      path.pop_back();
      used[j] = 0;
    }
  };
  dfs(dfs, 0, problem.budget);
  return best;
}

PlannedRoute greedy_insert_route(const RouteProblem& problem) {
  const std::size_t n = problem.tasks.size();
  std::vector<int> route;
  std::vector<char> placed(n + 1, 0);
  double length = 0.0;
  for (;;) {
    double best_delta = std::numeric_limits<double>::infinity();
    int best_task = 0;
    std::size_t best_pos = 0;
    for (std::size_t j = 1; j <= n; ++j) {
      if (placed[j]) continue;
      const Point q = problem.tasks[j - 1];
      for (std::size_t pos = 0; pos <= route.size(); ++pos) {
        const Point a = pos == 0 ? problem.depot : node_of(problem, route[pos - 1]);
        const Point b = pos == route.size() ? problem.depot : node_of(problem, route[pos]);
        const double delta = distance(a, q) + distance(q, b) - distance(a, b);
        if (delta < best_delta && length + delta <= problem.budget) {
          best_delta = delta;
          best_task = static_cast<int>(j);
          best_pos = pos;
        }
      }
    }
    if (best_task == 0) break;
    std::vector<int> candidate = route;
    candidate.insert(candidate.begin() + static_cast<std::ptrdiff_t>(best_pos), best_task);
    placed[static_cast<std::size_t>(best_task)] = 1;
    const double exact = tour_length(problem, candidate);
    if (exact > problem.budget) continue;  // rounding put it over; skip this task
    route = std::move(candidate);
    length = exact;
  }
  PlannedRoute pr;
  pr.count = static_cast<int>(route.size());
  pr.length = tour_length(problem, route);
  pr.visits = std::move(route);
  return pr;
}

}  // namespace uavsched
