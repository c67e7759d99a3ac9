#include "uavsched/upper_policy.hpp"

#include <cmath>
#include <string>

#include "uavsched/error.hpp"

namespace uavsched {

namespace {

const std::string kPrefix = "upper";

Tensor bias_init(std::size_t fan_in, std::size_t width, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t = Tensor::matrix(1, width);
  for (auto& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

Tensor coords_of(std::span<const Instance> batch) {
  const std::size_t n = batch.front().n_tasks() + 1;
  Tensor c = Tensor::matrix(batch.size() * n, 2);
  std::size_t r = 0;
  for (const auto& inst : batch) {
    c(r, 0) = inst.depot.x;
    c(r, 1) = inst.depot.y;
    ++r;
    for (const auto& p : inst.tasks) {
      c(r, 0) = p.x;
      c(r, 1) = p.y;
      ++r;
    }
  }
  return c;
}

}  // namespace

void UpperHyper::validate() const {
  encoder().validate();
  if (decoder_ff == 0) throw ArgumentError("decoder_ff must be positive");
}

UpperModel::UpperModel(const UpperHyper& h, int vehicles, std::uint64_t seed)
    : hyper(h), n_vehicles(vehicles) {
  h.validate();
  if (vehicles < 1) throw ArgumentError("n_vehicles must be positive");
  Rng rng(seed);
  init_encoder(params, kPrefix, h.encoder(), rng);
  const std::size_t v = static_cast<std::size_t>(vehicles);
  params.add("upper/dec/w1", uniform_init(v * h.d_h, h.d_h, rng));
  params.add("upper/dec/b1", bias_init(v * h.d_h, h.d_h, rng));
  params.add("upper/dec/ff_w1", uniform_init(h.d_h, h.decoder_ff, rng));
  params.add("upper/dec/ff_b1", bias_init(h.d_h, h.decoder_ff, rng));
  params.add("upper/dec/ff_w2", uniform_init(h.decoder_ff, h.d_h, rng));
  params.add("upper/dec/ff_b2", bias_init(h.decoder_ff, h.d_h, rng));
  params.add("upper/dec/w2", uniform_init(2 * h.d_h, v, rng));
  params.add("upper/dec/b2", bias_init(2 * h.d_h, v, rng));
}

void save_model(Checkpoint& ckpt, const UpperModel& m) {
  ckpt.hyper.emplace_back("upper.d_h", static_cast<double>(m.hyper.d_h));
  ckpt.hyper.emplace_back("upper.heads", static_cast<double>(m.hyper.heads));
  ckpt.hyper.emplace_back("upper.layers", static_cast<double>(m.hyper.layers));
  ckpt.hyper.emplace_back("upper.ff_hidden", static_cast<double>(m.hyper.ff_hidden));
  ckpt.hyper.emplace_back("upper.decoder_ff", static_cast<double>(m.hyper.decoder_ff));
  ckpt.hyper.emplace_back("upper.n_vehicles", static_cast<double>(m.n_vehicles));
  ckpt.add_params(m.params);
}

UpperModel load_upper(const Checkpoint& ckpt) {
  auto size = [&](const char* name) {
    return static_cast<std::size_t>(ckpt.hyper_value(name));
  };
  UpperHyper h;
  h.d_h = size("upper.d_h");
  h.heads = size("upper.heads");
  h.layers = size("upper.layers");
  h.ff_hidden = size("upper.ff_hidden");
  h.decoder_ff = size("upper.decoder_ff");
  UpperModel m(h, static_cast<int>(ckpt.hyper_value("upper.n_vehicles")), 0);
  ckpt.load_params(m.params);
  return m;
}

Var upper_encode(Tape& tape, UpperModel& model, std::span<const Instance> batch,
                 bool training) {
  if (batch.empty()) throw ArgumentError("empty instance batch");
  for (const auto& inst : batch) {
    if (inst.n_tasks() != batch.front().n_tasks() || inst.n_vehicles != model.n_vehicles) {
      throw ArgumentError("batch instances must share task and vehicle counts");
    }
  }
  const auto segs = Segments::uniform(batch.size(), batch.front().n_tasks() + 1);
  return encode_nodes(tape, model.params, kPrefix, model.hyper.encoder(), coords_of(batch),
                      segs, training);
}

Tensor upper_embeddings(UpperModel& model, const Instance& instance) {
  Tape tape(false);
  return upper_encode(tape, model, std::span<const Instance>(&instance, 1), false).value();
}

Var upper_logits(Tape& tape, UpperModel& model, Var embeddings,
                 const std::vector<std::vector<std::vector<int>>>& contexts,
                 const std::vector<int>& current) {
  const std::size_t rows = contexts.size();
  const std::size_t v = static_cast<std::size_t>(model.n_vehicles);
  const std::size_t d = model.hyper.d_h;
  std::vector<std::vector<int>> groups;
  groups.reserve(rows * v);
  for (const auto& per_vehicle : contexts) {
    if (per_vehicle.size() != v) throw ShapeError("one context list per vehicle required");
    for (const auto& g : per_vehicle) {
      if (g.empty()) throw ContractError("empty vehicle context");
      groups.push_back(g);
    }
  }
  auto W = [&](const char* name) { return tape.param(model.params.get(name)); };
  Var pooled = ad::reshape(ad::maxpool(embeddings, groups), {rows, v * d});
  Var hts = ad::add(ad::matmul(pooled, W("upper/dec/w1")), W("upper/dec/b1"));
  hts = ad::relu(ad::add(ad::matmul(hts, W("upper/dec/ff_w1")), W("upper/dec/ff_b1")));
  hts = ad::add(ad::matmul(hts, W("upper/dec/ff_w2")), W("upper/dec/ff_b2"));
  Var cur = ad::gather_rows(embeddings, current);
  return ad::add(ad::matmul(ad::concat({hts, cur}, 1), W("upper/dec/w2")), W("upper/dec/b2"));
}

std::vector<double> decode_step(UpperModel& model, const Tensor& embeddings,
                                const std::vector<std::vector<int>>& contexts, int current) {
  Tape tape(false);
  Var emb = tape.constant(embeddings);
  Var probs = ad::softmax(upper_logits(tape, model, emb, {contexts}, {current}));
  const auto vals = probs.value().values();
  return {vals.begin(), vals.end()};
}

UpperRollout decode_allocations(Tape& tape, UpperModel& model, Var embeddings,
                                const std::vector<int>& base_rows, int n_tasks,
                                const UpperRolloutOptions& opt) {
  const std::size_t rollouts = base_rows.size();
  const int v = model.n_vehicles;
  if (opt.kind == DecodeKind::Sample && opt.rng == nullptr && opt.forced == nullptr) {
    throw ArgumentError("sampling needs an Rng");
  }
  if (opt.forced && opt.forced->size() != rollouts) throw ArgumentError("forced actions per rollout");
  if (opt.orders && opt.orders->size() != rollouts) throw ArgumentError("task order per rollout");

  Instance shape;  // only sizes matter to reset()
  shape.tasks.resize(static_cast<std::size_t>(n_tasks));
  shape.n_vehicles = v;
  std::vector<AllocationState> states;
  for (std::size_t r = 0; r < rollouts; ++r) {
    states.push_back(opt.orders ? reset(shape, (*opt.orders)[r]) : reset(shape));
  }
  // Embedding rows of each vehicle's real allocations (depot row if none).
  std::vector<std::vector<std::vector<int>>> contexts(rollouts);
  for (std::size_t r = 0; r < rollouts; ++r) {
    contexts[r].assign(static_cast<std::size_t>(v), {base_rows[r] + kDepotSentinel});
  }

  UpperRollout out;
  out.actions.assign(rollouts, {});
  out.step_log_probs.assign(rollouts, {});
  for (int t = 0; t < n_tasks; ++t) {
    std::vector<int> current(rollouts);
    for (std::size_t r = 0; r < rollouts; ++r) current[r] = base_rows[r] + states[r].current_task();
    Var probs = ad::softmax(upper_logits(tape, model, embeddings, contexts, current));
    const Tensor& p = probs.value();
    std::vector<int> cols(rollouts);
    for (std::size_t r = 0; r < rollouts; ++r) {
      int col;
      if (opt.forced) {
        col = (*opt.forced)[r].at(static_cast<std::size_t>(t)) - 1;
        if (col < 0 || col >= v) throw ArgumentError("forced action out of range");
      } else {
        col = choose({p.data() + r * static_cast<std::size_t>(v), static_cast<std::size_t>(v)},
                     opt.kind, opt.rng);
      }
      cols[r] = col;
      const int task = states[r].current_task();
      apply_step(states[r], col + 1);
      auto& ctx = contexts[r][static_cast<std::size_t>(col)];
      if (ctx.size() == 1 && ctx[0] == base_rows[r] + kDepotSentinel) ctx.clear();
      ctx.push_back(base_rows[r] + task);
      out.actions[r].push_back(col + 1);
      out.step_log_probs[r].push_back(std::log(p(r, static_cast<std::size_t>(col))));
    }
    Var lp = ad::log(ad::pick(probs, cols));
    out.log_prob_sum = out.log_prob_sum.valid() ? ad::add(out.log_prob_sum, lp) : lp;
  }
  if (!out.log_prob_sum.valid()) {
    out.log_prob_sum = tape.constant(Tensor::matrix(rollouts, 1));
  }
  for (const auto& s : states) out.allocations.push_back(finalize(s));
  return out;
}

UpperRollout rollout_allocations(Tape& tape, UpperModel& model, std::span<const Instance> batch,
                                 bool training, const UpperRolloutOptions& options) {
  Var emb = upper_encode(tape, model, batch, training);
  const int n = static_cast<int>(batch.front().n_tasks()) + 1;
  std::vector<int> base(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) base[b] = static_cast<int>(b) * n;
  return decode_allocations(tape, model, emb, base, n - 1, options);
}

std::vector<AllocationResult> allocate(UpperModel& model, const Instance& instance,
                                       const DecodeMode& mode) {
  Tape tape(false);
  Var emb = upper_encode(tape, model, std::span<const Instance>(&instance, 1), false);
  const std::size_t k = mode.kind == DecodeKind::Greedy ? 1 : static_cast<std::size_t>(mode.samples);
  Rng rng(mode.seed);
  UpperRolloutOptions opt;
  opt.kind = mode.kind;
  opt.rng = &rng;
  auto ro = decode_allocations(tape, model, emb, std::vector<int>(k, 0),
                               static_cast<int>(instance.n_tasks()), opt);
  std::vector<AllocationResult> out;
  for (std::size_t r = 0; r < k; ++r) {
    out.push_back({std::move(ro.allocations[r]), std::move(ro.step_log_probs[r])});
  }
  return out;
}

}  // namespace uavsched
