#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "uavsched/error.hpp"
#include "uavsched/gradcheck.hpp"
#include "uavsched/io.hpp"
#include "uavsched/trainer.hpp"

using namespace uavsched;

namespace {

std::vector<int> lower_epochs(const std::vector<ScheduleEvent>& ev, int* pretrain = nullptr) {
  std::vector<int> out;
  int pre = 0;
  for (const auto& e : ev) {
    if (e.layer == "lower") out.push_back(e.epoch);
    if (e.layer == "lower-pretrain") ++pre;
  }
  if (pretrain) *pretrain = pre;
  return out;
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.tasks = 5;
  c.vehicles = 2;
  c.epochs = 2;
  c.pretrain_epochs = 1;
  c.intensive_epochs = 2;
  c.continuous_epochs = 1;
  c.instances_per_epoch = 24;
  c.batch_size = 12;
  c.eval_size = 16;
  c.d_h = 8;
  c.heads = 2;
  c.layers = 1;
  c.ff_hidden = 16;
  c.decoder_ff = 16;
  c.lr = 1e-3;
  return c;
}

bool same_params(const ParamStore& a, const ParamStore& b) {
  auto ia = a.begin();
  auto ib = b.begin();
  for (; ia != a.end() && ib != b.end(); ++ia, ++ib) {
    if (ia->name != ib->name || !(ia->value == ib->value)) return false;
  }
  return ia == a.end() && ib == b.end();
}

}  // namespace

TEST(Schedule, TwelveEpochsHandTrace) {
  TrainConfig c;
  c.epochs = 12;
  c.pretrain_epochs = 5;
  c.intensive_epochs = 8;
  c.continuous_epochs = 4;
  int pre = 0;
  EXPECT_EQ(lower_epochs(its_schedule(c), &pre), std::vector<int>({4, 8, 9, 10, 11, 12}));
  EXPECT_EQ(pre, 5);
  const auto ev = its_schedule(c);
  // Pre-training first, then each epoch trains the upper layer before the lower.
  EXPECT_EQ(ev.front(), (ScheduleEvent{0, "lower-pretrain"}));
  EXPECT_EQ(ev[5], (ScheduleEvent{1, "upper"}));
  const auto up = std::count_if(ev.begin(), ev.end(), [](const ScheduleEvent& e) { return e.layer == "upper"; });
  EXPECT_EQ(up, 12);
}

TEST(Schedule, FourEpochsWithLongIntensivePhase) {
  TrainConfig c;
  c.epochs = 4;
  c.intensive_epochs = 8;
  c.continuous_epochs = 4;
  c.pretrain_epochs = 1;
  int pre = 0;
  EXPECT_EQ(lower_epochs(its_schedule(c), &pre), std::vector<int>({4}));
  EXPECT_EQ(pre, 1);
  EXPECT_NO_THROW(c.validate());
}

TEST(Schedule, AblationModes) {
  TrainConfig c;
  c.epochs = 12;
  c.pretrain = false;
  int pre = -1;
  EXPECT_EQ(lower_epochs(its_schedule(c), &pre), std::vector<int>({4, 8, 9, 10, 11, 12}));
  EXPECT_EQ(pre, 0);
  c.pretrain = true;
  c.intensive = false;
  EXPECT_EQ(lower_epochs(its_schedule(c)), std::vector<int>({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}));
  c.intensive = true;
  c.alternate = false;
  EXPECT_EQ(lower_epochs(its_schedule(c)), std::vector<int>({4}));
}

TEST(Schedule, SixVehiclePreset) {
  TrainConfig c;
  c.epochs = 20;
  c.intensive_epochs = 12;
  c.continuous_epochs = 6;
  EXPECT_EQ(lower_epochs(its_schedule(c)),
            std::vector<int>({6, 12, 13, 14, 15, 16, 17, 18, 19, 20}));
}

TEST(Config, ValidationAndSettings) {
  TrainConfig c;
  EXPECT_EQ(c.lr, 1e-4);
  EXPECT_EQ(c.upper_grad_clip, 3.0);
  EXPECT_EQ(c.upper_lr_decay, 0.995);
  EXPECT_EQ(c.lower_grad_clip, 1.0);
  EXPECT_EQ(c.lower_lr_decay, 1.0);
  EXPECT_EQ(c.pretrain_epochs, 5);
  c.set("epochs", "7");
  c.set("lr", "0.001");
  c.set("pretrain", "false");
  EXPECT_EQ(c.epochs, 7);
  EXPECT_EQ(c.lr, 0.001);
  EXPECT_FALSE(c.pretrain);
  EXPECT_THROW(c.set("epochs", "seven"), ArgumentError);
  EXPECT_THROW(c.set("no_such_key", "1"), ArgumentError);
  TrainConfig back;
  for (const auto& [k, v] : c.settings()) back.set(k, v);
  EXPECT_EQ(back.settings(), c.settings());
  TrainConfig bad;
  bad.continuous_epochs = 0;
  EXPECT_THROW(bad.validate(), ArgumentError);
  bad = TrainConfig{};
  bad.heads = 7;
  EXPECT_THROW(bad.validate(), ArgumentError);
}

TEST(TTest, IdenticalCostsAreNotSignificant) {
  const std::vector<double> a = {-3, -4, -5, -6, -2};
  const auto r = paired_ttest_less(a, a, 0.05);
  EXPECT_EQ(r.p_value, 1.0);
  EXPECT_FALSE(r.significant);
}

TEST(TTest, UniformMarginIsSignificant) {
  const std::vector<double> base = {-3, -4, -5, -6, -2};
  std::vector<double> cand = base;
  for (auto& x : cand) x -= 1.0;
  EXPECT_TRUE(paired_ttest_less(cand, base, 0.05).significant);
  std::vector<double> noisy = {-4.1, -4.9, -6.2, -6.8, -3.0};
  const auto r = paired_ttest_less(noisy, base, 0.05);
  EXPECT_TRUE(r.significant);
  EXPECT_LT(r.t, 0.0);
}

// Differences chosen so t equals the 95% one-sided critical value for 9
// degrees of freedom (1.8331129326536335), giving p = 0.05.
TEST(TTest, CriticalValueGivesAlpha) {
  std::vector<double> d = {-1, 1, -1, 1, -1, 1, -1, 1, -1, 1};
  // mean 0, sd = sqrt(10/9); shift by -t*sd/sqrt(n).
  const double sd = std::sqrt(10.0 / 9.0);
  const double shift = -1.8331129326536335 * sd / std::sqrt(10.0);
  std::vector<double> base(10, 0.0), cand(10);
  for (std::size_t i = 0; i < 10; ++i) cand[i] = d[i] + shift;
  const auto r = paired_ttest_less(cand, base, 0.05);
  EXPECT_NEAR(r.t, -1.8331129326536335, 1e-12);
  EXPECT_NEAR(r.p_value, 0.05, 1e-9);
  EXPECT_THROW(paired_ttest_less(std::vector<double>{1.0}, std::vector<double>{1.0}, 0.05), ArgumentError);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParamStore s;
  s.add("w", Tensor({1, 3}, std::vector<double>{1.0, -2.0, 0.5}));
  Tape t;
  Var loss = ad::sum(ad::mul(t.param(s.get("w")), t.constant(Tensor({1, 3}, std::vector<double>{2.0, -0.5, 0.0}))));
  const Grad g = t.backward(loss);
  Adam adam(0.1);
  adam.step(s, g);
  const auto& w = s.get("w").value;
  // m_hat = g, v_hat = g^2: update = lr * g / (|g| + eps).
  EXPECT_NEAR(w[0], 1.0 - 0.1 * 2.0 / (2.0 + 1e-8), 1e-15);
  EXPECT_NEAR(w[1], -2.0 + 0.1 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_EQ(w[2], 0.5);
  EXPECT_EQ(adam.steps(), 1);
}

TEST(Adam, SecondStepMatchesHandRecurrence) {
  ParamStore s;
  s.add("w", Tensor::scalar(0.0));
  Adam adam(0.01);
  double m = 0, v = 0, w = 0;
  for (int k = 1; k <= 2; ++k) {
    const double g = k == 1 ? 3.0 : -1.0;
    Tape t;
    Var loss = ad::scale(t.param(s.get("w")), g);
    adam.step(s, t.backward(loss));
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, k));
    const double vh = v / (1 - std::pow(0.999, k));
    w -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
  }
  EXPECT_NEAR(s.get("w").value.item(), w, 1e-15);
}

TEST(Clip, ReturnsPreClipNorm) {
  ParamStore s;
  s.add("w", Tensor({1, 2}, std::vector<double>{0.0, 0.0}));
  Tape t;
  Var loss = ad::sum(ad::mul(t.param(s.get("w")), t.constant(Tensor({1, 2}, std::vector<double>{3.0, 4.0}))));
  Grad g = t.backward(loss);
  EXPECT_DOUBLE_EQ(clip_grad_norm(g, 1.0), 5.0);
  EXPECT_NEAR(g.norm(), 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(clip_grad_norm(g, 3.0), 1.0);
  EXPECT_NEAR(g.norm(), 1.0, 1e-15);
}

// Loss gradient with the advantages held as constants, on a 5-task toy.
TEST(Reinforce, LossGradcheckWithFrozenAdvantage) {
  LowerHyper h;
  h.d_h = 8;
  h.heads = 2;
  h.layers = 1;
  h.ff_hidden = 16;
  LowerModel model(h, 3);
  RouteProblem p;
  p.depot = {0.5, 0.5};
  p.tasks = {{0.6, 0.5}, {0.4, 0.7}, {0.2, 0.2}, {0.9, 0.1}, {0.5, 0.9}};
  p.budget = 1.6;
  const std::vector<RouteProblem> problems = {p, p};
  const std::vector<std::vector<int>> forced = {{2, 1, 4, 0}, {5, 0}};
  const std::vector<double> adv = {-1.0, 2.0};
  RouteRolloutOptions opt;
  opt.forced = &forced;
  auto loss = [&](Tape& t) {
    return ad::scale(reinforce_loss(rollout_routes(t, model, problems, true, opt).log_prob_sum, adv), 1e-3);
  };
  std::vector<Parameter*> ps;
  for (auto& q : model.params)
    if (q.trainable) ps.push_back(&q);
  const auto res = gradcheck_detailed(loss, ps, {});
  EXPECT_LT(res.max_rel_error, 1e-4) << res.worst_param;
}

TEST(Reinforce, ZeroAdvantageLeavesParametersUnchanged) {
  LowerHyper h;
  h.d_h = 8;
  h.heads = 2;
  h.layers = 1;
  h.ff_hidden = 16;
  LowerModel model(h, 4);
  LowerModel baseline = model;
  // One reachable task per problem: sampled and greedy routes coincide.
  Rng rng(5);
  std::vector<RouteProblem> data;
  for (int i = 0; i < 16; ++i) {
    RouteProblem p;
    p.depot = {0.5, 0.5};
    p.tasks = {{rng.uniform(0.4, 0.6), rng.uniform(0.4, 0.6)}, {0.0, 0.0}};
    p.budget = 1.0;
    data.push_back(p);
  }
  const LowerModel before = model;
  OptimState opt{Adam(1e-3), 1.0, 1.0, 8};
  const EpochStats st = reinforce_lower_epoch(model, baseline, data, opt, rng);
  EXPECT_EQ(st.grad_norm, 0.0);
  EXPECT_EQ(st.mean_cost, -1.0);
  // BN running statistics move in training mode; trainable weights must not.
  for (const auto& p : model.params) {
    if (p.trainable) EXPECT_TRUE(p.value == before.params.get(p.name).value) << p.name;
  }
}

TEST(Reinforce, UpperEpochLeavesLowerLayerUntouched) {
  const TrainConfig c = tiny_config();
  UpperModel upper(c.upper_hyper(), c.vehicles, 1);
  UpperModel base = upper;
  LowerModel lower(c.lower_hyper(), 2);
  const LowerModel lower_before = lower;
  const UpperModel base_before = base;
  Rng rng(3);
  const auto data = random_instances(24, c.tasks, c.vehicles, c.budget, rng);
  OptimState opt{Adam(1e-3), 0.995, 3.0, 12};
  const EpochStats st = reinforce_upper_epoch(upper, base, lower, data, opt, rng);
  EXPECT_TRUE(same_params(lower.params, lower_before.params));
  EXPECT_TRUE(same_params(base.params, base_before.params));
  EXPECT_FALSE(same_params(upper.params, base.params));
  EXPECT_NEAR(opt.adam.lr(), 1e-3 * 0.995, 1e-18);
  EXPECT_EQ(st.layer, "upper");
  EXPECT_GT(st.grad_norm, 0.0);
}

TEST(LowerData, CountsShuffleAndDeterminism) {
  UpperHyper h;
  h.d_h = 8;
  h.heads = 2;
  h.layers = 1;
  h.ff_hidden = 16;
  h.decoder_ff = 16;
  UpperModel upper(h, 4, 9);
  Rng irng(10);
  const auto inst = random_instances(100, 12, 4, 2.0, irng);
  Rng a(11), b(11), c(12);
  const auto da = gen_lower_data(upper, inst, a);
  const auto db = gen_lower_data(upper, inst, b);
  const auto dc = gen_lower_data(upper, inst, c);
  ASSERT_EQ(da.size(), 400u);
  auto key = [](const RouteProblem& p) {
    std::vector<double> k{p.depot.x, p.depot.y, p.budget};
    for (const auto& t : p.tasks) {
      k.push_back(t.x);
      k.push_back(t.y);
    }
    return k;
  };
  std::vector<std::vector<double>> ka, kb, kc, unshuffled;
  for (const auto& p : da) ka.push_back(key(p));
  for (const auto& p : db) kb.push_back(key(p));
  for (const auto& p : dc) kc.push_back(key(p));
  EXPECT_EQ(ka, kb);
  EXPECT_NE(ka, kc);
  const auto alloc = greedy_allocations(upper, inst);
  for (std::size_t i = 0; i < inst.size(); ++i)
    for (const auto& sub : alloc[i].subsets) unshuffled.push_back(key(route_problem(inst[i], sub)));
  std::sort(ka.begin(), ka.end());
  std::sort(kc.begin(), kc.end());
  std::sort(unshuffled.begin(), unshuffled.end());
  EXPECT_EQ(ka, unshuffled);
  EXPECT_EQ(kc, unshuffled);
}

TEST(LowerData, PretrainSizesAroundEvenShare) {
  Rng rng(4);
  const auto ps = pretrain_problems(2000, 80, 4, 2.0, rng);
  std::size_t lo = 100, hi = 0;
  for (const auto& p : ps) {
    lo = std::min(lo, p.tasks.size());
    hi = std::max(hi, p.tasks.size());
    for (const auto& t : p.tasks) {
      EXPECT_GE(t.x, 0.0);
      EXPECT_LT(t.x, 1.0);
    }
  }
  EXPECT_EQ(lo, 15u);
  EXPECT_EQ(hi, 25u);
  Rng r2(4);
  for (const auto& p : pretrain_problems(500, 3, 4, 2.0, r2)) EXPECT_GE(p.tasks.size(), 1u);
}

TEST(Baseline, IdenticalModelIsKept) {
  LowerHyper h;
  h.d_h = 8;
  h.heads = 2;
  h.layers = 1;
  h.ff_hidden = 16;
  LowerModel m(h, 1);
  LowerModel b = m;
  Rng rng(2);
  const auto eval = pretrain_problems(50, 10, 2, 2.0, rng);
  const auto d = baseline_update(m, b, eval, 0.05);
  EXPECT_FALSE(d.replaced);
  EXPECT_EQ(d.baseline_cost, d.candidate_cost);
  EXPECT_THROW(baseline_update(m, b, std::span<const RouteProblem>(eval.data(), 1), 0.05), ArgumentError);
}

TEST(ItsTrain, TinyRunWritesArtifactsAndIsReproducible) {
  const TrainConfig c = tiny_config();
  const auto dir = std::filesystem::temp_directory_path() / "uavsched_trainer_test";
  std::filesystem::remove_all(dir);
  const TrainOutcome a = its_train(c, dir / "a");
  const TrainOutcome b = its_train(c, dir / "b");
  for (const char* f : {"config.txt", "train.csv", "eval.csv", "baseline.csv", "epoch_1.ckpt", "epoch_2.ckpt", "final.ckpt"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "a" / f)) << f;
  }
  for (const char* f : {"train.csv", "eval.csv", "baseline.csv"}) {
    EXPECT_EQ(read_file(dir / "a" / f), read_file(dir / "b" / f)) << f;
  }
  EXPECT_EQ(read_file(dir / "a" / "final.ckpt"), read_file(dir / "b" / "final.ckpt"));
  EXPECT_EQ(a.events, its_schedule(c));
  const std::string train = read_file(dir / "a" / "train.csv");
  EXPECT_EQ(train.substr(0, train.find('\n')), "epoch,layer,mean_cost,grad_norm,lr,baseline_replaced");
  EXPECT_EQ(std::count(train.begin(), train.end(), '\n'), 1 + static_cast<long>(a.stats.size()));
  std::filesystem::remove_all(dir);
}
