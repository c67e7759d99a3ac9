#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "uavsched/error.hpp"
#include "uavsched/gradcheck.hpp"
#include "uavsched/upper_policy.hpp"

using namespace uavsched;

namespace {

UpperHyper small_hyper() {
  UpperHyper h;
  h.d_h = 8;
  h.heads = 2;
  h.layers = 1;
  h.ff_hidden = 16;
  h.decoder_ff = 16;
  return h;
}

RowMatrix as_matrix(const Tensor& t) {
  RowMatrix m(t.rows(), t.cols());
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t(r, c);
  return m;
}

std::vector<Parameter*> trainable(ParamStore& s) {
  std::vector<Parameter*> out;
  for (auto& p : s)
    if (p.trainable) out.push_back(&p);
  return out;
}

}  // namespace

TEST(UpperEncode, OutputShapeAtPaperWidth) {
  UpperModel model(UpperHyper{}, 4, 1);
  const Instance inst = generate_instance(3, 80, 4, 2.0);
  const Tensor emb = upper_embeddings(model, inst);
  EXPECT_EQ(emb.rows(), 81u);
  EXPECT_EQ(emb.cols(), 128u);
  EXPECT_TRUE(emb.all_finite());
}

TEST(UpperEncode, TaskPermutationPermutesRows) {
  for (bool training : {false, true}) {
    UpperModel a(small_hyper(), 3, 7);
    UpperModel b = a;
    const Instance inst = generate_instance(9, 6, 3, 2.0);
    Instance perm = inst;
    const std::vector<int> p = {3, 0, 5, 1, 4, 2};  // perm.tasks[i] = inst.tasks[p[i]]
    for (std::size_t i = 0; i < p.size(); ++i) perm.tasks[i] = inst.tasks[static_cast<std::size_t>(p[i])];
    Tape ta(false), tb(false);
    const Tensor ea = upper_encode(ta, a, std::span<const Instance>(&inst, 1), training).value();
    const Tensor eb = upper_encode(tb, b, std::span<const Instance>(&perm, 1), training).value();
    for (std::size_t c = 0; c < ea.cols(); ++c) EXPECT_NEAR(ea(0, c), eb(0, c), 1e-12);
    for (std::size_t i = 0; i < p.size(); ++i)
      for (std::size_t c = 0; c < ea.cols(); ++c)
        EXPECT_NEAR(eb(i + 1, c), ea(static_cast<std::size_t>(p[i]) + 1, c), 1e-12) << training;
  }
}

TEST(UpperEncode, IdenticalTasksGiveIdenticalRows) {
  UpperModel model(small_hyper(), 2, 3);
  Instance inst = generate_instance(4, 5, 2, 2.0);
  inst.tasks[3] = inst.tasks[1];
  const Tensor emb = upper_embeddings(model, inst);
  for (std::size_t c = 0; c < emb.cols(); ++c) EXPECT_NEAR(emb(2, c), emb(4, c), 1e-12);
}

TEST(UpperDecode, StepIsADistribution) {
  UpperModel model(small_hyper(), 4, 5);
  const Instance inst = generate_instance(6, 8, 4, 2.0);
  const Tensor emb = upper_embeddings(model, inst);
  const auto p = decode_step(model, emb, {{1, 3}, {0}, {2}, {0}}, 4);
  ASSERT_EQ(p.size(), 4u);
  double s = 0;
  for (double x : p) {
    EXPECT_GT(x, 0.0);
    s += x;
  }
  EXPECT_NEAR(s, 1.0, 1e-12);
  EXPECT_THROW(decode_step(model, emb, {{1}, {}, {2}, {0}}, 4), ContractError);
}

TEST(UpperDecode, ZeroParametersGiveUniform) {
  UpperModel model(small_hyper(), 5, 5);
  for (auto& p : model.params) std::fill(p.value.values().begin(), p.value.values().end(), 0.0);
  const Instance inst = generate_instance(6, 8, 5, 2.0);
  const Tensor emb = upper_embeddings(model, inst);
  for (double x : decode_step(model, emb, {{1}, {0}, {2}, {0}, {5, 6}}, 7)) EXPECT_NEAR(x, 0.2, 1e-15);
}

// Recomputes the decoder step with plain Eigen, outside the tape.
TEST(UpperDecode, MatchesStraightLineRecomputation) {
  UpperHyper h = small_hyper();
  UpperModel model(h, 4, 11);
  // Nonzero biases so every term contributes.
  Rng rng(12);
  for (const char* n : {"upper/dec/b1", "upper/dec/ff_b1", "upper/dec/ff_b2", "upper/dec/b2"})
    for (auto& v : model.params.get(n).value.values()) v = rng.uniform(-0.5, 0.5);
  const Instance inst = generate_instance(13, 9, 4, 2.0);
  const Tensor emb_t = upper_embeddings(model, inst);
  const RowMatrix emb = as_matrix(emb_t);
  const std::vector<std::vector<int>> ctx = {{2, 5, 7}, {0}, {1}, {3, 4}};
  const int current = 8;

  const auto d = static_cast<Eigen::Index>(h.d_h);
  Eigen::RowVectorXd pooled(4 * d);
  for (int k = 0; k < 4; ++k) {
    Eigen::RowVectorXd m = Eigen::RowVectorXd::Constant(d, -INFINITY);
    for (int row : ctx[static_cast<std::size_t>(k)]) m = m.cwiseMax(emb.row(row));
    pooled.segment(k * d, d) = m;
  }
  auto P = [&](const char* n) { return as_matrix(model.params.get(n).value); };
  Eigen::RowVectorXd hts = pooled * P("upper/dec/w1") + P("upper/dec/b1");
  Eigen::RowVectorXd hid = (hts * P("upper/dec/ff_w1") + P("upper/dec/ff_b1")).cwiseMax(0.0);
  hts = hid * P("upper/dec/ff_w2") + P("upper/dec/ff_b2");
  Eigen::RowVectorXd joined(2 * d);
  joined << hts, emb.row(current);
  Eigen::RowVectorXd logits = joined * P("upper/dec/w2") + P("upper/dec/b2");
  Eigen::RowVectorXd e = (logits.array() - logits.maxCoeff()).exp();
  e /= e.sum();

  const auto p = decode_step(model, emb_t, ctx, current);
  for (int k = 0; k < 4; ++k) EXPECT_NEAR(p[static_cast<std::size_t>(k)], e(k), 1e-13);
}

TEST(UpperAllocate, GreedyIsDeterministic) {
  UpperModel model(small_hyper(), 3, 21);
  const Instance inst = generate_instance(22, 15, 3, 2.0);
  const auto a = allocate(model, inst, DecodeMode::greedy());
  const auto b = allocate(model, inst, DecodeMode::greedy());
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].allocation, b[0].allocation);
  EXPECT_EQ(a[0].step_log_probs, b[0].step_log_probs);
  EXPECT_EQ(a[0].step_log_probs.size(), 15u);
}

TEST(UpperAllocate, SamplingIsSeeded) {
  UpperModel model(small_hyper(), 3, 21);
  const Instance inst = generate_instance(22, 15, 3, 2.0);
  const auto a = allocate(model, inst, DecodeMode::sample(128, 5));
  const auto b = allocate(model, inst, DecodeMode::sample(128, 5));
  ASSERT_EQ(a.size(), 128u);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].allocation, b[i].allocation);
    any_diff |= !(a[i].allocation == a[0].allocation);
  }
  EXPECT_TRUE(any_diff);
}

TEST(UpperAllocate, GreedyMatchesArgmaxOfStepProbabilities) {
  UpperModel model(small_hyper(), 4, 31);
  const Instance inst = generate_instance(32, 10, 4, 2.0);
  const auto res = allocate(model, inst, DecodeMode::greedy());
  const Tensor emb = upper_embeddings(model, inst);
  std::vector<std::vector<int>> ctx(4, std::vector<int>{kDepotSentinel});
  AllocationState s = reset(inst);
  while (!s.terminal()) {
    const int task = s.current_task();
    const auto p = decode_step(model, emb, ctx, task);
    const int k = argmax(p);
    auto& c = ctx[static_cast<std::size_t>(k)];
    if (c.size() == 1 && c[0] == kDepotSentinel) c.clear();
    c.push_back(task);
    apply_step(s, k + 1);
  }
  EXPECT_EQ(finalize(s), res[0].allocation);
}

TEST(Decoding, ArgmaxTiesGoLow) {
  EXPECT_EQ(argmax(std::vector<double>{0.2, 0.4, 0.4}), 1);
  EXPECT_EQ(argmax(std::vector<double>{0.25, 0.25, 0.25, 0.25}), 0);
}

TEST(Decoding, ArgmaxInvariantUnderMonotoneTransform) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> p(5), q(5);
    for (std::size_t j = 0; j < 5; ++j) {
      p[j] = rng.uniform();
      q[j] = std::exp(3.0 * p[j]) + 7.0;
    }
    EXPECT_EQ(argmax(p), argmax(q));
  }
}

TEST(Decoding, SamplingSkipsZeroMass) {
  Rng rng(8);
  const std::vector<double> p = {0.0, 0.5, 0.0, 0.5, 0.0};
  for (int i = 0; i < 1000; ++i) {
    const int k = sample_index(p, rng);
    EXPECT_TRUE(k == 1 || k == 3);
  }
}

TEST(Decoding, ModeParsing) {
  EXPECT_EQ(DecodeMode::parse("greedy").kind, DecodeKind::Greedy);
  const DecodeMode m = DecodeMode::parse("sample:128", 4);
  EXPECT_EQ(m.kind, DecodeKind::Sample);
  EXPECT_EQ(m.samples, 128);
  EXPECT_EQ(m.to_string(), "sample:128");
  EXPECT_THROW(DecodeMode::parse("sample:0"), ArgumentError);
  EXPECT_THROW(DecodeMode::parse("beam"), ArgumentError);
}

TEST(UpperCheckpoint, RoundTripKeepsOutputs) {
  UpperModel model(small_hyper(), 3, 41);
  Checkpoint ck;
  save_model(ck, model);
  UpperModel back = load_upper(ck);
  EXPECT_EQ(back.n_vehicles, 3);
  EXPECT_EQ(back.hyper.d_h, 8u);
  const Instance inst = generate_instance(42, 9, 3, 2.0);
  EXPECT_EQ(allocate(model, inst, DecodeMode::sample(4, 1))[3].step_log_probs,
            allocate(back, inst, DecodeMode::sample(4, 1))[3].step_log_probs);
  EXPECT_THROW(load_upper(Checkpoint{}), FormatError);
}

// Log-probability of a fixed action sequence, differentiated through the
// decoder and the encoder (training-mode batchnorm over a batch of two).
TEST(UpperGradcheck, LogProbabilityOfFixedActions) {
  UpperModel model(small_hyper(), 3, 51);
  std::vector<Instance> batch = {generate_instance(52, 5, 3, 2.0), generate_instance(53, 5, 3, 2.0)};
  const std::vector<std::vector<int>> forced = {{1, 3, 3, 2, 1}, {2, 2, 1, 3, 3}};
  UpperRolloutOptions opt;
  opt.forced = &forced;
  auto loss = [&](Tape& t) {
    UpperRollout r = rollout_allocations(t, model, batch, true, opt);
    return ad::scale(ad::sum(r.log_prob_sum), 1e-3);
  };
  const auto res = gradcheck_detailed(loss, trainable(model.params), {});
  EXPECT_LT(res.max_rel_error, 1e-4) << res.worst_param << "[" << res.worst_index << "] "
                                     << res.worst_analytic << " vs " << res.worst_numeric;
  EXPECT_GT(res.checked, 100u);
}
