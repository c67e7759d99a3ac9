#include "uavsched/encoder.hpp"

#include <cmath>

namespace uavsched {

void EncoderHyper::validate() const {
  if (d_h == 0 || heads == 0 || layers == 0 || ff_hidden == 0) {
    throw ArgumentError("encoder sizes must be positive");
  }
  if (d_h % heads != 0) throw ArgumentError("d_h must be divisible by the head count");
}

Tensor uniform_init(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t = Tensor::matrix(fan_in, fan_out);
  for (auto& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

namespace {

Tensor uniform_bias(std::size_t fan_in, std::size_t width, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t = Tensor::matrix(1, width);
  for (auto& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

void add_batchnorm(ParamStore& store, const std::string& name, std::size_t width) {
  store.add(name + "_gamma", Tensor::matrix(1, width, 1.0));
  store.add(name + "_beta", Tensor::matrix(1, width, 0.0));
  store.add(name + "_mean", Tensor::matrix(1, width, 0.0), false);
  store.add(name + "_var", Tensor::matrix(1, width, 1.0), false);
}

Var apply_batchnorm(Tape& tape, ParamStore& store, const std::string& name, Var x,
                    bool training) {
  ad::BatchNormConfig cfg;
  cfg.training = training;
  return ad::batchnorm(x, tape.param(store.get(name + "_gamma")),
                       tape.param(store.get(name + "_beta")), store.get(name + "_mean"),
                       store.get(name + "_var"), cfg);
}

}  // namespace

void init_encoder(ParamStore& store, const std::string& prefix, const EncoderHyper& h,
                  Rng& rng) {
  h.validate();
  const std::string p = prefix + "/enc";
  store.add(p + "/init_w", uniform_init(2, h.d_h, rng));
  store.add(p + "/init_b", uniform_bias(2, h.d_h, rng));
  if (h.depot_projection) {
    store.add(p + "/depot_w", uniform_init(2, h.d_h, rng));
    store.add(p + "/depot_b", uniform_bias(2, h.d_h, rng));
  }
  for (std::size_t l = 0; l < h.layers; ++l) {
    const std::string lp = p + "/l" + std::to_string(l);
    store.add(lp + "/wq", uniform_init(h.d_h, h.d_h, rng));
    store.add(lp + "/wk", uniform_init(h.d_h, h.d_h, rng));
    store.add(lp + "/wv", uniform_init(h.d_h, h.d_h, rng));
    store.add(lp + "/wo", uniform_init(h.d_h, h.d_h, rng));
    add_batchnorm(store, lp + "/bn1", h.d_h);
    store.add(lp + "/ff_w1", uniform_init(h.d_h, h.ff_hidden, rng));
    store.add(lp + "/ff_b1", uniform_bias(h.d_h, h.ff_hidden, rng));
    store.add(lp + "/ff_w2", uniform_init(h.ff_hidden, h.d_h, rng));
    store.add(lp + "/ff_b2", uniform_bias(h.ff_hidden, h.d_h, rng));
    add_batchnorm(store, lp + "/bn2", h.d_h);
  }
}

Var encode_nodes(Tape& tape, ParamStore& store, const std::string& prefix,
                 const EncoderHyper& h, const Tensor& coords, const Segments& segs,
                 bool training) {
  if (coords.cols() != 2) throw ShapeError("encode_nodes: coordinates must be (rows x 2)");
  const std::string p = prefix + "/enc";
  auto W = [&](const std::string& name) { return tape.param(store.get(name)); };

  Var x = tape.constant(coords);
  Var hcur = ad::add(ad::matmul(x, W(p + "/init_w")), W(p + "/init_b"));
  if (h.depot_projection) {
    std::vector<int> depot_rows;
    for (auto o : segs.offset) depot_rows.push_back(static_cast<int>(o));
    Var depots = ad::gather_rows(x, depot_rows);
    Var hd = ad::add(ad::matmul(depots, W(p + "/depot_w")), W(p + "/depot_b"));
    // Row r of the stacked [tasks; depots] matrix replaces each depot row.
    std::vector<int> pick(coords.rows());
    for (std::size_t r = 0; r < pick.size(); ++r) pick[r] = static_cast<int>(r);
    for (std::size_t s = 0; s < segs.count(); ++s) {
      pick[segs.offset[s]] = static_cast<int>(coords.rows() + s);
    }
    hcur = ad::gather_rows(ad::concat({hcur, hd}, 0), pick);
  }

  for (std::size_t l = 0; l < h.layers; ++l) {
    const std::string lp = p + "/l" + std::to_string(l);
    Var q = ad::matmul(hcur, W(lp + "/wq"));
    Var k = ad::matmul(hcur, W(lp + "/wk"));
    Var v = ad::matmul(hcur, W(lp + "/wv"));
    Var mha = ad::matmul(ad::segment_attention(q, k, v, segs, h.heads), W(lp + "/wo"));
    hcur = apply_batchnorm(tape, store, lp + "/bn1", ad::add(hcur, mha), training);
    Var ff = ad::relu(ad::add(ad::matmul(hcur, W(lp + "/ff_w1")), W(lp + "/ff_b1")));
    ff = ad::add(ad::matmul(ff, W(lp + "/ff_w2")), W(lp + "/ff_b2"));
    hcur = apply_batchnorm(tape, store, lp + "/bn2", ad::add(hcur, ff), training);
  }
  return hcur;
}

}  // namespace uavsched
