#pragma once

#include <string>

#include "uavsched/autodiff.hpp"
#include "uavsched/rng.hpp"

namespace uavsched {

/// Attention encoder shared by both policies: a linear projection of the
/// 2-D coordinates followed by `layers` blocks of
///   h = BN(h + MHA(h)),  h = BN(h + FF(h))
/// with ReLU feed-forward of width ff_hidden.
struct EncoderHyper {
  std::size_t d_h = 128;
  std::size_t heads = 8;
  std::size_t layers = 3;
  std::size_t ff_hidden = 512;
  // Separate input projection for the first row of every segment.
  bool depot_projection = false;

  std::size_t head_dim() const { return d_h / heads; }
  void validate() const;  // throws ArgumentError
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weight matrix.
Tensor uniform_init(std::size_t fan_in, std::size_t fan_out, Rng& rng);

void init_encoder(ParamStore& store, const std::string& prefix, const EncoderHyper& hyper,
                  Rng& rng);

/// coords: (rows x 2), every segment lists its depot first.
/// Returns (rows x d_h) node embeddings.
Var encode_nodes(Tape& tape, ParamStore& store, const std::string& prefix,
                 const EncoderHyper& hyper, const Tensor& coords, const Segments& segs,
                 bool training);

}  // namespace uavsched
