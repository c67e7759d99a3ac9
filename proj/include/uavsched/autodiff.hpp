#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <unordered_map>
#include <vector>

#include "uavsched/error.hpp"
#include "uavsched/params.hpp"
#include "uavsched/tensor.hpp"

namespace uavsched {

// masked_softmax received a row with every entry masked.
struct MaskError : ContractError {
  using ContractError::ContractError;
};

class Tape;

/// Handle to a node on a Tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Parameter adjoints keyed by Parameter::uid.
class Grad {
 public:
  const Tensor* find(const Parameter& p) const;
  Tensor& at(const Parameter& p);  // zero-initialized on first access
  void accumulate(const Parameter& p, const Tensor& g);

  double norm() const;
  void scale(double factor);
  bool all_finite() const;
  std::size_t size() const { return by_uid_.size(); }

 private:
  std::unordered_map<std::uint64_t, Tensor> by_uid_;
  std::unordered_map<std::uint64_t, Tensor::Shape> shapes_;
};

/// Append-only record of a forward computation.
///
/// With recording off, nodes keep their values but no backward closures,
/// which is the inference path. Node references stay valid while the tape
/// grows (std::deque storage).
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int self)>;

  explicit Tape(bool recording = true) : recording_(recording) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }

  Var constant(Tensor value);
  // Leaf for a parameter; repeated calls return the same node.
  Var param(Parameter& p);

  const Tensor& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

  // Reverse sweep from a one-element loss. Throws ArgumentError otherwise.
  Grad backward(Var loss);

  // --- interface for op implementations
  Var push(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var push(Tensor value, const std::vector<Var>& inputs, BackwardFn fn);
  const Tensor& adjoint(int id) const { return adj_[static_cast<std::size_t>(id)]; }
  Tensor& adjoint_acc(int id);  // allocates zeros on first use

 private:
  struct Node {
    Tensor value;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };
  bool recording_;
  std::deque<Node> nodes_;
  std::deque<Tensor> adj_;
  std::unordered_map<std::uint64_t, int> param_nodes_;
};

/// Row ranges of a ragged batch: segment s spans rows
/// [offset[s], offset[s] + length[s]).
struct Segments {
  std::vector<std::size_t> offset;
  std::vector<std::size_t> length;

  static Segments uniform(std::size_t count, std::size_t length);
  static Segments from_lengths(const std::vector<std::size_t>& lengths);
  std::size_t count() const { return offset.size(); }
  std::size_t total_rows() const;
  std::size_t max_length() const;
};

namespace ad {

Var matmul(Var a, Var b);
// Same-shape sum, or row broadcast when b is 1 x cols.
Var add(Var a, Var b);
Var mul(Var a, Var b);  // elementwise, same shape
Var scale(Var a, double factor);
Var relu(Var a);
Var tanh(Var a);
Var log(Var a);

// axis 1: rows normalize; axis 0: columns normalize.
Var softmax(Var a, int axis = 1);
// Nonzero mask entries are excluded and get probability exactly 0.
Var masked_softmax(Var a, const Tensor& mask, int axis = 1);

struct BatchNormConfig {
  bool training = true;
  double momentum = 0.1;
  double eps = 1e-5;
};
// Per-column normalization over all rows with affine gamma/beta (1 x cols).
// Training mode updates the running statistics in place.
Var batchnorm(Var x, Var gamma, Var beta, Parameter& running_mean,
              Parameter& running_var, const BatchNormConfig& cfg);

// Row g of the output is the elementwise max over rows groups[g] of x.
Var maxpool(Var x, const std::vector<std::vector<int>>& groups);

Var concat(const std::vector<Var>& parts, int axis);
Var gather_rows(Var x, const std::vector<int>& rows);
// out[r, 0] = x[r, cols[r]]
Var pick(Var x, const std::vector<int>& cols);
Var sum(Var x);
Var mean(Var x);
Var reshape(Var x, Tensor::Shape shape);

Var segment_mean(Var x, const Segments& segs);

// Scaled dot-product self-attention inside each segment, `heads` heads
// splitting the columns of q/k/v. Fused equivalent of
// softmax(q_h k_h^T / sqrt(d/heads)) v_h per segment and head.
Var segment_attention(Var q, Var k, Var v, const Segments& segs, std::size_t heads);

// out[s, p] = q[s] . k[offset[s] + p] for p < length[s], 0 beyond (width
// columns in total).
Var segment_scores(Var q, Var k, const Segments& segs, std::size_t width);

}  // namespace ad
}  // namespace uavsched
