#include "uavsched/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace uavsched {

const Tensor& Var::value() const { return tape_->value(id_); }

// ------------------------------------------------------------------ Grad

const Tensor* Grad::find(const Parameter& p) const {
  auto it = by_uid_.find(p.uid);
  return it == by_uid_.end() ? nullptr : &it->second;
}

Tensor& Grad::at(const Parameter& p) {
  auto it = by_uid_.find(p.uid);
  if (it == by_uid_.end()) it = by_uid_.emplace(p.uid, Tensor(p.value.shape(), 0.0)).first;
  return it->second;
}

void Grad::accumulate(const Parameter& p, const Tensor& g) {
  Tensor& dst = at(p);
  if (dst.shape() != g.shape()) throw ShapeError("gradient shape mismatch for " + p.name);
  dst.mat() += g.mat();
}

double Grad::norm() const {
  // Sum in a fixed order so results do not depend on hash iteration.
  std::vector<std::uint64_t> keys;
  keys.reserve(by_uid_.size());
  for (const auto& kv : by_uid_) keys.push_back(kv.first);
  std::sort(keys.begin(), keys.end());
  double s = 0.0;
  for (auto k : keys) s += by_uid_.at(k).mat().squaredNorm();
  return std::sqrt(s);
}

void Grad::scale(double factor) {
  for (auto& kv : by_uid_) kv.second.mat() *= factor;
}

bool Grad::all_finite() const {
  return std::all_of(by_uid_.begin(), by_uid_.end(),
                     [](const auto& kv) { return kv.second.all_finite(); });
}

// ------------------------------------------------------------------ Tape

Var Tape::constant(Tensor value) {
  nodes_.push_back({std::move(value), false, nullptr, nullptr});
  adj_.emplace_back();
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(p.uid); it != param_nodes_.end()) {
    return Var(this, it->second);
  }
  nodes_.push_back({p.value, recording_ && p.trainable, nullptr, &p});
  adj_.emplace_back();
  const int id = static_cast<int>(nodes_.size() - 1);
  param_nodes_.emplace(p.uid, id);
  return Var(this, id);
}

Var Tape::push(Tensor value, const std::vector<Var>& inputs, BackwardFn fn) {
  bool rg = false;
  if (recording_) {
    for (const auto& in : inputs) {
      if (&in.tape() != this) throw ContractError("mixing nodes of different tapes");
      rg = rg || requires_grad(in.id());
    }
  }
  nodes_.push_back({std::move(value), rg, rg ? std::move(fn) : nullptr, nullptr});
  adj_.emplace_back();
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::push(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return push(std::move(value), std::vector<Var>(inputs), std::move(fn));
}

Tensor& Tape::adjoint_acc(int id) {
  Tensor& a = adj_[static_cast<std::size_t>(id)];
  if (a.empty()) a = Tensor(value(id).shape(), 0.0);
  return a;
}

Grad Tape::backward(Var loss) {
  if (&loss.tape() != this) throw ArgumentError("loss belongs to another tape");
  if (loss.value().size() != 1) {
    throw ArgumentError("backward needs a scalar loss, got shape " +
                        shape_string(loss.value().shape()));
  }
  for (auto& a : adj_) a = Tensor();
  adjoint_acc(loss.id()).fill(1.0);
  for (int id = loss.id(); id >= 0; --id) {
    auto& node = nodes_[static_cast<std::size_t>(id)];
    if (node.backward && !adj_[static_cast<std::size_t>(id)].empty()) node.backward(*this, id);
  }
  Grad g;
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    const auto& node = nodes_[id];
    if (!node.param || !node.requires_grad) continue;
    Tensor& dst = g.at(*node.param);
    if (!adj_[id].empty()) dst.mat() += adj_[id].mat();
  }
  return g;
}

// -------------------------------------------------------------- Segments

Segments Segments::uniform(std::size_t count, std::size_t length) {
  Segments s;
  for (std::size_t i = 0; i < count; ++i) {
    s.offset.push_back(i * length);
    s.length.push_back(length);
  }
  return s;
}

Segments Segments::from_lengths(const std::vector<std::size_t>& lengths) {
  Segments s;
  std::size_t off = 0;
  for (auto len : lengths) {
    s.offset.push_back(off);
    s.length.push_back(len);
    off += len;
  }
  return s;
}

std::size_t Segments::total_rows() const {
  return std::accumulate(length.begin(), length.end(), std::size_t{0});
}

std::size_t Segments::max_length() const {
  return length.empty() ? 0 : *std::max_element(length.begin(), length.end());
}

// ------------------------------------------------------------------- ops

namespace ad {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

bool needs(const Tape& t, Var v) { return t.requires_grad(v.id()); }

using Block = Eigen::Map<RowMatrix, 0, Eigen::OuterStride<>>;
using ConstBlock = Eigen::Map<const RowMatrix, 0, Eigen::OuterStride<>>;

ConstBlock block(const Tensor& t, std::size_t row, std::size_t col, std::size_t nrows,
                 std::size_t ncols) {
  return ConstBlock(t.data() + row * t.cols() + col, static_cast<Eigen::Index>(nrows),
                    static_cast<Eigen::Index>(ncols),
                    Eigen::OuterStride<>(static_cast<Eigen::Index>(t.cols())));
}

Block block(Tensor& t, std::size_t row, std::size_t col, std::size_t nrows,
            std::size_t ncols) {
  return Block(t.data() + row * t.cols() + col, static_cast<Eigen::Index>(nrows),
               static_cast<Eigen::Index>(ncols),
               Eigen::OuterStride<>(static_cast<Eigen::Index>(t.cols())));
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = a.tape();
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require(A.cols() == B.rows(), "matmul: " + shape_string(A.shape()) + " x " +
                                    shape_string(B.shape()));
  Tensor out = Tensor::matrix(A.rows(), B.cols());
  out.mat().noalias() = A.mat() * B.mat();
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(out), {a, b}, [ia, ib](Tape& tp, int self) {
    const Tensor& g = tp.adjoint(self);
    if (tp.requires_grad(ia)) tp.adjoint_acc(ia).mat().noalias() += g.mat() * tp.value(ib).mat().transpose();
    if (tp.requires_grad(ib)) tp.adjoint_acc(ib).mat().noalias() += tp.value(ia).mat().transpose() * g.mat();
  });
}

Var add(Var a, Var b) {
  Tape& t = a.tape();
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const bool broadcast = A.shape() != B.shape();
  if (broadcast) {
    require(B.rows() == 1 && B.cols() == A.cols(),
            "add: " + shape_string(A.shape()) + " + " + shape_string(B.shape()));
  }
  Tensor out = A;
  if (broadcast) {
    out.mat().rowwise() += B.mat().row(0);
  } else {
    out.mat() += B.mat();
  }
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(out), {a, b}, [ia, ib, broadcast](Tape& tp, int self) {
    const Tensor& g = tp.adjoint(self);
    if (tp.requires_grad(ia)) tp.adjoint_acc(ia).mat() += g.mat();
    if (tp.requires_grad(ib)) {
      if (broadcast) {
        tp.adjoint_acc(ib).mat() += g.mat().colwise().sum();
      } else {
        tp.adjoint_acc(ib).mat() += g.mat();
      }
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = a.tape();
  require(a.value().shape() == b.value().shape(), "mul: shapes differ");
  Tensor out = a.value();
  out.mat().array() *= b.value().mat().array();
  const int ia = a.id(), ib = b.id();
  return t.push(std::move(out), {a, b}, [ia, ib](Tape& tp, int self) {
    const Tensor& g = tp.adjoint(self);
    if (tp.requires_grad(ia)) tp.adjoint_acc(ia).mat().array() += g.mat().array() * tp.value(ib).mat().array();
    if (tp.requires_grad(ib)) tp.adjoint_acc(ib).mat().array() += g.mat().array() * tp.value(ia).mat().array();
  });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  out.mat() *= factor;
  const int ia = a.id();
  return a.tape().push(std::move(out), {a}, [ia, factor](Tape& tp, int self) {
    tp.adjoint_acc(ia).mat() += factor * tp.adjoint(self).mat();
  });
}

Var relu(Var a) {
  Tensor out = a.value();
  out.mat() = out.mat().cwiseMax(0.0);
  const int ia = a.id();
  return a.tape().push(std::move(out), {a}, [ia](Tape& tp, int self) {
    const Tensor& x = tp.value(ia);
    const Tensor& g = tp.adjoint(self);
    Tensor& dx = tp.adjoint_acc(ia);
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] > 0.0) dx[i] += g[i];
  });
}

Var tanh(Var a) {
  Tensor out = a.value();
  out.mat() = out.mat().array().tanh().matrix();
  const int ia = a.id();
  return a.tape().push(std::move(out), {a}, [ia](Tape& tp, int self) {
    const Tensor& y = tp.value(self);
    tp.adjoint_acc(ia).mat().array() +=
        tp.adjoint(self).mat().array() * (1.0 - y.mat().array().square());
  });
}

Var log(Var a) {
  Tensor out = a.value();
  out.mat() = out.mat().array().log().matrix();
  const int ia = a.id();
  return a.tape().push(std::move(out), {a}, [ia](Tape& tp, int self) {
    tp.adjoint_acc(ia).mat().array() +=
        tp.adjoint(self).mat().array() / tp.value(ia).mat().array();
  });
}

namespace {

// Softmax along rows of a (rows x cols) view; `mask` may be null.
Tensor softmax_rows(const Tensor& x, const Tensor* mask) {
  Tensor out(x.shape(), 0.0);
  const std::size_t r = x.rows(), c = x.cols();
  for (std::size_t i = 0; i < r; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) {
      if (mask && (*mask)(i, j) != 0.0) continue;
      mx = std::max(mx, x(i, j));
    }
    if (mx == -std::numeric_limits<double>::infinity()) {
      throw MaskError("masked_softmax: row " + std::to_string(i) + " is fully masked");
    }
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      if (mask && (*mask)(i, j) != 0.0) continue;
      const double e = std::exp(x(i, j) - mx);
      out(i, j) = e;
      z += e;
    }
    for (std::size_t j = 0; j < c; ++j) out(i, j) /= z;
  }
  return out;
}

Var softmax_impl(Var a, const Tensor* mask, int axis) {
  const Tensor& x = a.value();
  require(x.ndim() == 2, "softmax expects a matrix");
  if (mask) require(mask->shape() == x.shape(), "masked_softmax: mask shape differs");
  if (axis != 0 && axis != 1) throw ArgumentError("softmax axis must be 0 or 1");

  Tensor out;
  if (axis == 1) {
    out = softmax_rows(x, mask);
  } else {
    Tensor xt = Tensor::matrix(x.cols(), x.rows());
    xt.mat() = x.mat().transpose();
    Tensor mt;
    if (mask) {
      mt = Tensor::matrix(x.cols(), x.rows());
      mt.mat() = mask->mat().transpose();
    }
    Tensor yt = softmax_rows(xt, mask ? &mt : nullptr);
    out = Tensor::matrix(x.rows(), x.cols());
    out.mat() = yt.mat().transpose();
  }
  const int ia = a.id();
  return a.tape().push(std::move(out), {a}, [ia, axis](Tape& tp, int self) {
    const ConstMatrixMap y = tp.value(self).mat();
    const ConstMatrixMap g = tp.adjoint(self).mat();
    MatrixMap dx = tp.adjoint_acc(ia).mat();
    const Eigen::ArrayXXd prod = y.array() * g.array();
    if (axis == 1) {
      const Eigen::ArrayXd s = prod.rowwise().sum();
      dx.array() += y.array() * (g.array().colwise() - s);
    } else {
      const Eigen::Array<double, 1, Eigen::Dynamic> s = prod.colwise().sum();
      dx.array() += y.array() * (g.array().rowwise() - s);
    }
  });
}

}  // namespace

Var softmax(Var a, int axis) { return softmax_impl(a, nullptr, axis); }

Var masked_softmax(Var a, const Tensor& mask, int axis) {
  return softmax_impl(a, &mask, axis);
}

Var batchnorm(Var x, Var gamma, Var beta, Parameter& running_mean,
              Parameter& running_var, const BatchNormConfig& cfg) {
  const Tensor& X = x.value();
  const std::size_t n = X.rows(), c = X.cols();
  require(gamma.value().size() == c && beta.value().size() == c,
          "batchnorm: affine parameters must have one entry per column");
  require(running_mean.value.size() == c && running_var.value.size() == c,
          "batchnorm: running statistics size mismatch");
  require(n >= 1, "batchnorm: empty batch");

  Eigen::RowVectorXd mu(c), inv_std(c);
  if (cfg.training) {
    mu = X.mat().colwise().mean();
    const RowMatrix centered = X.mat().rowwise() - mu;
    const Eigen::RowVectorXd var = centered.array().square().colwise().sum().matrix() /
                                   static_cast<double>(n);
    inv_std = (var.array() + cfg.eps).rsqrt().matrix();
    const double unbias = n > 1 ? static_cast<double>(n) / static_cast<double>(n - 1) : 1.0;
    for (std::size_t j = 0; j < c; ++j) {
      running_mean.value[j] = (1.0 - cfg.momentum) * running_mean.value[j] + cfg.momentum * mu[static_cast<Eigen::Index>(j)];
      running_var.value[j] = (1.0 - cfg.momentum) * running_var.value[j] +
                             cfg.momentum * var[static_cast<Eigen::Index>(j)] * unbias;
    }
  } else {
    mu = running_mean.value.mat().reshaped(1, static_cast<Eigen::Index>(c));
    inv_std = (running_var.value.mat().reshaped(1, static_cast<Eigen::Index>(c)).array() + cfg.eps)
                  .rsqrt()
                  .matrix();
  }

  Tensor xhat(X.shape());
  xhat.mat() = (X.mat().rowwise() - mu).array().rowwise() * inv_std.array();
  const Eigen::RowVectorXd gv = gamma.value().mat().reshaped(1, static_cast<Eigen::Index>(c));
  const Eigen::RowVectorXd bv = beta.value().mat().reshaped(1, static_cast<Eigen::Index>(c));
  Tensor out(X.shape());
  out.mat() = (xhat.mat().array().rowwise() * gv.array()).rowwise() + bv.array();

  const int ix = x.id(), ig = gamma.id(), ib = beta.id();
  const bool training = cfg.training;
  return x.tape().push(
      std::move(out), {x, gamma, beta},
      [ix, ig, ib, training, xhat = std::move(xhat), inv_std](Tape& tp, int self) {
        const auto g = tp.adjoint(self).mat();
        const auto cols = static_cast<Eigen::Index>(xhat.cols());
        if (tp.requires_grad(ig)) {
          const Eigen::RowVectorXd dg = (g.array() * xhat.mat().array()).colwise().sum();
          tp.adjoint_acc(ig).mat() += dg.reshaped(tp.value(ig).rows(), tp.value(ig).cols());
        }
        if (tp.requires_grad(ib)) {
          const Eigen::RowVectorXd db = g.colwise().sum();
          tp.adjoint_acc(ib).mat() += db.reshaped(tp.value(ib).rows(), tp.value(ib).cols());
        }
        if (tp.requires_grad(ix)) {
          const Eigen::RowVectorXd gv =
              tp.value(ig).mat().reshaped(1, cols);
          const RowMatrix dxhat = g.array().rowwise() * gv.array();
          if (training) {
            const double nn = static_cast<double>(xhat.rows());
            const Eigen::RowVectorXd s1 = dxhat.colwise().sum();
            const Eigen::RowVectorXd s2 = (dxhat.array() * xhat.mat().array()).colwise().sum();
            RowMatrix dx = (dxhat * nn).rowwise() - s1;
            dx.array() -= xhat.mat().array().rowwise() * s2.array();
            dx.array().rowwise() *= (inv_std.array() / nn);
            tp.adjoint_acc(ix).mat() += dx;
          } else {
            tp.adjoint_acc(ix).mat().array() += dxhat.array().rowwise() * inv_std.array();
          }
        }
      });
}

Var maxpool(Var x, const std::vector<std::vector<int>>& groups) {
  const Tensor& X = x.value();
  const std::size_t c = X.cols();
  Tensor out = Tensor::matrix(groups.size(), c);
  std::vector<int> arg(groups.size() * c);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) throw ContractError("maxpool: empty group " + std::to_string(g));
    for (std::size_t j = 0; j < c; ++j) {
      int best = groups[g][0];
      for (int r : groups[g]) {
        if (r < 0 || static_cast<std::size_t>(r) >= X.rows()) throw IndexError("maxpool: row out of range");
        if (X(static_cast<std::size_t>(r), j) > X(static_cast<std::size_t>(best), j)) best = r;
      }
      out(g, j) = X(static_cast<std::size_t>(best), j);
      arg[g * c + j] = best;
    }
  }
  const int ix = x.id();
  return x.tape().push(std::move(out), {x}, [ix, arg = std::move(arg), c](Tape& tp, int self) {
    const Tensor& g = tp.adjoint(self);
    Tensor& dx = tp.adjoint_acc(ix);
    for (std::size_t i = 0; i < arg.size(); ++i) {
      dx(static_cast<std::size_t>(arg[i]), i % c) += g[i];
    }
  });
}

Var concat(const std::vector<Var>& parts, int axis) {
  if (parts.empty()) throw ArgumentError("concat of nothing");
  if (axis != 0 && axis != 1) throw ArgumentError("concat axis must be 0 or 1");
  const std::size_t r0 = parts[0].rows(), c0 = parts[0].cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (axis == 1) {
      require(p.rows() == r0, "concat(axis=1): row counts differ");
      total += p.cols();
    } else {
      require(p.cols() == c0, "concat(axis=0): column counts differ");
      total += p.rows();
    }
  }
  Tensor out = axis == 1 ? Tensor::matrix(r0, total) : Tensor::matrix(total, c0);
  std::vector<int> ids;
  std::vector<std::size_t> starts;
  std::size_t at = 0;
  for (const auto& p : parts) {
    const Tensor& v = p.value();
    if (axis == 1) {
      block(out, 0, at, r0, v.cols()) = v.mat();
    } else {
      block(out, at, 0, v.rows(), c0) = v.mat();
    }
    ids.push_back(p.id());
    starts.push_back(at);
    at += axis == 1 ? v.cols() : v.rows();
  }
  return parts[0].tape().push(
      std::move(out), parts, [ids = std::move(ids), starts = std::move(starts), axis](Tape& tp, int self) {
        const Tensor& g = tp.adjoint(self);
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!tp.requires_grad(ids[k])) continue;
          const Tensor& v = tp.value(ids[k]);
          if (axis == 1) {
            tp.adjoint_acc(ids[k]).mat() += block(g, 0, starts[k], v.rows(), v.cols());
          } else {
            tp.adjoint_acc(ids[k]).mat() += block(g, starts[k], 0, v.rows(), v.cols());
          }
        }
      });
}

Var gather_rows(Var x, const std::vector<int>& rows) {
  const Tensor& X = x.value();
  const std::size_t c = X.cols();
  Tensor out = Tensor::matrix(rows.size(), c);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<std::size_t>(rows[i]);
    if (rows[i] < 0 || r >= X.rows()) throw IndexError("gather_rows: row out of range");
    std::copy_n(X.data() + r * c, c, out.data() + i * c);
  }
  const int ix = x.id();
  return x.tape().push(std::move(out), {x}, [ix, rows, c](Tape& tp, int self) {
    const Tensor& g = tp.adjoint(self);
    Tensor& dx = tp.adjoint_acc(ix);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double* dst = dx.data() + static_cast<std::size_t>(rows[i]) * c;
      const double* src = g.data() + i * c;
      for (std::size_t j = 0; j < c; ++j) dst[j] += src[j];
    }
  });
}

Var pick(Var x, const std::vector<int>& cols) {
  const Tensor& X = x.value();
  require(cols.size() == X.rows(), "pick: one column index per row required");
  Tensor out = Tensor::matrix(X.rows(), 1);
  for (std::size_t r = 0; r < cols.size(); ++r) {
    if (cols[r] < 0 || static_cast<std::size_t>(cols[r]) >= X.cols()) throw IndexError("pick: column out of range");
    out[r] = X(r, static_cast<std::size_t>(cols[r]));
  }
  const int ix = x.id();
  return x.tape().push(std::move(out), {x}, [ix, cols](Tape& tp, int self) {
    const Tensor& g = tp.adjoint(self);
    Tensor& dx = tp.adjoint_acc(ix);
    for (std::size_t r = 0; r < cols.size(); ++r) dx(r, static_cast<std::size_t>(cols[r])) += g[r];
  });
}

Var sum(Var x) {
  const int ix = x.id();
  return x.tape().push(Tensor::scalar(x.value().mat().sum()), {x}, [ix](Tape& tp, int self) {
    tp.adjoint_acc(ix).mat().array() += tp.adjoint(self)[0];
  });
}

Var mean(Var x) {
  const double n = static_cast<double>(x.value().size());
  return scale(sum(x), 1.0 / n);
}

Var reshape(Var x, Tensor::Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  const int ix = x.id();
  return x.tape().push(std::move(out), {x}, [ix](Tape& tp, int self) {
    Tensor& dx = tp.adjoint_acc(ix);
    const Tensor& g = tp.adjoint(self);
    for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
  });
}

Var segment_mean(Var x, const Segments& segs) {
  const Tensor& X = x.value();
  require(segs.total_rows() <= X.rows(), "segment_mean: segments exceed rows");
  const std::size_t c = X.cols();
  Tensor out = Tensor::matrix(segs.count(), c);
  for (std::size_t s = 0; s < segs.count(); ++s) {
    if (segs.length[s] == 0) throw ContractError("segment_mean: empty segment");
    out.mat().row(static_cast<Eigen::Index>(s)) =
        block(X, segs.offset[s], 0, segs.length[s], c).colwise().mean();
  }
  const int ix = x.id();
  return x.tape().push(std::move(out), {x}, [ix, segs, c](Tape& tp, int self) {
    const Tensor& g = tp.adjoint(self);
    Tensor& dx = tp.adjoint_acc(ix);
    for (std::size_t s = 0; s < segs.count(); ++s) {
      const Eigen::RowVectorXd gs = g.mat().row(static_cast<Eigen::Index>(s)) /
                                    static_cast<double>(segs.length[s]);
      block(dx, segs.offset[s], 0, segs.length[s], c).rowwise() += gs;
    }
  });
}

Var segment_attention(Var q, Var k, Var v, const Segments& segs, std::size_t heads) {
  const Tensor& Q = q.value();
  const Tensor& K = k.value();
  const Tensor& V = v.value();
  require(Q.shape() == K.shape() && Q.shape() == V.shape(), "segment_attention: q/k/v shapes differ");
  const std::size_t d = Q.cols();
  require(heads > 0 && d % heads == 0, "segment_attention: width not divisible by heads");
  require(segs.total_rows() <= Q.rows(), "segment_attention: segments exceed rows");
  const std::size_t dk = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));

  // Attention weights P for each (segment, head), stored back to back.
  std::vector<std::size_t> p_off(segs.count());
  std::size_t p_total = 0;
  for (std::size_t s = 0; s < segs.count(); ++s) {
    p_off[s] = p_total;
    p_total += heads * segs.length[s] * segs.length[s];
  }
  std::vector<double> probs(p_total);
  Tensor out(Q.shape(), 0.0);
  RowMatrix S;
  for (std::size_t s = 0; s < segs.count(); ++s) {
    const std::size_t o = segs.offset[s], n = segs.length[s];
    const auto ni = static_cast<Eigen::Index>(n);
    for (std::size_t h = 0; h < heads; ++h) {
      S.noalias() = block(Q, o, h * dk, n, dk) * block(K, o, h * dk, n, dk).transpose();
      S *= inv_sqrt;
      const Eigen::VectorXd mx = S.rowwise().maxCoeff();
      S = (S.colwise() - mx).array().exp().matrix();
      const Eigen::VectorXd z = S.rowwise().sum();
      S.array().colwise() /= z.array();
      MatrixMap P(probs.data() + p_off[s] + h * n * n, ni, ni);
      P = S;
      block(out, o, h * dk, n, dk).noalias() = S * block(V, o, h * dk, n, dk);
    }
  }

  const int iq = q.id(), ik = k.id(), iv = v.id();
  return q.tape().push(
      std::move(out), {q, k, v},
      [iq, ik, iv, segs, heads, dk, inv_sqrt, probs = std::move(probs),
       p_off = std::move(p_off)](Tape& tp, int self) {
        const Tensor& G = tp.adjoint(self);
        const Tensor& Qv = tp.value(iq);
        const Tensor& Kv = tp.value(ik);
        const Tensor& Vv = tp.value(iv);
        const bool gq = tp.requires_grad(iq), gk = tp.requires_grad(ik), gv = tp.requires_grad(iv);
        Tensor* dQ = gq ? &tp.adjoint_acc(iq) : nullptr;
        Tensor* dK = gk ? &tp.adjoint_acc(ik) : nullptr;
        Tensor* dV = gv ? &tp.adjoint_acc(iv) : nullptr;
        RowMatrix dP, dS;
        for (std::size_t s = 0; s < segs.count(); ++s) {
          const std::size_t o = segs.offset[s], n = segs.length[s];
          const auto ni = static_cast<Eigen::Index>(n);
          for (std::size_t h = 0; h < heads; ++h) {
            ConstMatrixMap P(probs.data() + p_off[s] + h * n * n, ni, ni);
            const auto g = block(G, o, h * dk, n, dk);
            if (dV) block(*dV, o, h * dk, n, dk).noalias() += P.transpose() * g;
            if (!dQ && !dK) continue;
            dP.noalias() = g * block(Vv, o, h * dk, n, dk).transpose();
            const Eigen::VectorXd rs = (dP.array() * P.array()).rowwise().sum();
            dS = (P.array() * (dP.colwise() - rs).array()).matrix() * inv_sqrt;
            if (dQ) block(*dQ, o, h * dk, n, dk).noalias() += dS * block(Kv, o, h * dk, n, dk);
            if (dK) block(*dK, o, h * dk, n, dk).noalias() += dS.transpose() * block(Qv, o, h * dk, n, dk);
          }
        }
      });
}

Var segment_scores(Var q, Var k, const Segments& segs, std::size_t width) {
  const Tensor& Q = q.value();
  const Tensor& K = k.value();
  require(Q.cols() == K.cols(), "segment_scores: widths differ");
  require(Q.rows() == segs.count(), "segment_scores: one query row per segment");
  require(segs.max_length() <= width, "segment_scores: width too small");
  const std::size_t d = Q.cols();
  Tensor out = Tensor::matrix(segs.count(), width);
  for (std::size_t s = 0; s < segs.count(); ++s) {
    const std::size_t o = segs.offset[s], n = segs.length[s];
    block(out, s, 0, 1, n).noalias() =
        Q.mat().row(static_cast<Eigen::Index>(s)) * block(K, o, 0, n, d).transpose();
  }
  const int iq = q.id(), ik = k.id();
  return q.tape().push(std::move(out), {q, k}, [iq, ik, segs, d](Tape& tp, int self) {
    const Tensor& G = tp.adjoint(self);
    const bool gq = tp.requires_grad(iq), gk = tp.requires_grad(ik);
    for (std::size_t s = 0; s < segs.count(); ++s) {
      const std::size_t o = segs.offset[s], n = segs.length[s];
      const auto g = block(G, s, 0, 1, n);
      if (gq) {
        tp.adjoint_acc(iq).mat().row(static_cast<Eigen::Index>(s)).noalias() +=
            g * block(tp.value(ik), o, 0, n, d);
      }
      if (gk) {
        block(tp.adjoint_acc(ik), o, 0, n, d).noalias() +=
            g.transpose() * tp.value(iq).mat().row(static_cast<Eigen::Index>(s));
      }
    }
  });
}

}  // namespace ad
}  // namespace uavsched
