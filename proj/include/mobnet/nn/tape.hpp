#pragma once

#include "mobnet/graph.hpp"
#include "mobnet/nn/params.hpp"
#include "mobnet/types.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace mobnet::nn {

class Tape;

/// Handle to a tape node; cheap to copy, valid while the tape lives.
struct Var {
  Index id = -1;
  Tape* tape = nullptr;

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
};

/// Record-and-replay reverse-mode differentiation over dense matrices.
/// Nodes are appended in topological order, so one reverse sweep over the
/// node list propagates gradients. A tape is single-use: record a forward
/// pass, call backward once, then discard.
class Tape {
 public:
  Var leaf(Matrix value, bool requires_grad = false);
  /// Leaf bound to an external parameter; backward accumulates into p.grad.
  Var param(Param& p);

  Var matmul(Var a, Var b);
  /// s * h with a constant sparse operator; *s must outlive backward().
  Var spmm(const SpMat* s, Var h);
  Var add(Var a, Var b);
  Var add_rowvec(Var a, Var row);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  /// Scales row r of m by col(r); col is E x 1.
  Var scale_rows(Var m, Var col);
  Var scale(Var a, double c);
  Var relu(Var a);
  Var leaky_relu(Var a, double negative_slope);
  Var concat_cols(Var a, Var b);
  Var gather_rows(Var a, std::vector<Index> rows);
  Var squared_diff(Var a, Var b);
  /// Softmax of a column vector of scores within each segment.
  Var segment_softmax(Var scores, const Segments& seg);
  /// Sums edge rows into their segment; result has num_segments rows.
  Var segment_sum(Var edge_rows, const Segments& seg);
  Var sum_all(Var a);
  Var mean_all(Var a);
  /// Mean squared error over unmasked rows (mask empty selects all).
  Var mse(Var pred, Var target, std::vector<std::uint8_t> mask = {});

  /// Propagates d(loss)/d(node) for every recorded node and flushes
  /// parameter gradients. loss must be scalar; a tape can only be
  /// differentiated once.
  void backward(Var loss);

  const Matrix& value(Index id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  Matrix& grad_ref(Index id);
  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;  // allocated lazily during backward
    bool requires_grad = false;
    std::function<void()> backprop;  // empty for leaves and constant nodes
  };

  Var emplace(Matrix value, bool requires_grad, std::function<void()> backprop);
  bool needs_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].requires_grad; }
  void check(Var v) const;

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

}  // namespace mobnet::nn
