#include "mobnet/nn/tape.hpp"

#include <cmath>
#include <utility>

namespace mobnet::nn {

const Matrix& Var::value() const {
  if (!tape) throw Error("Var is not bound to a tape");
  return tape->value(id);
}

Matrix& Tape::grad_ref(Index id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::emplace(Matrix value, bool requires_grad, std::function<void()> backprop) {
  nodes_.push_back(Node{std::move(value), Matrix(), requires_grad, std::move(backprop)});
  return Var{static_cast<Index>(nodes_.size()) - 1, this};
}

void Tape::check(Var v) const {
  if (v.tape != this || v.id < 0 || v.id >= static_cast<Index>(nodes_.size())) {
    throw Error("Var does not belong to this tape");
  }
}

Var Tape::leaf(Matrix value, bool requires_grad) {
  return emplace(std::move(value), requires_grad, nullptr);
}

Var Tape::param(Param& p) {
  Var v = emplace(p.value, true, nullptr);
  Param* pp = &p;
  const Index self = v.id;
  nodes_.back().backprop = [this, self, pp]() {
    pp->grad += nodes_[static_cast<std::size_t>(self)].grad;
    pp->grad_populated = true;
  };
  return v;
}

Var Tape::matmul(Var a, Var b) {
  check(a);
  check(b);
  if (a.cols() != b.rows()) {
    throw Error("matmul shape mismatch: " + std::to_string(a.rows()) + "x" +
                std::to_string(a.cols()) + " * " + std::to_string(b.rows()) + "x" +
                std::to_string(b.cols()));
  }
  Matrix val = a.value() * b.value();
  const bool na = needs_grad(a), nb = needs_grad(b);
  if (!na && !nb) return emplace(std::move(val), false, nullptr);
  Var out = emplace(std::move(val), true, nullptr);
  const Index self = out.id, ia = a.id, ib = b.id;
  nodes_.back().backprop = [this, self, ia, ib, na, nb]() {
    const Matrix& g = nodes_[static_cast<std::size_t>(self)].grad;
    if (na) grad_ref(ia).noalias() += g * value(ib).transpose();
    if (nb) grad_ref(ib).noalias() += value(ia).transpose() * g;
  };
  return out;
}

Var Tape::spmm(const SpMat* s, Var h) {
  check(h);
  if (s->cols() != h.rows()) {
    throw Error("spmm shape mismatch: operator has " + std::to_string(s->cols()) +
                " cols, input has " + std::to_string(h.rows()) + " rows");
  }
  Matrix val = (*s) * h.value();
  if (!needs_grad(h)) return emplace(std::move(val), false, nullptr);
  Var out = emplace(std::move(val), true, nullptr);
  const Index self = out.id, ih = h.id;
  nodes_.back().backprop = [this, self, ih, s]() {
    const Matrix& g = nodes_[static_cast<std::size_t>(self)].grad;
    grad_ref(ih).noalias() += s->transpose() * g;
  };
  return out;
}

Var Tape::add(Var a, Var b) {
  check(a);
  check(b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error("add shape mismatch");
  }
  Matrix val = a.value() + b.value();
  const bool na = needs_grad(a), nb = needs_grad(b);
  if (!na && !nb) return emplace(std::move(val), false, nullptr);
  Var out = emplace(std::move(val), true, nullptr);
  const Index self = out.id, ia = a.id, ib = b.id;
  nodes_.back().backprop = [this, self, ia, ib, na, nb]() {
    const Matrix& g = nodes_[static_cast<std::size_t>(self)].grad;
    if (na) grad_ref(ia) += g;
    if (nb) grad_ref(ib) += g;
  };
  return out;
}

Var Tape::add_rowvec(Var a, Var row) {
  check(a);
  check(row);
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw Error("add_rowvec expects a 1x" + std::to_string(a.cols()) + " row, got " +
                std::to_string(row.rows()) + "x" + std::to_string(row.cols()));
  }
  Matrix val = a.value().rowwise() + row.value().row(0);
  const bool na = needs_grad(a), nr = needs_grad(row);
  if (!na && !nr) return emplace(std::move(val), false, nullptr);
  Var out = emplace(std::move(val), true, nullptr);
  const Index self = out.id, ia = a.id, ir = row.id;
  nodes_.back().backprop = [this, self, ia, ir, na, nr]() {
    const Matrix& g = nodes_[static_cast<std::size_t>(self)].grad;
    if (na) grad_ref(ia) += g;
    if (nr) grad_ref(ir).row(0) += g.colwise().sum();
  };
  return out;
}

Var Tape::sub(Var a, Var b) {
  check(a);
  check(b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error("sub shape mismatch");
  Matrix val = a.value() - b.value();
  const bool na = needs_grad(a), nb = needs_grad(b);
  if (!na && !nb) return emplace(std::move(val), false, nullptr);
  Var out = emplace(std::move(val), true, nullptr);
  const Index self = out.id, ia = a.id, ib = b.id;
  nodes_.back().backprop = [this, self, ia, ib, na, nb]() {
    const Matrix& g = nodes_[static_cast<std::size_t>(self)].grad;
    if (na) grad_ref(ia) += g;
    if (nb) grad_ref(ib) -= g;
  };
  return out;
}

Var Tape::mul(Var a, Var b) {
  check(a);
  check(b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error("mul shape mismatch");
  Matrix val = a.value().cwiseProduct(b.value());
  const bool na = needs_grad(a), nb = needs_grad(b);
  if (!na && !nb) return emplace(std::move(val), false, nullptr);
  Var out = emplace(std::move(val), true, nullptr);
  const Index self = out.id, ia = a.id, ib = b.id;
  nodes_.back().backprop = [this, self, ia, ib, na, nb]() {
    const Matrix& g = nodes_[static_cast<std::size_t>(self)].grad;
    if (na) grad_ref(ia) += g.cwiseProduct(value(ib));
    if (nb) grad_ref(ib) += g.cwiseProduct(value(ia));
  };
  return out;
}

Var Tape::scale_rows(Var m, Var col) {
  check(m);
  check(col);
  if (col.cols() != 1 || col.rows() != m.rows()) {
    throw Error("scale_rows expects a " + std::to_string(m.rows()) + "x1 column");
  }
  Matrix val = m.value().array().colwise() * col.value().col(0).array();
  const bool nm = needs_grad(m), nc = needs_grad(col);
  if (!nm && !nc) return emplace(std::move(val), false, nullptr);
  Var out = emplace(std::move(val), true, nullptr);
  const Index self = out.id, im = m.id, ic = col.id;
  nodes_.back().backprop = [this, self, im, ic, nm, nc]() {
    const Matrix& g = nodes_[static_cast<std::size_t>(self)].grad;
    if (nm) grad_ref(im) += (g.array().colwise() * value(ic).col(0).array()).matrix();
    if (nc) grad_ref(ic).col(0) += g.cwiseProduct(value(im)).rowwise().sum();
  };
  return out;
}

Var Tape::scale(Var a, double c) {
  check(a);
  Matrix val = c * a.value();
  if (!needs_grad(a)) return emplace(std::move(val), false, nullptr);
  Var out = emplace(std::move(val), true, nullptr);
  const Index self = out.id, ia = a.id;
  nodes_.back().backprop = [this, self, ia, c]() {
    grad_ref(ia) += c * nodes_[static_cast<std::size_t>(self)].grad;
  };
  return out;
}

Var Tape::relu(Var a) {
  check(a);
  Matrix val = a.value().cwiseMax(0.0);
  if (!needs_grad(a)) return emplace(std::move(val), false, nullptr);
  Var out = emplace(std::move(val), true, nullptr);
  const Index self = out.id, ia = a.id;
  nodes_.back().backprop = [this, self, ia]() {
    const Matrix& g = nodes_[static_cast<std::size_t>(self)].grad;
    grad_ref(ia) += g.cwiseProduct((value(ia).array() > 0.0).cast<double>().matrix());
  };
  return out;
}

Var Tape::leaky_relu(Var a, double negative_slope) {
  check(a);
  Matrix val = a.value().unaryExpr(
      [negative_slope](double v) { return v > 0.0 ? v : negative_slope * v; });
  if (!needs_grad(a)) return emplace(std::move(val), false, nullptr);
  Var out = emplace(std::move(val), true, nullptr);
  const Index self = out.id, ia = a.id;
  nodes_.back().backprop = [this, self, ia, negative_slope]() {
    const Matrix& g = nodes_[static_cast<std::size_t>(self)].grad;
    grad_ref(ia) += g.cwiseProduct(value(ia).unaryExpr(
        [negative_slope](double v) { return v > 0.0 ? 1.0 : negative_slope; }));
  };
  return out;
}

Var Tape::concat_cols(Var a, Var b) {
  check(a);
  check(b);
  if (a.rows() != b.rows()) throw Error("concat_cols row mismatch");
  Matrix val(a.rows(), a.cols() + b.cols());
  val << a.value(), b.value();
  const bool na = needs_grad(a), nb = needs_grad(b);
  if (!na && !nb) return emplace(std::move(val), false, nullptr);
  Var out = emplace(std::move(val), true, nullptr);
  const Index self = out.id, ia = a.id, ib = b.id;
  const Index wa = a.cols(), wb = b.cols();
  nodes_.back().backprop = [this, self, ia, ib, na, nb, wa, wb]() {
    const Matrix& g = nodes_[static_cast<std::size_t>(self)].grad;
    if (na) grad_ref(ia) += g.leftCols(wa);
    if (nb) grad_ref(ib) += g.rightCols(wb);
  };
  return out;
}

Var Tape::gather_rows(Var a, std::vector<Index> rows) {
  check(a);
  const Index n = a.rows();
  for (Index r : rows) {
    if (r < 0 || r >= n) throw Error("gather_rows index out of range: " + std::to_string(r));
  }
  Matrix val(static_cast<Index>(rows.size()), a.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    val.row(static_cast<Index>(k)) = a.value().row(rows[k]);
  }
  if (!needs_grad(a)) return emplace(std::move(val), false, nullptr);
  Var out = emplace(std::move(val), true, nullptr);
  const Index self = out.id, ia = a.id;
  auto idx = std::make_shared<std::vector<Index>>(std::move(rows));
  nodes_.back().backprop = [this, self, ia, idx]() {
    const Matrix& g = nodes_[static_cast<std::size_t>(self)].grad;
    Matrix& ga = grad_ref(ia);
    for (std::size_t k = 0; k < idx->size(); ++k) {
      ga.row((*idx)[k]) += g.row(static_cast<Index>(k));
    }
  };
  return out;
}

Var Tape::squared_diff(Var a, Var b) {
  check(a);
  check(b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error("squared_diff shape mismatch");
  Matrix diff = a.value() - b.value();
  Matrix val = diff.cwiseProduct(diff);
  const bool na = needs_grad(a), nb = needs_grad(b);
  if (!na && !nb) return emplace(std::move(val), false, nullptr);
  Var out = emplace(std::move(val), true, nullptr);
  const Index self = out.id, ia = a.id, ib = b.id;
  nodes_.back().backprop = [this, self, ia, ib, na, nb]() {
    const Matrix& g = nodes_[static_cast<std::size_t>(self)].grad;
    Matrix d = 2.0 * g.cwiseProduct(value(ia) - value(ib));
    if (na) grad_ref(ia) += d;
    if (nb) grad_ref(ib) -= d;
  };
  return out;
}

Var Tape::segment_softmax(Var scores, const Segments& seg) {
  check(scores);
  if (scores.cols() != 1 || scores.rows() != seg.num_edges()) {
    throw Error("segment_softmax expects scores as one column per edge");
  }
  Matrix val(scores.rows(), 1);
  const Matrix& s = scores.value();
  for (const auto& [begin, end] : seg.ranges) {
    if (begin == end) continue;
    double mx = s(begin, 0);
    for (Index e = begin + 1; e < end; ++e) mx = std::max(mx, s(e, 0));
    double total = 0.0;
    for (Index e = begin; e < end; ++e) {
      val(e, 0) = std::exp(s(e, 0) - mx);
      total += val(e, 0);
    }
    for (Index e = begin; e < end; ++e) val(e, 0) /= total;
  }
  if (!needs_grad(scores)) return emplace(std::move(val), false, nullptr);
  Var out = emplace(std::move(val), true, nullptr);
  const Index self = out.id, is = scores.id;
  auto ranges = std::make_shared<std::vector<std::pair<Index, Index>>>(seg.ranges);
  nodes_.back().backprop = [this, self, is, ranges]() {
    const Matrix& g = nodes_[static_cast<std::size_t>(self)].grad;
    const Matrix& alpha = nodes_[static_cast<std::size_t>(self)].value;
    Matrix& gs = grad_ref(is);
    for (const auto& [begin, end] : *ranges) {
      double dot = 0.0;
      for (Index e = begin; e < end; ++e) dot += g(e, 0) * alpha(e, 0);
      for (Index e = begin; e < end; ++e) gs(e, 0) += alpha(e, 0) * (g(e, 0) - dot);
    }
  };
  return out;
}

Var Tape::segment_sum(Var edge_rows, const Segments& seg) {
  check(edge_rows);
  if (edge_rows.rows() != seg.num_edges()) {
    throw Error("segment_sum expects one row per edge");
  }
  Matrix val = Matrix::Zero(seg.num_segments(), edge_rows.cols());
  for (Index i = 0; i < seg.num_segments(); ++i) {
    const auto& [begin, end] = seg.ranges[static_cast<std::size_t>(i)];
    for (Index e = begin; e < end; ++e) val.row(i) += edge_rows.value().row(e);
  }
  if (!needs_grad(edge_rows)) return emplace(std::move(val), false, nullptr);
  Var out = emplace(std::move(val), true, nullptr);
  const Index self = out.id, ie = edge_rows.id;
  auto ranges = std::make_shared<std::vector<std::pair<Index, Index>>>(seg.ranges);
  nodes_.back().backprop = [this, self, ie, ranges]() {
    const Matrix& g = nodes_[static_cast<std::size_t>(self)].grad;
    Matrix& ge = grad_ref(ie);
    for (std::size_t i = 0; i < ranges->size(); ++i) {
      const auto& [begin, end] = (*ranges)[i];
      for (Index e = begin; e < end; ++e) ge.row(e) += g.row(static_cast<Index>(i));
    }
  };
  return out;
}

Var Tape::sum_all(Var a) {
  check(a);
  Matrix val(1, 1);
  val(0, 0) = a.value().sum();
  if (!needs_grad(a)) return emplace(std::move(val), false, nullptr);
  Var out = emplace(std::move(val), true, nullptr);
  const Index self = out.id, ia = a.id;
  nodes_.back().backprop = [this, self, ia]() {
    grad_ref(ia).array() += nodes_[static_cast<std::size_t>(self)].grad(0, 0);
  };
  return out;
}

Var Tape::mean_all(Var a) {
  check(a);
  if (a.value().size() == 0) throw Error("mean of an empty tensor");
  Matrix val(1, 1);
  val(0, 0) = a.value().mean();
  if (!needs_grad(a)) return emplace(std::move(val), false, nullptr);
  Var out = emplace(std::move(val), true, nullptr);
  const Index self = out.id, ia = a.id;
  const double inv = 1.0 / static_cast<double>(a.value().size());
  nodes_.back().backprop = [this, self, ia, inv]() {
    grad_ref(ia).array() += inv * nodes_[static_cast<std::size_t>(self)].grad(0, 0);
  };
  return out;
}

Var Tape::mse(Var pred, Var target, std::vector<std::uint8_t> mask) {
  check(pred);
  check(target);
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw Error("mse shape mismatch: pred " + std::to_string(pred.rows()) + "x" +
                std::to_string(pred.cols()) + ", target " + std::to_string(target.rows()) + "x" +
                std::to_string(target.cols()));
  }
  if (!mask.empty() && static_cast<Index>(mask.size()) != pred.rows()) {
    throw Error("mse mask length must equal the leading dimension");
  }
  Index active_rows = 0;
  if (mask.empty()) {
    active_rows = pred.rows();
  } else {
    for (auto m : mask)
      if (m) ++active_rows;
  }
  if (active_rows == 0) throw Error("mse: mask selects no entries");
  const double denom = static_cast<double>(active_rows) * static_cast<double>(pred.cols());

  double total = 0.0;
  const Matrix& p = pred.value();
  const Matrix& t = target.value();
  for (Index r = 0; r < p.rows(); ++r) {
    if (!mask.empty() && !mask[static_cast<std::size_t>(r)]) continue;
    for (Index c = 0; c < p.cols(); ++c) {
      const double d = p(r, c) - t(r, c);
      total += d * d;
    }
  }
  Matrix val(1, 1);
  val(0, 0) = total / denom;

  const bool np = needs_grad(pred), nt = needs_grad(target);
  if (!np && !nt) return emplace(std::move(val), false, nullptr);
  Var out = emplace(std::move(val), true, nullptr);
  const Index self = out.id, ip = pred.id, it = target.id;
  auto m = std::make_shared<std::vector<std::uint8_t>>(std::move(mask));
  nodes_.back().backprop = [this, self, ip, it, np, nt, m, denom]() {
    const double g = nodes_[static_cast<std::size_t>(self)].grad(0, 0);
    const Matrix& p = value(ip);
    const Matrix& t = value(it);
    Matrix d = (2.0 * g / denom) * (p - t);
    if (!m->empty()) {
      for (Index r = 0; r < d.rows(); ++r) {
        if (!(*m)[static_cast<std::size_t>(r)]) d.row(r).setZero();
      }
    }
    if (np) grad_ref(ip) += d;
    if (nt) grad_ref(it) -= d;
  };
  return out;
}

void Tape::backward(Var loss) {
  check(loss);
  if (consumed_) throw Error("tape already differentiated; re-record the forward pass");
  if (loss.value().size() != 1) {
    throw Error("backward requires a scalar loss, got " + std::to_string(loss.value().rows()) +
                "x" + std::to_string(loss.value().cols()));
  }
  if (!std::isfinite(loss.value()(0, 0))) throw Error("backward on a non-finite loss");
  grad_ref(loss.id)(0, 0) = 1.0;
  for (Index i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.grad.size() == 0) continue;
    if (n.backprop) n.backprop();
  }
  consumed_ = true;
}

}  // namespace mobnet::nn
