#include "mobnet/graph.hpp"

#include <algorithm>
#include <cmath>

namespace mobnet {

WeightTransform weight_transform_from_string(const std::string& s) {
  if (s == "raw") return WeightTransform::raw;
  if (s == "log1p") return WeightTransform::log1p;
  if (s == "binary") return WeightTransform::binary;
  throw Error("unknown weight transform: " + s);
}

std::string to_string(WeightTransform t) {
  switch (t) {
    case WeightTransform::raw: return "raw";
    case WeightTransform::log1p: return "log1p";
    case WeightTransform::binary: return "binary";
  }
  return "raw";
}

SpMat apply_weight_transform(const SpMat& a, WeightTransform t) {
  SpMat out = a;
  switch (t) {
    case WeightTransform::raw:
      break;
    case WeightTransform::log1p:
      out = out.unaryExpr([](double v) { return std::log1p(v); });
      break;
    case WeightTransform::binary:
      out = out.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
      break;
  }
  out.prune(0.0);
  return out;
}

namespace {

SpMat symmetrize_half(const SpMat& a) {
  SpMat at = SpMat(a.transpose());
  return 0.5 * (a + at);
}

SpMat identity(Index n) {
  SpMat id(n, n);
  id.setIdentity();
  return id;
}

}  // namespace

Vector degree_vector(const MobilityNetwork& net, const DegreeOptions& opts) {
  if (net.size() < 1) throw Error("degree_vector: empty network");
  SpMat a = opts.weighted ? net.adjacency
                          : apply_weight_transform(net.adjacency, WeightTransform::binary);
  if (opts.symmetrize) a = symmetrize_half(a);
  if (opts.self_loops) a = a + identity(a.rows());
  Vector d = Vector::Zero(a.rows());
  for (Index k = 0; k < a.outerSize(); ++k) {
    for (SpMat::InnerIterator it(a, k); it; ++it) d[it.row()] += it.value();
  }
  return d;
}

NormalizedAdjacency normalize_adjacency(const MobilityNetwork& net, bool symmetrize,
                                        WeightTransform transform) {
  if (net.size() < 1) throw Error("normalize_adjacency: empty network");
  SpMat t = apply_weight_transform(net.adjacency, transform);
  if (symmetrize) t = symmetrize_half(t);
  SpMat a_tilde = t + identity(t.rows());
  a_tilde.makeCompressed();

  Vector d = Vector::Zero(a_tilde.rows());
  for (Index k = 0; k < a_tilde.outerSize(); ++k) {
    for (SpMat::InnerIterator it(a_tilde, k); it; ++it) d[it.row()] += it.value();
  }
  Vector dinv_sqrt = d.array().rsqrt();

  SpMat a_hat = a_tilde;
  for (Index k = 0; k < a_hat.outerSize(); ++k) {
    for (SpMat::InnerIterator it(a_hat, k); it; ++it) {
      it.valueRef() = dinv_sqrt[it.row()] * it.value() * dinv_sqrt[it.col()];
    }
  }

  NormalizedAdjacency out;
  out.a_hat = std::move(a_hat);
  out.a_tilde = std::move(a_tilde);
  out.degrees = std::move(d);
  out.symmetrized = symmetrize;
  out.self_loops_added = true;
  out.transform = transform;
  return out;
}

Matrix normalize_adjacency_dense(const Matrix& a, bool symmetrize, WeightTransform transform) {
  Matrix t(a.rows(), a.cols());
  switch (transform) {
    case WeightTransform::raw: t = a; break;
    case WeightTransform::log1p: t = a.unaryExpr([](double v) { return std::log1p(v); }); break;
    case WeightTransform::binary: t = (a.array() > 0.0).cast<double>(); break;
  }
  if (symmetrize) t = 0.5 * (t + t.transpose());
  Matrix a_tilde = t + Matrix::Identity(a.rows(), a.cols());
  Vector d = a_tilde.rowwise().sum();
  Vector dinv_sqrt = d.array().rsqrt();
  return dinv_sqrt.asDiagonal() * a_tilde * dinv_sqrt.asDiagonal();
}

std::vector<Index> neighborhood(const MobilityNetwork& net, Index i, bool symmetrize,
                                bool self_loops) {
  if (i < 0 || i >= net.size()) {
    throw Error("neighborhood: node index out of range: " + std::to_string(i));
  }
  std::vector<Index> out;
  const SpMat& a = net.adjacency;
  for (Index k = 0; k < a.outerSize(); ++k) {
    for (SpMat::InnerIterator it(a, k); it; ++it) {
      if (it.value() <= 0.0) continue;
      if (it.row() == i) out.push_back(it.col());
      if (symmetrize && it.col() == i) out.push_back(it.row());
    }
  }
  if (self_loops) out.push_back(i);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

SpMat row_normalize(const SpMat& a) {
  const Index n = a.rows();
  Vector out_degree = Vector::Zero(n);
  for (Index k = 0; k < a.outerSize(); ++k) {
    for (SpMat::InnerIterator it(a, k); it; ++it) out_degree[it.row()] += it.value();
  }
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(a.nonZeros()) + static_cast<std::size_t>(n));
  for (Index k = 0; k < a.outerSize(); ++k) {
    for (SpMat::InnerIterator it(a, k); it; ++it) {
      if (it.value() > 0.0) {
        trips.emplace_back(it.row(), it.col(), it.value() / out_degree[it.row()]);
      }
    }
  }
  for (Index i = 0; i < n; ++i) {
    if (out_degree[i] <= 0.0) {
      for (Index j = 0; j < n; ++j) trips.emplace_back(i, j, 1.0 / static_cast<double>(n));
    }
  }
  SpMat p(n, n);
  p.setFromTriplets(trips.begin(), trips.end());
  return p;
}

Segments build_segments(const SpMat& a_tilde) {
  const Index n = a_tilde.rows();
  std::vector<std::vector<Index>> nbrs(static_cast<std::size_t>(n));
  for (Index k = 0; k < a_tilde.outerSize(); ++k) {
    for (SpMat::InnerIterator it(a_tilde, k); it; ++it) {
      if (it.value() > 0.0) nbrs[static_cast<std::size_t>(it.row())].push_back(it.col());
    }
  }
  Segments seg;
  seg.ranges.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    auto& v = nbrs[static_cast<std::size_t>(i)];
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    const Index begin = static_cast<Index>(seg.edge_src.size());
    for (Index j : v) {
      seg.edge_src.push_back(i);
      seg.edge_dst.push_back(j);
    }
    seg.ranges[static_cast<std::size_t>(i)] = {begin, static_cast<Index>(seg.edge_src.size())};
  }
  return seg;
}

}  // namespace mobnet
