#pragma once

#include "mobnet/types.hpp"

#include <unordered_map>
#include <vector>

namespace mobnet {

/// Weighted directed region graph. Row = origin (home), column = destination
/// (work). node_index is a gap-free bijection RegionId <-> [0, N).
struct MobilityNetwork {
  std::vector<RegionId> regions;               // index -> geoid
  std::unordered_map<RegionId, Index> index;   // geoid -> index
  SpMat adjacency;                             // N x N, entries >= 0

  Index size() const { return static_cast<Index>(regions.size()); }

  Index index_of(const RegionId& r) const {
    auto it = index.find(r);
    if (it == index.end()) throw Error("unknown region: " + r.geoid);
    return it->second;
  }
};

enum class WeightTransform { raw, log1p, binary };

WeightTransform weight_transform_from_string(const std::string& s);
std::string to_string(WeightTransform t);

/// Elementwise transform of the edge weights; pattern is preserved
/// (binary maps every stored non-zero to 1).
SpMat apply_weight_transform(const SpMat& a, WeightTransform t);

/// Propagation operator D^{-1/2} (T(A) [sym] + I) D^{-1/2} and the matrix it
/// was built from. Immutable after construction.
struct NormalizedAdjacency {
  SpMat a_hat;             // normalized operator
  SpMat a_tilde;           // transformed (+symmetrized, +self-loop) adjacency
  Vector degrees;          // row sums of a_tilde
  bool symmetrized = true;
  bool self_loops_added = true;
  WeightTransform transform = WeightTransform::log1p;

  Index size() const { return a_hat.rows(); }
};

struct DegreeOptions {
  bool weighted = true;     // false counts edges instead of summing weights
  bool symmetrize = false;  // (A + A^T) / 2 first
  bool self_loops = false;  // add unit self-loops
};

/// Row sums of the adjacency as specified by the options.
Vector degree_vector(const MobilityNetwork& net, const DegreeOptions& opts = {});

NormalizedAdjacency normalize_adjacency(const MobilityNetwork& net,
                                        bool symmetrize = true,
                                        WeightTransform transform = WeightTransform::log1p);

/// Dense reference path; must agree with the sparse result to 1e-12.
Matrix normalize_adjacency_dense(const Matrix& a, bool symmetrize, WeightTransform transform);

/// {j : A~[i][j] > 0}, including i itself when self_loops is set.
/// Sorted ascending.
std::vector<Index> neighborhood(const MobilityNetwork& net, Index i,
                                bool symmetrize = true, bool self_loops = true);

/// Row-stochastic transition matrix; all-zero rows become uniform.
SpMat row_normalize(const SpMat& a);

/// Undirected neighbor structure shared by the attention layers: directed
/// pairs (i, j) with j in N(i), grouped contiguously by i.
struct Segments {
  std::vector<Index> edge_src;                       // segment id per edge
  std::vector<Index> edge_dst;
  std::vector<std::pair<Index, Index>> ranges;       // per node: [begin, end) into edges
  Index num_edges() const { return static_cast<Index>(edge_src.size()); }
  Index num_segments() const { return static_cast<Index>(ranges.size()); }
};

/// Builds neighbor segments from the non-zero pattern of a_tilde.
Segments build_segments(const SpMat& a_tilde);

}  // namespace mobnet
