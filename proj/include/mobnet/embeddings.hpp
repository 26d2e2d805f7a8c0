#pragma once

#include "mobnet/graph.hpp"
#include "mobnet/ingest.hpp"
#include "mobnet/types.hpp"

#include <filesystem>
#include <string>

namespace mobnet {

enum class EmbeddingMethod {
  spatial,
  svd,
  laplacian,
  random_walk,
  vnn_trained,
  gnn_hidden,
  features,
  concat,
};

EmbeddingMethod embedding_method_from_string(const std::string& s);
std::string to_string(EmbeddingMethod m);

/// N x d per-node feature table; row i corresponds to node i of the source
/// network. col_mean/col_std record the standardization applied (std 0
/// marks a constant column that was zeroed instead of scaled).
struct EmbeddingMatrix {
  Matrix values;
  EmbeddingMethod method = EmbeddingMethod::features;
  bool standardized = false;
  Vector col_mean;
  Vector col_std;

  Index n() const { return values.rows(); }
  Index d() const { return values.cols(); }
};

/// In-place column standardization (population moments). Constant columns
/// become all-zero and keep col_std = 0.
void standardize(EmbeddingMatrix& emb);

/// Standardized (lon, lat) columns, aligned to the network's node order.
/// The centroid table must provide lon/lat for every node.
EmbeddingMatrix spatial_embedding(const MobilityNetwork& net, const AttributeTable& centroids,
                                  const std::string& lon_column = "lon",
                                  const std::string& lat_column = "lat",
                                  bool standardize_columns = true);

/// Rows are U_d * sqrt(S_d) from the truncated SVD of the transformed
/// adjacency. Sign convention: the largest-magnitude entry of each left
/// singular vector is positive.
EmbeddingMatrix svd_embedding(const MobilityNetwork& net, Index d,
                              WeightTransform transform = WeightTransform::log1p,
                              bool standardize_columns = true);

/// Reconstruction U_d S_d V_d^T used by the svd tests; exposed so callers
/// can inspect approximation error per rank.
Matrix svd_rank_reconstruction(const Matrix& a, Index d);

/// Eigenvectors of L = I - D^{-1/2} A~ D^{-1/2} (symmetrized, self-looped)
/// for the d smallest non-zero eigenvalues.
EmbeddingMatrix laplacian_embedding(const MobilityNetwork& net, Index d,
                                    WeightTransform transform = WeightTransform::log1p,
                                    bool standardize_columns = true);

/// Raw spectrum helper: ascending eigenvalues and matching eigenvectors of
/// the normalized Laplacian.
std::pair<Vector, Matrix> laplacian_spectrum(const MobilityNetwork& net,
                                             WeightTransform transform = WeightTransform::log1p);

enum class RandomWalkVariant { pagerank_multi_damping, k_step_landing };

/// pagerank_multi_damping: column c is the PageRank vector at damping
/// alpha_c, alpha linearly spaced over [0.05, 0.95]; every column sums to 1
/// before standardization. k_step_landing: column c is diag(P^(c+1)), the
/// return probabilities after c+1 steps of the row-stochastic walk.
EmbeddingMatrix random_walk_embedding(const MobilityNetwork& net, Index d,
                                      RandomWalkVariant variant = RandomWalkVariant::pagerank_multi_damping,
                                      bool standardize_columns = true);

/// Single PageRank vector by power iteration; L1 residual below tol.
Vector pagerank(const SpMat& transition, double damping, double tol = 1e-10,
                int max_iterations = 10000);

/// Delimited export: geoid column then d value columns; the header encodes
/// method and dimensionality.
std::string embedding_to_csv(const EmbeddingMatrix& emb, const MobilityNetwork& net);
void write_embedding(const EmbeddingMatrix& emb, const MobilityNetwork& net,
                     const std::filesystem::path& path);
/// Reads a file produced by write_embedding; rows are realigned to `net`.
EmbeddingMatrix read_embedding(const std::filesystem::path& path, const MobilityNetwork& net);

}  // namespace mobnet
