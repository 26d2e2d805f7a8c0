#pragma once

#include "mobnet/embeddings.hpp"
#include "mobnet/types.hpp"

#include <cstdint>
#include <vector>

namespace mobnet {

struct ClusterAssignment {
  std::vector<int> labels;  // per row, in [0, k)
  Matrix centroids;         // k x d
  double inertia = 0.0;
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding. Runs `restarts` independent
/// seeded attempts and keeps the lowest inertia. Empty clusters are
/// re-seeded on the point farthest from its centroid, so every cluster id
/// appears at least once.
ClusterAssignment kmeans(const EmbeddingMatrix& emb, int k, std::uint64_t seed,
                         int max_iter = 100, int restarts = 10);

/// Best-permutation agreement between two labelings in [0, k); k <= 8.
double label_agreement(const std::vector<int>& a, const std::vector<int>& b, int k);

}  // namespace mobnet
