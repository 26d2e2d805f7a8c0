#include "mobnet/kmeans.hpp"

#include "mobnet/rng.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace mobnet {

namespace {

double sq_dist(const Matrix& x, Index row, const Matrix& centroids, Index c) {
  return (x.row(row) - centroids.row(c)).squaredNorm();
}

Matrix kmeanspp_init(const Matrix& x, int k, Rng& rng) {
  const Index n = x.rows();
  Matrix centroids(k, x.cols());
  centroids.row(0) = x.row(static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n))));
  Vector d2 = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) d2[i] = sq_dist(x, i, centroids, 0);
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Index chosen = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= target) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    }
    centroids.row(c) = x.row(chosen);
    for (Index i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(x, i, centroids, c));
  }
  return centroids;
}

struct SingleRun {
  std::vector<int> labels;
  Matrix centroids;
  double inertia;
  int iterations;
};

SingleRun lloyd(const Matrix& x, int k, Rng& rng, int max_iter) {
  const Index n = x.rows();
  Matrix centroids = kmeanspp_init(x, k, rng);
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  int iterations = 0;

  auto assign = [&](std::vector<int>& out) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int c = 0; c < k; ++c) {
        const double d = sq_dist(x, i, centroids, c);
        if (d < best) {
          best = d;
          arg = c;
        }
      }
      if (out[static_cast<std::size_t>(i)] != arg) changed = true;
      out[static_cast<std::size_t>(i)] = arg;
    }
    return changed;
  };

  for (int it = 0; it < max_iter; ++it) {
    ++iterations;
    const bool changed = assign(labels);

    // Re-seed empty clusters on the point farthest from its centroid.
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++counts[static_cast<std::size_t>(l)];
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      double worst = -1.0;
      Index worst_i = 0;
      for (Index i = 0; i < n; ++i) {
        const int l = labels[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(l)] <= 1) continue;
        const double d = sq_dist(x, i, centroids, l);
        if (d > worst) {
          worst = d;
          worst_i = i;
        }
      }
      --counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(worst_i)])];
      labels[static_cast<std::size_t>(worst_i)] = c;
      counts[static_cast<std::size_t>(c)] = 1;
      centroids.row(c) = x.row(worst_i);
    }

    Matrix sums = Matrix::Zero(k, x.cols());
    std::vector<Index> sizes(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
      ++sizes[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      centroids.row(c) = sums.row(c) / static_cast<double>(sizes[static_cast<std::size_t>(c)]);
    }
    if (!changed && it > 0) break;
  }

  double inertia = 0.0;
  for (Index i = 0; i < n; ++i) {
    inertia += sq_dist(x, i, centroids, labels[static_cast<std::size_t>(i)]);
  }
  return {std::move(labels), std::move(centroids), inertia, iterations};
}

}  // namespace

ClusterAssignment kmeans(const EmbeddingMatrix& emb, int k, std::uint64_t seed, int max_iter,
                         int restarts) {
  const Index n = emb.n();
  if (k < 1) throw Error("kmeans: k must be positive");
  if (static_cast<Index>(k) > n) throw Error("kmeans: k exceeds the number of points");
  if (restarts < 1) restarts = 1;

  SingleRun best{{}, Matrix(), std::numeric_limits<double>::infinity(), 0};
  for (int r = 0; r < restarts; ++r) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
    SingleRun run = lloyd(emb.values, k, rng, max_iter);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return {std::move(best.labels), std::move(best.centroids), best.inertia, best.iterations};
}

double label_agreement(const std::vector<int>& a, const std::vector<int>& b, int k) {
  if (a.size() != b.size() || a.empty()) throw Error("label_agreement: size mismatch");
  if (k > 8) throw Error("label_agreement: permutation search limited to k <= 8");
  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (perm[static_cast<std::size_t>(a[i])] == b[i]) ++hits;
    }
    best = std::max(best, static_cast<double>(hits) / static_cast<double>(a.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace mobnet
