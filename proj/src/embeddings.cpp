#include "mobnet/embeddings.hpp"

#include "mobnet/text_io.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace mobnet {

EmbeddingMethod embedding_method_from_string(const std::string& s) {
  if (s == "spatial") return EmbeddingMethod::spatial;
  if (s == "svd") return EmbeddingMethod::svd;
  if (s == "laplacian") return EmbeddingMethod::laplacian;
  if (s == "randomwalk" || s == "random_walk") return EmbeddingMethod::random_walk;
  if (s == "vnn_trained") return EmbeddingMethod::vnn_trained;
  if (s == "gnn_hidden") return EmbeddingMethod::gnn_hidden;
  if (s == "features") return EmbeddingMethod::features;
  if (s == "concat") return EmbeddingMethod::concat;
  throw Error("unknown embedding method: " + s);
}

std::string to_string(EmbeddingMethod m) {
  switch (m) {
    case EmbeddingMethod::spatial: return "spatial";
    case EmbeddingMethod::svd: return "svd";
    case EmbeddingMethod::laplacian: return "laplacian";
    case EmbeddingMethod::random_walk: return "random_walk";
    case EmbeddingMethod::vnn_trained: return "vnn_trained";
    case EmbeddingMethod::gnn_hidden: return "gnn_hidden";
    case EmbeddingMethod::features: return "features";
    case EmbeddingMethod::concat: return "concat";
  }
  return "features";
}

void standardize(EmbeddingMatrix& emb) {
  const Index n = emb.n();
  const Index d = emb.d();
  if (n == 0) throw Error("standardize: empty embedding");
  emb.col_mean = emb.values.colwise().mean();
  emb.col_std = Vector::Zero(d);
  for (Index c = 0; c < d; ++c) {
    const double mean = emb.col_mean[c];
    double var = 0.0;
    for (Index r = 0; r < n; ++r) {
      const double dv = emb.values(r, c) - mean;
      var += dv * dv;
    }
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    if (sd > 0.0) {
      emb.col_std[c] = sd;
      for (Index r = 0; r < n; ++r) emb.values(r, c) = (emb.values(r, c) - mean) / sd;
    } else {
      // Constant column carries no signal; zero it rather than divide.
      emb.values.col(c).setZero();
    }
  }
  emb.standardized = true;
}

EmbeddingMatrix spatial_embedding(const MobilityNetwork& net, const AttributeTable& centroids,
                                  const std::string& lon_column, const std::string& lat_column,
                                  bool standardize_columns) {
  const int lon_c = centroids.column(lon_column);
  const int lat_c = centroids.column(lat_column);
  if (lon_c < 0 || lat_c < 0) {
    throw Error("centroid table needs columns '" + lon_column + "' and '" + lat_column + "'");
  }
  std::unordered_map<RegionId, Index> row_of;
  for (std::size_t i = 0; i < centroids.regions.size(); ++i) {
    row_of[centroids.regions[i]] = static_cast<Index>(i);
  }
  EmbeddingMatrix emb;
  emb.method = EmbeddingMethod::spatial;
  emb.values.resize(net.size(), 2);
  std::string missing;
  for (Index i = 0; i < net.size(); ++i) {
    const RegionId& r = net.regions[static_cast<std::size_t>(i)];
    auto it = row_of.find(r);
    if (it == row_of.end() || centroids.missing(it->second, lon_c) ||
        centroids.missing(it->second, lat_c)) {
      missing += missing.empty() ? r.geoid : ", " + r.geoid;
      continue;
    }
    emb.values(i, 0) = centroids.values(it->second, lon_c);
    emb.values(i, 1) = centroids.values(it->second, lat_c);
  }
  if (!missing.empty()) throw Error("missing centroids for regions: " + missing);
  if (standardize_columns) standardize(emb);
  return emb;
}

namespace {

void fix_column_signs(Matrix& u, Matrix* v = nullptr) {
  for (Index c = 0; c < u.cols(); ++c) {
    Index arg_max = 0;
    u.col(c).cwiseAbs().maxCoeff(&arg_max);
    if (u(arg_max, c) < 0.0) {
      u.col(c) = -u.col(c);
      if (v) v->col(c) = -v->col(c);
    }
  }
}

}  // namespace

EmbeddingMatrix svd_embedding(const MobilityNetwork& net, Index d, WeightTransform transform,
                              bool standardize_columns) {
  const Index n = net.size();
  if (d < 1) throw Error("svd_embedding: d must be positive");
  if (d > n) throw Error("svd_embedding: d exceeds node count");
  Matrix a = Matrix(apply_weight_transform(net.adjacency, transform));
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Matrix u = svd.matrixU().leftCols(d);
  Matrix v = svd.matrixV().leftCols(d);
  fix_column_signs(u, &v);
  Vector s = svd.singularValues().head(d);
  EmbeddingMatrix emb;
  emb.method = EmbeddingMethod::svd;
  emb.values = u * s.array().sqrt().matrix().asDiagonal();
  if (standardize_columns) standardize(emb);
  return emb;
}

Matrix svd_rank_reconstruction(const Matrix& a, Index d) {
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU().leftCols(d) * svd.singularValues().head(d).asDiagonal() *
         svd.matrixV().leftCols(d).transpose();
}

std::pair<Vector, Matrix> laplacian_spectrum(const MobilityNetwork& net,
                                             WeightTransform transform) {
  NormalizedAdjacency norm = normalize_adjacency(net, /*symmetrize=*/true, transform);
  Matrix l = Matrix::Identity(net.size(), net.size()) - Matrix(norm.a_hat);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(l);
  if (solver.info() != Eigen::Success) throw Error("laplacian eigendecomposition failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

EmbeddingMatrix laplacian_embedding(const MobilityNetwork& net, Index d,
                                    WeightTransform transform, bool standardize_columns) {
  const Index n = net.size();
  if (d < 1) throw Error("laplacian_embedding: d must be positive");
  if (d >= n) throw Error("laplacian_embedding: d must be smaller than the node count");
  auto [eigenvalues, eigenvectors] = laplacian_spectrum(net, transform);
  constexpr double kZeroTol = 1e-9;
  Index first_nonzero = 0;
  while (first_nonzero < n && eigenvalues[first_nonzero] < kZeroTol) ++first_nonzero;
  if (first_nonzero + d > n) {
    throw Error("laplacian_embedding: only " + std::to_string(n - first_nonzero) +
                " non-zero eigenvalues available, need " + std::to_string(d));
  }
  Matrix u = eigenvectors.middleCols(first_nonzero, d);
  fix_column_signs(u);
  EmbeddingMatrix emb;
  emb.method = EmbeddingMethod::laplacian;
  emb.values = std::move(u);
  if (standardize_columns) standardize(emb);
  return emb;
}

Vector pagerank(const SpMat& transition, double damping, double tol, int max_iterations) {
  const Index n = transition.rows();
  const SpMat pt = SpMat(transition.transpose());
  Vector x = Vector::Constant(n, 1.0 / static_cast<double>(n));
  const Vector teleport = Vector::Constant(n, (1.0 - damping) / static_cast<double>(n));
  for (int it = 0; it < max_iterations; ++it) {
    Vector next = damping * (pt * x) + teleport;
    const double residual = (next - x).lpNorm<1>();
    x = std::move(next);
    if (residual < tol) return x;
  }
  throw Error("pagerank failed to converge after " + std::to_string(max_iterations) +
              " iterations");
}

EmbeddingMatrix random_walk_embedding(const MobilityNetwork& net, Index d,
                                      RandomWalkVariant variant, bool standardize_columns) {
  if (d < 1) throw Error("random_walk_embedding: d must be positive");
  const Index n = net.size();
  SpMat p = row_normalize(net.adjacency);
  EmbeddingMatrix emb;
  emb.method = EmbeddingMethod::random_walk;
  emb.values.resize(n, d);
  switch (variant) {
    case RandomWalkVariant::pagerank_multi_damping: {
      Vector alphas = Vector::LinSpaced(d, 0.05, 0.95);
      for (Index c = 0; c < d; ++c) emb.values.col(c) = pagerank(p, alphas[c]);
      break;
    }
    case RandomWalkVariant::k_step_landing: {
      Matrix dense_p = Matrix(p);
      Matrix power = Matrix::Identity(n, n);
      for (Index c = 0; c < d; ++c) {
        power = power * dense_p;
        emb.values.col(c) = power.diagonal();
      }
      break;
    }
  }
  if (standardize_columns) standardize(emb);
  return emb;
}

std::string embedding_to_csv(const EmbeddingMatrix& emb, const MobilityNetwork& net) {
  if (emb.n() != net.size()) throw Error("embedding and network sizes differ");
  std::string out = "geoid";
  const std::string tag = to_string(emb.method) + "_d" + std::to_string(emb.d());
  for (Index c = 0; c < emb.d(); ++c) out += "," + tag + "_" + std::to_string(c);
  out += '\n';
  for (Index i = 0; i < emb.n(); ++i) {
    out += net.regions[static_cast<std::size_t>(i)].geoid;
    for (Index c = 0; c < emb.d(); ++c) {
      out += ',';
      out += format_double(emb.values(i, c));
    }
    out += '\n';
  }
  return out;
}

void write_embedding(const EmbeddingMatrix& emb, const MobilityNetwork& net,
                     const std::filesystem::path& path) {
  atomic_write(path, embedding_to_csv(emb, net));
}

EmbeddingMatrix read_embedding(const std::filesystem::path& path, const MobilityNetwork& net) {
  DelimitedTable table = read_delimited(path, ',');
  if (table.header.empty() || table.header[0] != "geoid") {
    throw Error("embedding file needs a geoid header column: " + path.string());
  }
  const Index d = static_cast<Index>(table.header.size()) - 1;
  if (d < 1) throw Error("embedding file has no value columns: " + path.string());
  EmbeddingMatrix emb;
  // Header columns look like <method>_d<d>_<j>.
  std::string first = table.header[1];
  auto pos = first.find("_d");
  emb.method = pos == std::string::npos ? EmbeddingMethod::features
                                        : embedding_method_from_string(first.substr(0, pos));
  emb.values = Matrix::Zero(net.size(), d);
  std::vector<bool> seen(static_cast<std::size_t>(net.size()), false);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() != table.header.size()) {
      throw Error("embedding row " + std::to_string(table.line_numbers[r]) + " has " +
                  std::to_string(row.size()) + " cells, expected " +
                  std::to_string(table.header.size()));
    }
    const Index i = net.index_of(RegionId(row[0]));
    seen[static_cast<std::size_t>(i)] = true;
    for (Index c = 0; c < d; ++c) {
      auto v = parse_double(row[static_cast<std::size_t>(c) + 1]);
      if (!v) throw Error("bad embedding value at line " + std::to_string(table.line_numbers[r]));
      emb.values(i, c) = *v;
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw Error("embedding file missing region " + net.regions[i].geoid);
  }
  return emb;
}

}  // namespace mobnet
