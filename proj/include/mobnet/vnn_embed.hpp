#pragma once

#include "mobnet/embeddings.hpp"
#include "mobnet/eval.hpp"
#include "mobnet/graph.hpp"
#include "mobnet/nn/mlp.hpp"
#include "mobnet/nn/optim.hpp"
#include "mobnet/rng.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace mobnet {

enum class PairSampling { automatic, all_pairs, balanced };

/// Stage 1: reconstruct the (transformed, symmetrized) adjacency from a
/// trainable node embedding. The embedding rows are gathered per pair,
/// combined as the elementwise squared difference, and mapped to a scalar
/// by an MLP with hidden widths (4d, 3d, d).
struct VnnTrainConfig {
  Index d = 5;
  int epochs = 200;
  Index batch_size = 4096;
  PairSampling sampling = PairSampling::automatic;  // all_pairs while N <= 600
  nn::OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  WeightTransform transform = WeightTransform::log1p;
  bool symmetrize = true;
  int plateau_epochs = 20;
  double plateau_rel_improvement = 1e-4;
  double init_noise = 0.1;  // uniform bound for random embedding entries
};

struct VnnEmbedModel {
  nn::ModelParams params;  // "embedding" plus "recon.*"
  nn::MlpSpec mlp;
  VnnTrainConfig config;
  std::vector<double> loss_trace;  // mean batch loss per epoch
  double initial_mse = 0.0;        // full reconstruction MSE before training
  double final_mse = 0.0;          // and after

  EmbeddingMatrix learned_embedding(bool standardize_columns = true) const;
};

/// Row-major enumeration of every ordered pair, i = j included.
std::vector<std::pair<Index, Index>> enumerate_pairs(Index n);

/// Every non-zero pair of `target` plus an equal number of uniformly
/// sampled zero pairs.
std::vector<std::pair<Index, Index>> balanced_pairs(const Matrix& target, Rng& rng);

/// (e_i - e_j)^2 rows for the given pairs; what the reconstruction MLP sees.
Matrix pair_features(const Matrix& embedding, const std::vector<std::pair<Index, Index>>& pairs);

/// Reconstruction target: transformed and optionally symmetrized adjacency.
Matrix reconstruction_target(const MobilityNetwork& net, WeightTransform transform,
                             bool symmetrize);

/// Per-epoch pair stream override; the default follows config.sampling.
using PairProvider =
    std::function<std::vector<std::pair<Index, Index>>(int epoch, Rng& rng)>;

/// Joint gradient descent on the embedding and the reconstruction MLP.
/// When `init` is given, min(d, init->d()) columns seed the embedding and
/// the remainder is uniform noise.
VnnEmbedModel train_vnn_embedding(const MobilityNetwork& net, const EmbeddingMatrix* init,
                                  const VnnTrainConfig& config,
                                  const PairProvider* sampler_override = nullptr);

/// Full all-pairs reconstruction MSE of the model against `target`,
/// evaluated in batches without recording gradients.
double reconstruction_mse(nn::ModelParams& params, const nn::MlpSpec& mlp, const Matrix& target,
                          Index batch_size = 8192);

/// Stage 2 (also the contextual-feature benchmark): supervised MLP from a
/// feature matrix to the target, trained on the split's train nodes; the
/// score is out-of-sample R^2 on the original target scale.
struct HeadConfig {
  std::vector<Index> hidden = {32, 64, 32};
  nn::OptimizerConfig optimizer;
  int epochs = 600;
  std::uint64_t seed = 0;
  int plateau_epochs = 50;
  double plateau_rel_improvement = 1e-4;
};

EvalReport predict_income_from_embedding(const EmbeddingMatrix& emb, const Vector& target,
                                         const std::vector<std::uint8_t>& target_valid,
                                         const SplitPlan& split, const HeadConfig& head);

}  // namespace mobnet
