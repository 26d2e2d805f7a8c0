#pragma once

#include "mobnet/embeddings.hpp"
#include "mobnet/eval.hpp"
#include "mobnet/graph.hpp"
#include "mobnet/nn/mlp.hpp"
#include "mobnet/nn/optim.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mobnet {

enum class GnnLayerKind { gcn, gat };
enum class HeadCombine { concat, average };

struct GnnConfig {
  GnnLayerKind kind = GnnLayerKind::gcn;
  Index hidden1 = 64;
  Index hidden2 = 16;
  Index heads = 4;            // gat only
  double leaky_slope = 0.2;   // gat attention scores
  std::vector<Index> head_hidden = {32};  // MLP after the graph layers
  nn::OptimizerConfig optimizer;
  int epochs = 300;
  std::uint64_t seed = 0;
  int plateau_epochs = 30;
  double plateau_rel_improvement = 1e-4;
  WeightTransform transform = WeightTransform::log1p;
  bool symmetrize = true;
};

/// One graph convolution: activation(A_hat * H * W + b). The propagation
/// operator must outlive the tape's backward pass.
nn::Var gcn_layer(nn::Tape& tape, const SpMat* a_hat, nn::Var h, nn::Param& w, nn::Param& b,
                  bool apply_relu);

struct GatHeadParams {
  nn::Param* w;      // in x out
  nn::Param* a_src;  // out x 1
  nn::Param* a_dst;  // out x 1
};

/// Multi-head attention layer over the neighbor segments. Per head:
/// scores(i,j) = leaky_relu(a_src . W h_i + a_dst . W h_j), softmax over
/// N(i), output_i = sum_j alpha_ij W h_j. Heads are concatenated or
/// averaged. When `attention_out` is given, each head's alpha column is
/// appended to it.
nn::Var gat_layer(nn::Tape& tape, const Segments& seg, nn::Var h,
                  const std::vector<GatHeadParams>& heads, double leaky_slope,
                  HeadCombine combine, bool apply_relu,
                  std::vector<Matrix>* attention_out = nullptr);

/// Two graph layers (ReLU after the first, linear second) + MLP head,
/// trained transductively: the forward pass covers the whole graph and the
/// loss is masked to train nodes.
class GnnModel {
 public:
  GnnModel() = default;
  GnnModel(const MobilityNetwork& net, const EmbeddingMatrix& h0, const GnnConfig& config);

  /// Full forward pass to scalar predictions (standardized target scale).
  nn::Var forward(nn::Tape& tape, std::vector<Matrix>* attention_out = nullptr);
  /// Forward through the graph layers only; layer is 1 or 2.
  nn::Var forward_layer(nn::Tape& tape, int layer);
  /// H^l as plain values; requires an initialized model.
  Matrix hidden(int layer);

  nn::ModelParams& params();
  const GnnConfig& config() const { return cfg_; }
  const NormalizedAdjacency& propagation() const { return norm_; }
  bool initialized() const { return initialized_; }

 private:
  GnnConfig cfg_;
  Matrix h0_;
  NormalizedAdjacency norm_;
  Segments segments_;
  nn::ModelParams params_;
  bool initialized_ = false;
  std::vector<Matrix>* attention_capture_ = nullptr;  // set during forward()
};

struct GnnTrainResult {
  GnnModel model;
  EvalReport report;
  std::vector<double> loss_trace;  // masked train loss per epoch
};

GnnTrainResult train_end_to_end(const MobilityNetwork& net, const EmbeddingMatrix& h0,
                                const Vector& target, const std::vector<std::uint8_t>& target_valid,
                                const SplitPlan& split, const GnnConfig& config);

/// H^1 or H^2 as an inspectable embedding (method gnn_hidden).
EmbeddingMatrix extract_hidden(GnnModel& model, int layer);

}  // namespace mobnet
