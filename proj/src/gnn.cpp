#include "mobnet/gnn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mobnet {

nn::Var gcn_layer(nn::Tape& tape, const SpMat* a_hat, nn::Var h, nn::Param& w, nn::Param& b,
                  bool apply_relu) {
  if (h.cols() != w.value.rows()) {
    throw Error("gcn_layer: input width " + std::to_string(h.cols()) +
                " does not match weight rows " + std::to_string(w.value.rows()));
  }
  nn::Var propagated = tape.spmm(a_hat, h);
  nn::Var out = tape.add_rowvec(tape.matmul(propagated, tape.param(w)), tape.param(b));
  return apply_relu ? tape.relu(out) : out;
}

nn::Var gat_layer(nn::Tape& tape, const Segments& seg, nn::Var h,
                  const std::vector<GatHeadParams>& heads, double leaky_slope,
                  HeadCombine combine, bool apply_relu, std::vector<Matrix>* attention_out) {
  if (heads.empty()) throw Error("gat_layer: needs at least one head");
  for (Index i = 0; i < seg.num_segments(); ++i) {
    if (seg.ranges[static_cast<std::size_t>(i)].first ==
        seg.ranges[static_cast<std::size_t>(i)].second) {
      throw Error("gat_layer: node " + std::to_string(i) + " has an empty neighborhood");
    }
  }
  std::vector<nn::Var> head_outputs;
  head_outputs.reserve(heads.size());
  for (const GatHeadParams& head : heads) {
    if (h.cols() != head.w->value.rows()) {
      throw Error("gat_layer: input width " + std::to_string(h.cols()) +
                  " does not match weight rows " + std::to_string(head.w->value.rows()));
    }
    nn::Var wh = tape.matmul(h, tape.param(*head.w));          // N x out
    nn::Var src_score = tape.matmul(wh, tape.param(*head.a_src));  // N x 1
    nn::Var dst_score = tape.matmul(wh, tape.param(*head.a_dst));  // N x 1
    nn::Var edge_score = tape.add(tape.gather_rows(src_score, seg.edge_src),
                                  tape.gather_rows(dst_score, seg.edge_dst));
    nn::Var alpha = tape.segment_softmax(tape.leaky_relu(edge_score, leaky_slope), seg);
    if (attention_out) attention_out->push_back(alpha.value());
    nn::Var messages = tape.scale_rows(tape.gather_rows(wh, seg.edge_dst), alpha);
    head_outputs.push_back(tape.segment_sum(messages, seg));
  }
  nn::Var combined = head_outputs.front();
  if (head_outputs.size() > 1) {
    if (combine == HeadCombine::concat) {
      for (std::size_t k = 1; k < head_outputs.size(); ++k) {
        combined = tape.concat_cols(combined, head_outputs[k]);
      }
    } else {
      for (std::size_t k = 1; k < head_outputs.size(); ++k) {
        combined = tape.add(combined, head_outputs[k]);
      }
      combined = tape.scale(combined, 1.0 / static_cast<double>(head_outputs.size()));
    }
  }
  return apply_relu ? tape.relu(combined) : combined;
}

GnnModel::GnnModel(const MobilityNetwork& net, const EmbeddingMatrix& h0, const GnnConfig& config)
    : cfg_(config), h0_(h0.values) {
  if (h0.n() != net.size()) throw Error("GnnModel: embedding rows must match the node count");
  if (cfg_.heads < 1) throw Error("GnnModel: heads must be >= 1");
  norm_ = normalize_adjacency(net, cfg_.symmetrize, cfg_.transform);
  segments_ = build_segments(norm_.a_tilde);

  Rng rng(cfg_.seed);
  const Index d0 = h0_.cols();
  if (cfg_.kind == GnnLayerKind::gcn) {
    params_.add("gcn1.w", nn::glorot_uniform(d0, cfg_.hidden1, rng));
    params_.add("gcn1.b", Matrix::Zero(1, cfg_.hidden1));
    params_.add("gcn2.w", nn::glorot_uniform(cfg_.hidden1, cfg_.hidden2, rng));
    params_.add("gcn2.b", Matrix::Zero(1, cfg_.hidden2));
  } else {
    for (Index k = 0; k < cfg_.heads; ++k) {
      const std::string p = "gat1.h" + std::to_string(k);
      params_.add(p + ".w", nn::glorot_uniform(d0, cfg_.hidden1, rng));
      params_.add(p + ".a_src", nn::glorot_uniform(cfg_.hidden1, 1, rng));
      params_.add(p + ".a_dst", nn::glorot_uniform(cfg_.hidden1, 1, rng));
    }
    const Index in2 = cfg_.hidden1 * cfg_.heads;  // layer 1 concatenates heads
    for (Index k = 0; k < cfg_.heads; ++k) {
      const std::string p = "gat2.h" + std::to_string(k);
      params_.add(p + ".w", nn::glorot_uniform(in2, cfg_.hidden2, rng));
      params_.add(p + ".a_src", nn::glorot_uniform(cfg_.hidden2, 1, rng));
      params_.add(p + ".a_dst", nn::glorot_uniform(cfg_.hidden2, 1, rng));
    }
  }
  nn::MlpSpec head;
  head.input = cfg_.hidden2;
  head.hidden = cfg_.head_hidden;
  head.output = 1;
  nn::init_mlp_params(params_, "head", head, rng);
  initialized_ = true;
}

nn::Var GnnModel::forward_layer(nn::Tape& tape, int layer) {
  if (!initialized_) throw Error("GnnModel: model has no parameters; construct it first");
  if (layer < 1 || layer > 2) throw Error("GnnModel: layer must be 1 or 2");
  nn::Var h = tape.leaf(h0_);
  if (cfg_.kind == GnnLayerKind::gcn) {
    h = gcn_layer(tape, &norm_.a_hat, h, params_.at("gcn1.w"), params_.at("gcn1.b"), true);
    if (layer == 2) {
      h = gcn_layer(tape, &norm_.a_hat, h, params_.at("gcn2.w"), params_.at("gcn2.b"), false);
    }
    return h;
  }
  auto collect = [&](int l) {
    std::vector<GatHeadParams> heads;
    for (Index k = 0; k < cfg_.heads; ++k) {
      const std::string p = "gat" + std::to_string(l) + ".h" + std::to_string(k);
      heads.push_back({&params_.at(p + ".w"), &params_.at(p + ".a_src"),
                       &params_.at(p + ".a_dst")});
    }
    return heads;
  };
  h = gat_layer(tape, segments_, h, collect(1), cfg_.leaky_slope, HeadCombine::concat, true,
                attention_capture_);
  if (layer == 2) {
    h = gat_layer(tape, segments_, h, collect(2), cfg_.leaky_slope, HeadCombine::average, false,
                  attention_capture_);
  }
  return h;
}

nn::Var GnnModel::forward(nn::Tape& tape, std::vector<Matrix>* attention_out) {
  attention_capture_ = attention_out;
  nn::Var h2 = forward_layer(tape, 2);
  attention_capture_ = nullptr;
  nn::MlpSpec head;
  head.input = cfg_.hidden2;
  head.hidden = cfg_.head_hidden;
  head.output = 1;
  return nn::mlp_forward(tape, params_, "head", h2, head);
}

Matrix GnnModel::hidden(int layer) {
  nn::Tape tape;
  return forward_layer(tape, layer).value();
}

nn::ModelParams& GnnModel::params() { return params_; }

GnnTrainResult train_end_to_end(const MobilityNetwork& net, const EmbeddingMatrix& h0,
                                const Vector& target, const std::vector<std::uint8_t>& target_valid,
                                const SplitPlan& split, const GnnConfig& config) {
  if (target.size() != net.size() ||
      target_valid.size() != static_cast<std::size_t>(net.size())) {
    throw Error("train_end_to_end: target vector must cover every node");
  }
  const auto train_idx = split.train_nodes();
  const auto test_idx = split.test_nodes();
  if (train_idx.empty()) throw Error("train_end_to_end: empty train mask");
  for (Index i : train_idx) {
    if (!target_valid[static_cast<std::size_t>(i)]) {
      throw Error("train node without a target: " + std::to_string(i));
    }
  }

  double mean = 0.0;
  for (Index i : train_idx) mean += target[i];
  mean /= static_cast<double>(train_idx.size());
  double var = 0.0;
  for (Index i : train_idx) var += (target[i] - mean) * (target[i] - mean);
  var /= static_cast<double>(train_idx.size());
  if (var == 0.0) throw Error("training target is constant; nothing to fit");
  const double sd = std::sqrt(var);

  Matrix y_std = Matrix::Zero(net.size(), 1);
  std::vector<std::uint8_t> train_mask(static_cast<std::size_t>(net.size()), 0);
  for (Index i : train_idx) {
    y_std(i, 0) = (target[i] - mean) / sd;
    train_mask[static_cast<std::size_t>(i)] = 1;
  }

  GnnTrainResult result;
  result.model = GnnModel(net, h0, config);
  nn::Optimizer optimizer(config.optimizer);

  double best_loss = std::numeric_limits<double>::infinity();
  int since_improvement = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    nn::Tape tape;
    nn::Var pred = result.model.forward(tape);
    nn::Var loss = tape.mse(pred, tape.leaf(y_std), train_mask);
    const double loss_value = loss.value()(0, 0);
    if (!std::isfinite(loss_value)) {
      throw Error("training loss became non-finite at epoch " + std::to_string(epoch));
    }
    tape.backward(loss);
    optimizer.step(result.model.params());
    result.loss_trace.push_back(loss_value);

    if (loss_value < best_loss * (1.0 - config.plateau_rel_improvement)) {
      best_loss = loss_value;
      since_improvement = 0;
    } else {
      best_loss = std::min(best_loss, loss_value);
      if (++since_improvement >= config.plateau_epochs) break;
    }
  }

  nn::Tape tape;
  Matrix pred_all = result.model.forward(tape).value();

  EvalReport& report = result.report;
  report.seeds = {config.seed};
  report.y_test.resize(static_cast<Index>(test_idx.size()));
  report.y_hat_test.resize(static_cast<Index>(test_idx.size()));
  for (std::size_t k = 0; k < test_idx.size(); ++k) {
    report.y_test[static_cast<Index>(k)] = target[test_idx[k]];
    report.y_hat_test[static_cast<Index>(k)] = pred_all(test_idx[k], 0) * sd + mean;
  }
  report.r2 = test_idx.empty() ? 0.0 : r_squared_or_zero(report.y_test, report.y_hat_test);
  report.per_seed_r2 = {report.r2};
  report.aggregate();
  return result;
}

EmbeddingMatrix extract_hidden(GnnModel& model, int layer) {
  if (!model.initialized()) throw Error("extract_hidden: model has no parameters");
  EmbeddingMatrix emb;
  emb.method = EmbeddingMethod::gnn_hidden;
  emb.values = model.hidden(layer);
  return emb;
}

}  // namespace mobnet
