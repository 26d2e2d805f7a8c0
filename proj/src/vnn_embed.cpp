#include "mobnet/vnn_embed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mobnet {

std::vector<std::pair<Index, Index>> enumerate_pairs(Index n) {
  std::vector<std::pair<Index, Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) pairs.emplace_back(i, j);
  }
  return pairs;
}

std::vector<std::pair<Index, Index>> balanced_pairs(const Matrix& target, Rng& rng) {
  const Index n = target.rows();
  std::vector<std::pair<Index, Index>> pairs;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (target(i, j) != 0.0) pairs.emplace_back(i, j);
    }
  }
  const std::size_t positives = pairs.size();
  std::size_t zeros = 0;
  std::size_t guard = 0;
  const std::size_t guard_limit = 1000 * positives + 1000;
  while (zeros < positives && guard < guard_limit) {
    ++guard;
    const Index i = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    const Index j = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    if (target(i, j) == 0.0) {
      pairs.emplace_back(i, j);
      ++zeros;
    }
  }
  rng.shuffle(pairs);
  return pairs;
}

Matrix pair_features(const Matrix& embedding, const std::vector<std::pair<Index, Index>>& pairs) {
  Matrix out(static_cast<Index>(pairs.size()), embedding.cols());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    auto diff = embedding.row(pairs[k].first) - embedding.row(pairs[k].second);
    out.row(static_cast<Index>(k)) = diff.cwiseProduct(diff);
  }
  return out;
}

Matrix reconstruction_target(const MobilityNetwork& net, WeightTransform transform,
                             bool symmetrize) {
  Matrix t = Matrix(apply_weight_transform(net.adjacency, transform));
  if (symmetrize) t = 0.5 * (t + t.transpose());
  return t;
}

namespace {

nn::MlpSpec reconstruction_mlp_spec(Index d) {
  nn::MlpSpec spec;
  spec.input = d;
  spec.hidden = {4 * d, 3 * d, d};
  spec.output = 1;
  return spec;
}

Matrix init_embedding_values(Index n, Index d, const EmbeddingMatrix* init, double noise,
                             Rng& rng) {
  Matrix e(n, d);
  const Index copied = init ? std::min(d, init->d()) : 0;
  if (init && init->n() != n) throw Error("embedding initializer has wrong row count");
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < d; ++c) {
      e(r, c) = c < copied ? init->values(r, c) : rng.uniform(-noise, noise);
    }
  }
  return e;
}

/// Forward pass over one batch of pairs; records gradients when params are
/// attached through tape.param.
nn::Var batch_prediction(nn::Tape& tape, nn::ModelParams& params, const nn::MlpSpec& mlp,
                         const std::vector<std::pair<Index, Index>>& pairs, std::size_t begin,
                         std::size_t end) {
  std::vector<Index> src, dst;
  src.reserve(end - begin);
  dst.reserve(end - begin);
  for (std::size_t k = begin; k < end; ++k) {
    src.push_back(pairs[k].first);
    dst.push_back(pairs[k].second);
  }
  nn::Var e = tape.param(params.at("embedding"));
  nn::Var left = tape.gather_rows(e, std::move(src));
  nn::Var right = tape.gather_rows(e, std::move(dst));
  nn::Var features = tape.squared_diff(left, right);
  return nn::mlp_forward(tape, params, "recon", features, mlp);
}

Matrix batch_targets(const Matrix& target, const std::vector<std::pair<Index, Index>>& pairs,
                     std::size_t begin, std::size_t end) {
  Matrix t(static_cast<Index>(end - begin), 1);
  for (std::size_t k = begin; k < end; ++k) {
    t(static_cast<Index>(k - begin), 0) = target(pairs[k].first, pairs[k].second);
  }
  return t;
}

}  // namespace

double reconstruction_mse(nn::ModelParams& params, const nn::MlpSpec& mlp, const Matrix& target,
                          Index batch_size) {
  const Index n = target.rows();
  const Matrix& e = params.at("embedding").value;
  if (e.rows() != n) throw Error("reconstruction_mse: embedding/target size mismatch");
  double total = 0.0;
  std::vector<std::pair<Index, Index>> pairs = enumerate_pairs(n);
  for (std::size_t begin = 0; begin < pairs.size(); begin += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(pairs.size(), begin + static_cast<std::size_t>(batch_size));
    nn::Tape tape;  // value-only pass; never differentiated
    nn::Var pred = batch_prediction(tape, params, mlp, pairs, begin, end);
    Matrix t = batch_targets(target, pairs, begin, end);
    total += (pred.value() - t).squaredNorm();
  }
  return total / static_cast<double>(pairs.size());
}

VnnEmbedModel train_vnn_embedding(const MobilityNetwork& net, const EmbeddingMatrix* init,
                                  const VnnTrainConfig& config,
                                  const PairProvider* sampler_override) {
  if (config.d < 1) throw Error("train_vnn_embedding: d must be positive");
  const Index n = net.size();
  Matrix target = reconstruction_target(net, config.transform, config.symmetrize);

  VnnEmbedModel model;
  model.config = config;
  model.mlp = reconstruction_mlp_spec(config.d);

  Rng rng(config.seed);
  model.params.add("embedding", init_embedding_values(n, config.d, init, config.init_noise, rng));
  nn::init_mlp_params(model.params, "recon", model.mlp, rng);

  model.initial_mse = reconstruction_mse(model.params, model.mlp, target);

  const bool use_all_pairs =
      config.sampling == PairSampling::all_pairs ||
      (config.sampling == PairSampling::automatic && n <= 600);
  auto default_sampler = [&](int, Rng& r) {
    if (use_all_pairs) {
      auto pairs = enumerate_pairs(n);
      r.shuffle(pairs);
      return pairs;
    }
    return balanced_pairs(target, r);
  };

  nn::Optimizer optimizer(config.optimizer);
  double best_loss = std::numeric_limits<double>::infinity();
  int epochs_since_improvement = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::pair<Index, Index>> pairs =
        sampler_override ? (*sampler_override)(epoch, rng) : default_sampler(epoch, rng);
    if (pairs.empty()) throw Error("pair sampler produced an empty epoch");

    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < pairs.size();
         begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(pairs.size(), begin + static_cast<std::size_t>(config.batch_size));
      nn::Tape tape;
      nn::Var pred = batch_prediction(tape, model.params, model.mlp, pairs, begin, end);
      nn::Var t = tape.leaf(batch_targets(target, pairs, begin, end));
      nn::Var loss = tape.mse(pred, t);
      const double loss_value = loss.value()(0, 0);
      if (!std::isfinite(loss_value)) {
        throw Error("reconstruction loss became non-finite at epoch " + std::to_string(epoch));
      }
      tape.backward(loss);
      optimizer.step(model.params);
      epoch_loss += loss_value;
      ++batches;
    }
    epoch_loss /= static_cast<double>(batches);
    model.loss_trace.push_back(epoch_loss);

    if (epoch_loss < best_loss * (1.0 - config.plateau_rel_improvement)) {
      best_loss = epoch_loss;
      epochs_since_improvement = 0;
    } else {
      best_loss = std::min(best_loss, epoch_loss);
      if (++epochs_since_improvement >= config.plateau_epochs) break;
    }
  }

  model.final_mse = reconstruction_mse(model.params, model.mlp, target);
  return model;
}

EmbeddingMatrix VnnEmbedModel::learned_embedding(bool standardize_columns) const {
  EmbeddingMatrix emb;
  emb.method = EmbeddingMethod::vnn_trained;
  emb.values = params.at("embedding").value;
  if (standardize_columns) standardize(emb);
  return emb;
}

EvalReport predict_income_from_embedding(const EmbeddingMatrix& emb, const Vector& target,
                                         const std::vector<std::uint8_t>& target_valid,
                                         const SplitPlan& split, const HeadConfig& head) {
  if (emb.n() != target.size() ||
      target_valid.size() != static_cast<std::size_t>(target.size())) {
    throw Error("predict_income_from_embedding: embedding/target size mismatch");
  }
  const auto train_idx = split.train_nodes();
  const auto test_idx = split.test_nodes();
  if (train_idx.empty() || test_idx.empty()) throw Error("split has an empty side");
  for (Index i : train_idx) {
    if (!target_valid[static_cast<std::size_t>(i)]) {
      throw Error("train node without a target: " + std::to_string(i));
    }
  }

  // Standardize the target with train-set moments only.
  double mean = 0.0;
  for (Index i : train_idx) mean += target[i];
  mean /= static_cast<double>(train_idx.size());
  double var = 0.0;
  for (Index i : train_idx) var += (target[i] - mean) * (target[i] - mean);
  var /= static_cast<double>(train_idx.size());
  if (var == 0.0) throw Error("training target is constant; nothing to fit");
  const double sd = std::sqrt(var);

  Matrix x_train(static_cast<Index>(train_idx.size()), emb.d());
  Matrix y_train(static_cast<Index>(train_idx.size()), 1);
  for (std::size_t k = 0; k < train_idx.size(); ++k) {
    x_train.row(static_cast<Index>(k)) = emb.values.row(train_idx[k]);
    y_train(static_cast<Index>(k), 0) = (target[train_idx[k]] - mean) / sd;
  }

  nn::MlpSpec spec;
  spec.input = emb.d();
  spec.hidden = head.hidden;
  spec.output = 1;

  Rng rng(head.seed);
  nn::ModelParams params;
  nn::init_mlp_params(params, "head", spec, rng);
  nn::Optimizer optimizer(head.optimizer);

  double best_loss = std::numeric_limits<double>::infinity();
  int since_improvement = 0;
  for (int epoch = 0; epoch < head.epochs; ++epoch) {
    nn::Tape tape;
    nn::Var x = tape.leaf(x_train);
    nn::Var pred = nn::mlp_forward(tape, params, "head", x, spec);
    nn::Var loss = tape.mse(pred, tape.leaf(y_train));
    const double loss_value = loss.value()(0, 0);
    if (!std::isfinite(loss_value)) {
      throw Error("head loss became non-finite at epoch " + std::to_string(epoch));
    }
    tape.backward(loss);
    optimizer.step(params);
    if (loss_value < best_loss * (1.0 - head.plateau_rel_improvement)) {
      best_loss = loss_value;
      since_improvement = 0;
    } else {
      best_loss = std::min(best_loss, loss_value);
      if (++since_improvement >= head.plateau_epochs) break;
    }
  }

  Matrix x_test(static_cast<Index>(test_idx.size()), emb.d());
  for (std::size_t k = 0; k < test_idx.size(); ++k) {
    x_test.row(static_cast<Index>(k)) = emb.values.row(test_idx[k]);
  }
  nn::Tape tape;
  nn::Var pred = nn::mlp_forward(tape, params, "head", tape.leaf(x_test), spec);

  EvalReport report;
  report.seeds = {head.seed};
  report.y_test.resize(static_cast<Index>(test_idx.size()));
  report.y_hat_test.resize(static_cast<Index>(test_idx.size()));
  for (std::size_t k = 0; k < test_idx.size(); ++k) {
    report.y_test[static_cast<Index>(k)] = target[test_idx[k]];
    report.y_hat_test[static_cast<Index>(k)] = pred.value()(static_cast<Index>(k), 0) * sd + mean;
  }
  report.r2 = r_squared_or_zero(report.y_test, report.y_hat_test);
  report.per_seed_r2 = {report.r2};
  report.aggregate();
  return report;
}

}  // namespace mobnet
