#pragma once

#include "mobnet/nn/params.hpp"

#include <string>
#include <unordered_map>

namespace mobnet::nn {

enum class OptKind { sgd, adam };

struct OptimizerConfig {
  OptKind kind = OptKind::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First-order update with per-parameter moment buffers (adam) keyed by
/// parameter name. Gradients must be populated by a backward pass; the
/// step consumes and zeroes them.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg = {}) : cfg_(cfg) {}

  void step(ModelParams& params);

  long step_count() const { return step_count_; }
  const OptimizerConfig& config() const { return cfg_; }

 private:
  struct Moments {
    Matrix m;
    Matrix v;
  };
  OptimizerConfig cfg_;
  long step_count_ = 0;
  std::unordered_map<std::string, Moments> moments_;
};

}  // namespace mobnet::nn
