#pragma once

#include "mobnet/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mobnet {

enum class SplitKind { holdout, kfold };

/// Train/test partition over the nodes that carry a target. holdout keeps
/// train_fraction of them for training; kfold assigns each node to exactly
/// one fold.
struct SplitPlan {
  SplitKind kind = SplitKind::holdout;
  double train_fraction = 0.7;
  int k = 5;
  std::uint64_t seed = 0;
  std::vector<Index> nodes;      // node ids with targets, in assignment order
  std::vector<int> assignment;   // holdout: 0 train / 1 test; kfold: fold id

  std::vector<Index> train_nodes(int fold = 0) const;
  std::vector<Index> test_nodes(int fold = 0) const;
  int num_folds() const { return kind == SplitKind::kfold ? k : 1; }
};

struct SplitSpec {
  SplitKind kind = SplitKind::holdout;
  double train_fraction = 0.7;
  int k = 5;
};

/// Parses "holdout:0.7" or "kfold:5".
SplitSpec split_spec_from_string(const std::string& s);
std::string to_string(const SplitSpec& spec);

/// Uniform random assignment, deterministic per seed. Needs >= 10 nodes.
SplitPlan make_split(const std::vector<Index>& nodes_with_targets, const SplitSpec& spec,
                     std::uint64_t seed);

/// 1 - sum((y - yhat)^2) / sum((y - mean(y))^2). Throws when y is constant.
double r_squared(const Vector& y, const Vector& y_hat);

/// Pipeline-facing variant: a constant test target makes the score 0
/// instead of raising.
double r_squared_or_zero(const Vector& y, const Vector& y_hat);

/// Out-of-sample predictions and score for one or more seeds of one
/// configuration. r2 values are on the original target scale.
struct EvalReport {
  Vector y_test;
  Vector y_hat_test;
  double r2 = 0.0;
  std::string config_fingerprint;
  std::vector<std::uint64_t> seeds;
  std::vector<double> per_seed_r2;
  double r2_mean = 0.0;
  double r2_halfwidth = 0.0;  // sample standard deviation over seeds
  double runtime_s = 0.0;

  /// Fills r2_mean / r2_halfwidth from per_seed_r2.
  void aggregate();
};

/// FNV-1a over a canonical config string; short hex tag for reports.
std::string fingerprint(const std::string& canonical_config);

}  // namespace mobnet
