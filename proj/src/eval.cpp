#include "mobnet/eval.hpp"

#include "mobnet/rng.hpp"
#include "mobnet/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mobnet {

std::vector<Index> SplitPlan::train_nodes(int fold) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const bool is_test = kind == SplitKind::holdout ? assignment[i] == 1 : assignment[i] == fold;
    if (!is_test) out.push_back(nodes[i]);
  }
  return out;
}

std::vector<Index> SplitPlan::test_nodes(int fold) const {
  std::vector<Index> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const bool is_test = kind == SplitKind::holdout ? assignment[i] == 1 : assignment[i] == fold;
    if (is_test) out.push_back(nodes[i]);
  }
  return out;
}

SplitSpec split_spec_from_string(const std::string& s) {
  SplitSpec spec;
  auto colon = s.find(':');
  const std::string kind = s.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : s.substr(colon + 1);
  if (kind == "holdout") {
    spec.kind = SplitKind::holdout;
    if (!arg.empty()) {
      auto f = parse_double(arg);
      if (!f || *f <= 0.0 || *f >= 1.0) throw Error("bad holdout fraction: " + s);
      spec.train_fraction = *f;
    }
  } else if (kind == "kfold") {
    spec.kind = SplitKind::kfold;
    if (!arg.empty()) {
      auto k = parse_int(arg);
      if (!k || *k < 2) throw Error("bad fold count: " + s);
      spec.k = static_cast<int>(*k);
    }
  } else {
    throw Error("unknown split kind: " + s);
  }
  return spec;
}

std::string to_string(const SplitSpec& spec) {
  if (spec.kind == SplitKind::holdout) return "holdout:" + format_double(spec.train_fraction);
  return "kfold:" + std::to_string(spec.k);
}

SplitPlan make_split(const std::vector<Index>& nodes_with_targets, const SplitSpec& spec,
                     std::uint64_t seed) {
  const std::size_t n = nodes_with_targets.size();
  if (n < 10) {
    throw Error("make_split needs at least 10 nodes with targets, got " + std::to_string(n));
  }
  SplitPlan plan;
  plan.kind = spec.kind;
  plan.train_fraction = spec.train_fraction;
  plan.k = spec.k;
  plan.seed = seed;
  plan.nodes = nodes_with_targets;
  std::sort(plan.nodes.begin(), plan.nodes.end());

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  plan.assignment.assign(n, 0);
  if (spec.kind == SplitKind::holdout) {
    std::size_t n_train = static_cast<std::size_t>(
        std::llround(spec.train_fraction * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    for (std::size_t i = n_train; i < n; ++i) plan.assignment[order[i]] = 1;
  } else {
    if (spec.k < 2 || static_cast<std::size_t>(spec.k) > n) {
      throw Error("kfold: invalid number of folds");
    }
    for (std::size_t i = 0; i < n; ++i) {
      plan.assignment[order[i]] = static_cast<int>(i % static_cast<std::size_t>(spec.k));
    }
  }
  return plan;
}

double r_squared(const Vector& y, const Vector& y_hat) {
  if (y.size() != y_hat.size()) throw Error("r_squared: length mismatch");
  if (y.size() < 2) throw Error("r_squared needs at least 2 observations");
  const double mean = y.mean();
  const double ss_tot = (y.array() - mean).square().sum();
  if (ss_tot == 0.0) throw Error("r_squared undefined: constant ground truth");
  const double ss_res = (y - y_hat).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

double r_squared_or_zero(const Vector& y, const Vector& y_hat) {
  const double mean = y.mean();
  if ((y.array() - mean).square().sum() == 0.0) return 0.0;
  return r_squared(y, y_hat);
}

void EvalReport::aggregate() {
  if (per_seed_r2.empty()) return;
  double sum = 0.0;
  for (double v : per_seed_r2) sum += v;
  r2_mean = sum / static_cast<double>(per_seed_r2.size());
  if (per_seed_r2.size() > 1) {
    double ss = 0.0;
    for (double v : per_seed_r2) ss += (v - r2_mean) * (v - r2_mean);
    r2_halfwidth = std::sqrt(ss / static_cast<double>(per_seed_r2.size() - 1));
  } else {
    r2_halfwidth = 0.0;
  }
}

std::string fingerprint(const std::string& canonical_config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_config) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mobnet
