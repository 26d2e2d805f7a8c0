#pragma once

#include "mobnet/types.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace mobnet::nn {

/// A named trainable tensor with its gradient slot.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  bool grad_populated = false;

  Param(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}
};

/// Ordered set of uniquely named parameters. Pointers stay stable across
/// insertions so the tape and optimizer can hold them.
class ModelParams {
 public:
  Param& add(const std::string& name, Matrix value);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  Param* find(const std::string& name);
  bool contains(const std::string& name) const;

  std::vector<Param*> all();
  std::vector<const Param*> all() const;
  std::size_t size() const { return items_.size(); }

  void zero_grads();

 private:
  std::vector<std::unique_ptr<Param>> items_;
};

/// Text checkpoint with hexfloat values; load(save(p)) is bit-exact.
std::string params_to_string(const ModelParams& params);
void save_params(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_params(const std::filesystem::path& path);
ModelParams params_from_string(const std::string& text);

}  // namespace mobnet::nn
