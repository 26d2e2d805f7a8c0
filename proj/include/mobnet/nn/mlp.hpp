#pragma once

#include "mobnet/nn/tape.hpp"
#include "mobnet/rng.hpp"

#include <string>
#include <vector>

namespace mobnet::nn {

enum class Activation { relu, linear };

/// Fully connected stack: hidden layers use the chosen activation, the
/// output layer is linear.
struct MlpSpec {
  Index input = 0;
  std::vector<Index> hidden;
  Index output = 1;
  Activation activation = Activation::relu;

  std::vector<Index> layer_sizes() const {
    std::vector<Index> sizes{input};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(output);
    return sizes;
  }
};

/// Glorot-uniform weights, zero biases, named <prefix>.w<l> / <prefix>.b<l>.
void init_mlp_params(ModelParams& params, const std::string& prefix, const MlpSpec& spec,
                     Rng& rng);

Var mlp_forward(Tape& tape, ModelParams& params, const std::string& prefix, Var x,
                const MlpSpec& spec);

/// Uniform in +-sqrt(6 / (fan_in + fan_out)); draw order is row-major.
Matrix glorot_uniform(Index rows, Index cols, Rng& rng);

}  // namespace mobnet::nn
