#include "mobnet/nn/mlp.hpp"

#include <cmath>

namespace mobnet::nn {

Matrix glorot_uniform(Index rows, Index cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  }
  return m;
}

void init_mlp_params(ModelParams& params, const std::string& prefix, const MlpSpec& spec,
                     Rng& rng) {
  if (spec.input <= 0 || spec.output <= 0) throw Error("mlp spec needs positive widths");
  const auto sizes = spec.layer_sizes();
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    params.add(prefix + ".w" + std::to_string(l), glorot_uniform(sizes[l], sizes[l + 1], rng));
    params.add(prefix + ".b" + std::to_string(l), Matrix::Zero(1, sizes[l + 1]));
  }
}

Var mlp_forward(Tape& tape, ModelParams& params, const std::string& prefix, Var x,
                const MlpSpec& spec) {
  const auto sizes = spec.layer_sizes();
  Var h = x;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::string wname = prefix + ".w" + std::to_string(l);
    Param& w = params.at(wname);
    Param& b = params.at(prefix + ".b" + std::to_string(l));
    if (h.cols() != w.value.rows()) {
      throw Error("mlp layer " + wname + " expects input width " +
                  std::to_string(w.value.rows()) + ", got " + std::to_string(h.cols()));
    }
    h = tape.add_rowvec(tape.matmul(h, tape.param(w)), tape.param(b));
    const bool is_last = l + 2 == sizes.size();
    if (!is_last && spec.activation == Activation::relu) h = tape.relu(h);
  }
  return h;
}

}  // namespace mobnet::nn
