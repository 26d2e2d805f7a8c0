#include "mobnet/nn/optim.hpp"

#include <cmath>

namespace mobnet::nn {

void Optimizer::step(ModelParams& params) {
  for (Param* p : params.all()) {
    if (!p->grad_populated) {
      throw Error("optimizer step with missing gradient for parameter " + p->name);
    }
    if (p->grad.rows() != p->value.rows() || p->grad.cols() != p->value.cols()) {
      throw Error("gradient shape mismatch for parameter " + p->name);
    }
  }
  ++step_count_;
  const double t = static_cast<double>(step_count_);
  for (Param* p : params.all()) {
    switch (cfg_.kind) {
      case OptKind::sgd:
        p->value -= cfg_.lr * p->grad;
        break;
      case OptKind::adam: {
        auto [it, inserted] = moments_.try_emplace(p->name);
        Moments& mo = it->second;
        if (inserted) {
          mo.m = Matrix::Zero(p->value.rows(), p->value.cols());
          mo.v = Matrix::Zero(p->value.rows(), p->value.cols());
        }
        mo.m = cfg_.beta1 * mo.m + (1.0 - cfg_.beta1) * p->grad;
        mo.v = cfg_.beta2 * mo.v + (1.0 - cfg_.beta2) * p->grad.cwiseProduct(p->grad);
        const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
        const double bc2 = 1.0 - std::pow(cfg_.beta2, t);
        Matrix m_hat = mo.m / bc1;
        Matrix v_hat = mo.v / bc2;
        p->value.array() -= cfg_.lr * m_hat.array() / (v_hat.array().sqrt() + cfg_.eps);
        break;
      }
    }
    if (!p->value.allFinite()) {
      throw Error("parameter " + p->name + " became non-finite during optimization");
    }
  }
  params.zero_grads();
}

}  // namespace mobnet::nn
