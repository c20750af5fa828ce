#include "mtrans/optimizer.hpp"

#include <iostream>

namespace mtrans {

Adadelta::Adadelta(const ModelParams& shape, double rho, double eps)
    : rho_(rho), eps_(eps), sq_grad_(shape.zeros_like()), sq_delta_(shape.zeros_like()) {}

bool Adadelta::update(ModelParams& params, const Gradients& grads) {
  const auto g = grads.tensors();
  for (const Mat* t : g) {
    if (!t->allFinite()) {
      ++skipped_;
      std::cerr << "warning: non-finite gradient, update skipped\n";
      return false;
    }
  }
  auto x = params.tensors();
  auto eg = sq_grad_.tensors();
  auto edx = sq_delta_.tensors();
  for (std::size_t k = 0; k < x.size(); ++k) {
    auto gk = g[k]->array();
    auto egk = eg[k]->array();
    auto edxk = edx[k]->array();
    egk = rho_ * egk + (1.0 - rho_) * gk.square();
    const Eigen::ArrayXXd dx = -((edxk + eps_).sqrt() / (egk + eps_).sqrt()) * gk;
    edxk = rho_ * edxk + (1.0 - rho_) * dx.square();
    x[k]->array() += dx;
  }
  return true;
}

}  // namespace mtrans
