#pragma once

#include "mtrans/network.hpp"

namespace mtrans {

// Per-coordinate ADADELTA:
//   Eg  <- rho Eg + (1 - rho) g^2
//   dx   = -sqrt(Edx + eps) / sqrt(Eg + eps) * g
//   Edx <- rho Edx + (1 - rho) dx^2
class Adadelta {
 public:
  explicit Adadelta(const ModelParams& shape, double rho = 0.95, double eps = 1e-6);

  // Returns false, leaving parameters and accumulators untouched, when any
  // gradient coordinate is non-finite.
  bool update(ModelParams& params, const Gradients& grads);

  double rho() const { return rho_; }
  double eps() const { return eps_; }
  std::size_t skipped_updates() const { return skipped_; }

 private:
  double rho_;
  double eps_;
  ModelParams sq_grad_;
  ModelParams sq_delta_;
  std::size_t skipped_ = 0;
};

}  // namespace mtrans
