// Copyright 2026 The dagm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dagm/params.hpp"
#include "dagm/tape.hpp"

namespace dagm {

struct AdaDeltaConfig {
  double rho = 0.95;
  double epsilon = 1e-6;
  double learning_rate = 1.0;
};

// AdaDelta: running averages of squared gradients and squared updates.
//   E[g^2]  <- rho E[g^2]  + (1 - rho) g^2
//   dx      =  -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
//   E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
//   x       += lr * dx
class AdaDelta {
 public:
  AdaDelta(const ParameterStore& store, AdaDeltaConfig config);

  // Descends along `grads` (they are gradients of a loss to minimize).
  void update(ParameterStore& store, const Gradients& grads);

  const AdaDeltaConfig& config() const { return config_; }
  const Tensor& mean_sq_grad(ParamId id) const { return mean_sq_grad_[id]; }
  const Tensor& mean_sq_update(ParamId id) const { return mean_sq_update_[id]; }

 private:
  AdaDeltaConfig config_;
  std::vector<Tensor> mean_sq_grad_;
  std::vector<Tensor> mean_sq_update_;
};

// Plain gradient step: x += learning_rate * direction.
void sgd_step(ParameterStore& store, const Gradients& direction, double learning_rate);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

struct GradCheckOptions {
  double epsilon = 1e-5;
  // Denominator floor in |a - n| / max(|a|, |n|, floor).
  double floor = 1e-5;
  // 0 checks every entry; otherwise at most this many evenly spaced entries
  // per parameter tensor.
  std::size_t max_entries_per_param = 0;
};

using LossBuilder = std::function<Var(Tape&)>;

// Compares tape gradients of the scalar built by `loss` against central finite
// differences on every parameter of `store`. `store` is perturbed in place and
// restored before returning.
GradCheckResult grad_check(const LossBuilder& loss, ParameterStore& store,
                           const GradCheckOptions& options = {});

}  // namespace dagm
