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

#include "dagm/optim.hpp"

#include <cmath>

#include "dagm/error.hpp"

namespace dagm {

AdaDelta::AdaDelta(const ParameterStore& store, AdaDeltaConfig config) : config_(config) {
  if (!(config.rho > 0.0 && config.rho < 1.0)) throw ConfigError("adadelta rho must be in (0, 1)");
  if (!(config.epsilon > 0.0)) throw ConfigError("adadelta epsilon must be positive");
  for (ParamId i = 0; i < store.size(); ++i) {
    mean_sq_grad_.push_back(Tensor::zeros_like(store.value(i)));
    mean_sq_update_.push_back(Tensor::zeros_like(store.value(i)));
  }
}

void AdaDelta::update(ParameterStore& store, const Gradients& grads) {
  if (grads.size() != store.size() || mean_sq_grad_.size() != store.size()) {
    throw DimensionError("adadelta: gradient set does not match the parameter store");
  }
  const double rho = config_.rho;
  const double eps = config_.epsilon;
  for (ParamId id = 0; id < store.size(); ++id) {
    Tensor& x = store.value(id);
    const Tensor& g = grads[id];
    require_same_shape(x, g, "adadelta");
    Tensor& eg = mean_sq_grad_[id];
    Tensor& edx = mean_sq_update_[id];
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double gi = g[i];
      if (gi == 0.0 && eg[i] == 0.0) continue;
      eg[i] = rho * eg[i] + (1.0 - rho) * gi * gi;
      const double dx = -std::sqrt(edx[i] + eps) / std::sqrt(eg[i] + eps) * gi;
      edx[i] = rho * edx[i] + (1.0 - rho) * dx * dx;
      x[i] += config_.learning_rate * dx;
    }
  }
}

void sgd_step(ParameterStore& store, const Gradients& direction, double learning_rate) {
  if (direction.size() != store.size()) throw DimensionError("sgd: gradient set mismatch");
  for (ParamId id = 0; id < store.size(); ++id) {
    store.value(id).add_scaled(direction[id], learning_rate);
  }
}

GradCheckResult grad_check(const LossBuilder& loss, ParameterStore& store,
                           const GradCheckOptions& options) {
  Gradients analytic(store);
  {
    Tape tape(true);
    Var l = loss(tape);
    tape.backward(l);
    tape.accumulate(store, analytic);
  }
  auto evaluate = [&]() {
    Tape tape(false);
    return loss(tape).value()[0];
  };

  GradCheckResult result;
  for (ParamId id = 0; id < store.size(); ++id) {
    Tensor& x = store.value(id);
    const std::size_t n = x.size();
    std::size_t stride = 1;
    if (options.max_entries_per_param > 0 && n > options.max_entries_per_param) {
      stride = (n + options.max_entries_per_param - 1) / options.max_entries_per_param;
    }
    for (std::size_t i = 0; i < n; i += stride) {
      const double saved = x[i];
      x[i] = saved + options.epsilon;
      const double up = evaluate();
      x[i] = saved - options.epsilon;
      const double down = evaluate();
      x[i] = saved;
      const double numeric = (up - down) / (2.0 * options.epsilon);
      const double a = analytic[id][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.checked;
      if (rel > result.max_relative_error || result.worst_parameter.empty()) {
        if (rel >= result.max_relative_error) {
          result.max_relative_error = rel;
          result.worst_parameter = store.name(id);
          result.worst_index = i;
          result.worst_analytic = a;
          result.worst_numeric = numeric;
        }
      }
    }
  }
  return result;
}

}  // namespace dagm
