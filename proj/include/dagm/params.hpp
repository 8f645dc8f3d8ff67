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

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dagm/rng.hpp"
#include "dagm/tensor.hpp"

namespace dagm {

using ParamId = std::size_t;

// Named trainable tensors in registration order. The order is part of the
// checkpoint format, so it must not depend on anything but construction.
class ParameterStore {
 public:
  ParamId add(std::string name, Tensor value);

  std::optional<ParamId> find(std::string_view name) const;
  ParamId id(std::string_view name) const;

  const Tensor& value(ParamId id) const { return values_[id]; }
  Tensor& value(ParamId id) { return values_[id]; }
  const std::string& name(ParamId id) const { return names_[id]; }

  std::size_t size() const { return values_.size(); }
  std::size_t scalar_count() const;

  bool operator==(const ParameterStore& other) const {
    return names_ == other.names_ && values_ == other.values_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::map<std::string, ParamId, std::less<>> index_;
};

// One gradient tensor per parameter, shaped like the store it came from.
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(const ParameterStore& store);

  Tensor& operator[](ParamId id) { return grads_[id]; }
  const Tensor& operator[](ParamId id) const { return grads_[id]; }
  std::size_t size() const { return grads_.size(); }

  void add(const Gradients& other, double scale = 1.0);
  void scale(double factor);
  double max_abs() const;

 private:
  std::vector<Tensor> grads_;
};

// Registers parameters under a dotted name prefix with the default
// initialization: uniform in [-scale, scale] for matrices, zeros for biases.
class ParamBuilder {
 public:
  ParamBuilder(ParameterStore& store, Rng& rng, std::string prefix, double init_scale = 0.08)
      : store_(store), rng_(rng), prefix_(std::move(prefix)), init_scale_(init_scale) {}

  ParamBuilder child(std::string_view name) const;

  ParamId matrix(std::string_view name, std::size_t rows, std::size_t cols);
  ParamId vector(std::string_view name, std::size_t n);  // random, not zero
  ParamId bias(std::string_view name, std::size_t n);

 private:
  std::string full(std::string_view name) const;

  ParameterStore& store_;
  Rng& rng_;
  std::string prefix_;
  double init_scale_;
};

}  // namespace dagm
