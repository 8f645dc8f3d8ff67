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

#include "dagm/params.hpp"

#include <cmath>

#include "dagm/error.hpp"

namespace dagm {

ParamId ParameterStore::add(std::string name, Tensor value) {
  if (index_.contains(name)) throw ConfigError("duplicate parameter name: " + name);
  const ParamId id = values_.size();
  index_.emplace(name, id);
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return id;
}

std::optional<ParamId> ParameterStore::find(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ParamId ParameterStore::id(std::string_view name) const {
  auto found = find(name);
  if (!found) throw ConfigError("unknown parameter: " + std::string(name));
  return *found;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

Gradients::Gradients(const ParameterStore& store) {
  grads_.reserve(store.size());
  for (ParamId i = 0; i < store.size(); ++i) grads_.push_back(Tensor::zeros_like(store.value(i)));
}

void Gradients::add(const Gradients& other, double scale) {
  if (other.size() != size()) throw DimensionError("gradient sets differ in size");
  for (std::size_t i = 0; i < grads_.size(); ++i) grads_[i].add_scaled(other.grads_[i], scale);
}

void Gradients::scale(double factor) {
  for (auto& g : grads_) {
    for (double& v : g.values()) v *= factor;
  }
}

double Gradients::max_abs() const {
  double m = 0.0;
  for (const auto& g : grads_) {
    for (double v : g.values()) m = std::max(m, std::abs(v));
  }
  return m;
}

ParamBuilder ParamBuilder::child(std::string_view name) const {
  return ParamBuilder(store_, rng_, full(name), init_scale_);
}

std::string ParamBuilder::full(std::string_view name) const {
  if (prefix_.empty()) return std::string(name);
  return prefix_ + "." + std::string(name);
}

ParamId ParamBuilder::matrix(std::string_view name, std::size_t rows, std::size_t cols) {
  Tensor t({rows, cols});
  for (double& v : t.values()) v = rng_.uniform(-init_scale_, init_scale_);
  return store_.add(full(name), std::move(t));
}

ParamId ParamBuilder::vector(std::string_view name, std::size_t n) {
  Tensor t({n});
  for (double& v : t.values()) v = rng_.uniform(-init_scale_, init_scale_);
  return store_.add(full(name), std::move(t));
}

ParamId ParamBuilder::bias(std::string_view name, std::size_t n) {
  return store_.add(full(name), Tensor({n}));
}

}  // namespace dagm
