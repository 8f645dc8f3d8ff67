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
#include <functional>
#include <initializer_list>
#include <map>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "dagm/params.hpp"
#include "dagm/tensor.hpp"

namespace dagm {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// tape that produced it is alive.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  const Tensor& value() const;
  std::size_t size() const { return value().size(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode record of primitive operations. A tape built with
// record_gradients=false computes values only (used for decoding and scoring).
class Tape {
 public:
  // Receives the gradient of the node's output and pushes contributions into
  // the gradients of its inputs.
  using Backward = std::function<void(Tape&, const Tensor& out_grad)>;

  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(Tensor value);
  // Leaf that receives a gradient but is not tied to a parameter store.
  Var variable(Tensor value);
  // Leaf referencing a stored parameter without copying it. Repeated calls
  // for the same parameter return the same leaf.
  Var param(const ParameterStore& store, ParamId id);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }
  // Gradient after backward(); zero tensor when the node was not reached.
  Tensor grad(Var v) const;

  void backward(Var scalar_loss);
  // Adds the gradients of every leaf bound to `store` into `into`.
  void accumulate(const ParameterStore& store, Gradients& into) const;

  std::size_t node_count() const { return nodes_.size(); }

  // Records an op. `backward` is dropped when no input needs a gradient.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Tensor value, std::span<const Var> inputs, Backward backward);
  // Gradient accumulator of a node, allocated as zeros on first use.
  Tensor& grad_slot(Var v);

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
    const ParameterStore* store = nullptr;
    ParamId param = 0;
  };

  bool record_;
  std::vector<Node> nodes_;
  std::map<std::pair<const ParameterStore*, ParamId>, std::size_t> param_leaves_;
};

// Binds a tape to the parameter store of one network.
class Graph {
 public:
  Graph(Tape& tape, const ParameterStore& store) : tape_(tape), store_(store) {}
  Var operator()(ParamId id) const { return tape_.param(store_, id); }
  Tape& tape() const { return tape_; }
  const ParameterStore& store() const { return store_; }
  Var constant(Tensor t) const { return tape_.constant(std::move(t)); }
  Var zeros(std::size_t n) const { return tape_.constant(Tensor({n})); }

 private:
  Tape& tape_;
  const ParameterStore& store_;
};

// ---- differentiable primitives -------------------------------------------

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);  // elementwise
Var scale(Var a, double factor);
Var one_minus(Var a);

Var matvec(Var w, Var x);
// w[:, col_offset : col_offset + |x|] * x
Var matvec_block(Var w, std::size_t col_offset, Var x);
Var affine(Var w, Var x, Var b);

Var sigmoid(Var a);
Var tanh(Var a);

Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
Var slice(Var a, std::size_t offset, std::size_t length);
Var row(Var table, std::size_t r);
Var pick(Var a, std::size_t i);
// out[k] = a[indices[k]]
Var gather(Var a, std::shared_ptr<const std::vector<std::size_t>> indices);
Var stack(std::span<const Var> scalars);

Var dot(Var a, Var b);
Var sum(Var a);
Var add_n(std::span<const Var> scalars);
// sum_k weights[k] * vectors[k]
Var weighted_sum(std::span<const Var> vectors, Var weights);

// Log arguments are clamped at this floor.
inline constexpr double kProbFloor = 1e-12;

Var softmax(Var logits);
Var log_softmax(Var logits);
// -sum_j target_j * log(max(predicted_j, floor))
Var cross_entropy(Var predicted, const Tensor& target);
// Same loss evaluated from logits through log_softmax.
Var cross_entropy_logits(Var logits, const Tensor& target);
// -[y log sigmoid(s) + (1-y) log(1 - sigmoid(s))] for a scalar logit s.
Var binary_cross_entropy_logit(Var logit, double label);

// ---- value-only helpers ---------------------------------------------------

Tensor softmax(const Tensor& logits);
// Zero when either vector is zero.
double cosine(std::span<const double> a, std::span<const double> b);
inline double cosine(const Tensor& a, const Tensor& b) { return cosine(a.values(), b.values()); }

}  // namespace dagm
