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

#include "dagm/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "dagm/error.hpp"

namespace dagm {

const Tensor& Var::value() const { return tape_->value(*this); }

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = record_;
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(const ParameterStore& store, ParamId id) {
  const auto key = std::make_pair(&store, id);
  if (auto it = param_leaves_.find(key); it != param_leaves_.end()) return Var(this, it->second);
  Node n;
  n.external = &store.value(id);
  n.requires_grad = record_;
  n.store = &store;
  n.param = id;
  nodes_.push_back(std::move(n));
  param_leaves_.emplace(key, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(Var v) const {
  const Node& n = nodes_[v.id()];
  return n.external ? *n.external : n.value;
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_[v.id()];
  if (n.grad.empty()) return Tensor::zeros_like(value(v));
  return n.grad;
}

Tensor& Tape::grad_slot(Var v) {
  Node& n = nodes_[v.id()];
  if (n.grad.empty()) n.grad = Tensor::zeros_like(n.external ? *n.external : n.value);
  return n.grad;
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::record(Tensor value, std::span<const Var> inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  if (record_) {
    for (const Var& in : inputs) {
      if (nodes_[in.id()].requires_grad) {
        n.requires_grad = true;
        break;
      }
    }
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var scalar_loss) {
  if (!record_) throw StateError("backward on a tape that does not record gradients");
  if (value(scalar_loss).size() != 1) throw DimensionError("backward needs a scalar loss");
  for (Node& n : nodes_) n.grad = Tensor();
  grad_slot(scalar_loss)[0] = 1.0;
  for (std::size_t i = scalar_loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
    n.backward(*this, n.grad);
  }
}

void Tape::accumulate(const ParameterStore& store, Gradients& into) const {
  for (const auto& [key, node_id] : param_leaves_) {
    if (key.first != &store) continue;
    const Node& n = nodes_[node_id];
    if (!n.grad.empty()) into[key.second].add_scaled(n.grad);
  }
}

// ---- primitives ------------------------------------------------------------

namespace {

void require_vector(const Tensor& t, const char* what) {
  if (t.rank() != 1) throw DimensionError(std::string(what) + ": expected a vector, got " +
                                          shape_string(t.shape()));
}

template <typename F>
Tensor map_values(const Tensor& a, F f) {
  Tensor out = Tensor::zeros_like(a);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

Var next_var(Tape& t) { return Var(&t, t.node_count()); }

}  // namespace

Var operator+(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_same_shape(x, y, "add");
  Tensor out = x;
  out.add_scaled(y);
  Tape& t = a.tape();
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(a)) tp.grad_slot(a).add_scaled(g);
    if (tp.requires_grad(b)) tp.grad_slot(b).add_scaled(g);
  });
}

Var operator-(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_same_shape(x, y, "sub");
  Tensor out = x;
  out.add_scaled(y, -1.0);
  Tape& t = a.tape();
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(a)) tp.grad_slot(a).add_scaled(g);
    if (tp.requires_grad(b)) tp.grad_slot(b).add_scaled(g, -1.0);
  });
}

Var operator*(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_same_shape(x, y, "mul");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
  Tape& t = a.tape();
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    const Tensor& xv = tp.value(a);
    const Tensor& yv = tp.value(b);
    if (tp.requires_grad(a)) {
      Tensor& ga = tp.grad_slot(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * yv[i];
    }
    if (tp.requires_grad(b)) {
      Tensor& gb = tp.grad_slot(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * xv[i];
    }
  });
}

Var scale(Var a, double factor) {
  Tensor out = map_values(a.value(), [factor](double v) { return v * factor; });
  return a.tape().record(std::move(out), {a}, [a, factor](Tape& tp, const Tensor& g) {
    tp.grad_slot(a).add_scaled(g, factor);
  });
}

Var one_minus(Var a) {
  Tensor out = map_values(a.value(), [](double v) { return 1.0 - v; });
  return a.tape().record(std::move(out), {a}, [a](Tape& tp, const Tensor& g) {
    tp.grad_slot(a).add_scaled(g, -1.0);
  });
}

namespace {

// y += W[:, off:off+n] x
void matvec_into(const Tensor& w, std::size_t off, const Tensor& x, Tensor& y) {
  const std::size_t rows = w.rows();
  const std::size_t cols = w.cols();
  const std::size_t n = x.size();
  const double* wp = w.raw();
  const double* xp = x.raw();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* wr = wp + r * cols + off;
    double acc = 0.0;
    for (std::size_t c = 0; c < n; ++c) acc += wr[c] * xp[c];
    y[r] += acc;
  }
}

void matvec_backward(Tape& tp, Var w, std::size_t off, Var x, const Tensor& g) {
  const Tensor& wv = tp.value(w);
  const Tensor& xv = tp.value(x);
  const std::size_t rows = wv.rows();
  const std::size_t cols = wv.cols();
  const std::size_t n = xv.size();
  if (tp.requires_grad(w)) {
    double* gw = tp.grad_slot(w).raw();
    for (std::size_t r = 0; r < rows; ++r) {
      const double gr = g[r];
      if (gr == 0.0) continue;
      double* row_ptr = gw + r * cols + off;
      for (std::size_t c = 0; c < n; ++c) row_ptr[c] += gr * xv[c];
    }
  }
  if (tp.requires_grad(x)) {
    Tensor& gx = tp.grad_slot(x);
    const double* wp = wv.raw();
    for (std::size_t r = 0; r < rows; ++r) {
      const double gr = g[r];
      if (gr == 0.0) continue;
      const double* wr = wp + r * cols + off;
      for (std::size_t c = 0; c < n; ++c) gx[c] += wr[c] * gr;
    }
  }
}

void check_matvec(const Tensor& w, std::size_t off, const Tensor& x, const char* what) {
  if (w.rank() != 2) throw DimensionError(std::string(what) + ": weight must be a matrix");
  require_vector(x, what);
  if (off + x.size() > w.cols()) {
    throw DimensionError(std::string(what) + ": input of size " + std::to_string(x.size()) +
                         " does not fit weight " + shape_string(w.shape()) + " at column " +
                         std::to_string(off));
  }
}

}  // namespace

Var matvec(Var w, Var x) {
  const Tensor& wv = w.value();
  const Tensor& xv = x.value();
  check_matvec(wv, 0, xv, "matvec");
  if (xv.size() != wv.cols()) throw DimensionError("matvec: input size " + std::to_string(xv.size()) +
                                                   " != weight columns " + std::to_string(wv.cols()));
  Tensor out({wv.rows()});
  matvec_into(wv, 0, xv, out);
  return w.tape().record(std::move(out), {w, x},
                         [w, x](Tape& tp, const Tensor& g) { matvec_backward(tp, w, 0, x, g); });
}

Var matvec_block(Var w, std::size_t col_offset, Var x) {
  const Tensor& wv = w.value();
  const Tensor& xv = x.value();
  check_matvec(wv, col_offset, xv, "matvec_block");
  Tensor out({wv.rows()});
  matvec_into(wv, col_offset, xv, out);
  return w.tape().record(std::move(out), {w, x}, [w, col_offset, x](Tape& tp, const Tensor& g) {
    matvec_backward(tp, w, col_offset, x, g);
  });
}

Var affine(Var w, Var x, Var b) {
  const Tensor& wv = w.value();
  const Tensor& xv = x.value();
  const Tensor& bv = b.value();
  check_matvec(wv, 0, xv, "affine");
  if (xv.size() != wv.cols()) throw DimensionError("affine: input size " + std::to_string(xv.size()) +
                                                   " != weight columns " + std::to_string(wv.cols()));
  if (bv.rank() != 1 || bv.size() != wv.rows()) throw DimensionError("affine: bias size mismatch");
  Tensor out = bv;
  matvec_into(wv, 0, xv, out);
  return w.tape().record(std::move(out), {w, x, b}, [w, x, b](Tape& tp, const Tensor& g) {
    matvec_backward(tp, w, 0, x, g);
    if (tp.requires_grad(b)) tp.grad_slot(b).add_scaled(g);
  });
}

Var sigmoid(Var a) {
  Tensor out = map_values(a.value(), [](double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
  Var self = next_var(a.tape());
  return a.tape().record(std::move(out), {a}, [a, self](Tape& tp, const Tensor& g) {
    const Tensor& y = tp.value(self);
    Tensor& ga = tp.grad_slot(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var tanh(Var a) {
  Tensor out = map_values(a.value(), [](double v) { return std::tanh(v); });
  Var self = next_var(a.tape());
  return a.tape().record(std::move(out), {a}, [a, self](Tape& tp, const Tensor& g) {
    const Tensor& y = tp.value(self);
    Tensor& ga = tp.grad_slot(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw EmptyInputError("concat of nothing");
  std::vector<double> data;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    require_vector(v, "concat");
    data.insert(data.end(), v.data().begin(), v.data().end());
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  Tape& t = parts.front().tape();
  return t.record(Tensor::vector(std::move(data)), parts, [inputs](Tape& tp, const Tensor& g) {
    std::size_t off = 0;
    for (const Var& p : inputs) {
      const std::size_t n = tp.value(p).size();
      if (tp.requires_grad(p)) {
        Tensor& gp = tp.grad_slot(p);
        for (std::size_t i = 0; i < n; ++i) gp[i] += g[off + i];
      }
      off += n;
    }
  });
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var slice(Var a, std::size_t offset, std::size_t length) {
  const Tensor& v = a.value();
  require_vector(v, "slice");
  if (length == 0 || offset + length > v.size()) throw DimensionError("slice out of range");
  std::vector<double> data(v.data().begin() + offset, v.data().begin() + offset + length);
  return a.tape().record(Tensor::vector(std::move(data)), {a},
                         [a, offset](Tape& tp, const Tensor& g) {
                           Tensor& ga = tp.grad_slot(a);
                           for (std::size_t i = 0; i < g.size(); ++i) ga[offset + i] += g[i];
                         });
}

Var row(Var table, std::size_t r) {
  const Tensor& t = table.value();
  if (t.rank() != 2) throw DimensionError("row: table must be a matrix");
  if (r >= t.rows()) {
    throw DataError("row " + std::to_string(r) + " out of range for table with " +
                    std::to_string(t.rows()) + " rows");
  }
  const std::size_t cols = t.cols();
  std::vector<double> data(t.raw() + r * cols, t.raw() + (r + 1) * cols);
  return table.tape().record(Tensor::vector(std::move(data)), {table},
                             [table, r, cols](Tape& tp, const Tensor& g) {
                               double* gt = tp.grad_slot(table).raw() + r * cols;
                               for (std::size_t i = 0; i < cols; ++i) gt[i] += g[i];
                             });
}

Var pick(Var a, std::size_t i) {
  const Tensor& v = a.value();
  if (i >= v.size()) throw DimensionError("pick index out of range");
  return a.tape().record(Tensor::vector({v[i]}), {a}, [a, i](Tape& tp, const Tensor& g) {
    tp.grad_slot(a)[i] += g[0];
  });
}

Var gather(Var a, std::shared_ptr<const std::vector<std::size_t>> indices) {
  const Tensor& v = a.value();
  std::vector<double> data;
  data.reserve(indices->size());
  for (std::size_t i : *indices) {
    if (i >= v.size()) throw DimensionError("gather index out of range");
    data.push_back(v[i]);
  }
  if (data.empty()) throw EmptyInputError("gather of no indices");
  return a.tape().record(Tensor::vector(std::move(data)), {a},
                         [a, indices](Tape& tp, const Tensor& g) {
                           Tensor& ga = tp.grad_slot(a);
                           for (std::size_t k = 0; k < indices->size(); ++k) ga[(*indices)[k]] += g[k];
                         });
}

Var stack(std::span<const Var> scalars) {
  if (scalars.empty()) throw EmptyInputError("stack of nothing");
  std::vector<double> data;
  data.reserve(scalars.size());
  for (const Var& s : scalars) {
    if (s.value().size() != 1) throw DimensionError("stack expects scalars");
    data.push_back(s.value()[0]);
  }
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  return scalars.front().tape().record(Tensor::vector(std::move(data)), scalars,
                                       [inputs](Tape& tp, const Tensor& g) {
                                         for (std::size_t k = 0; k < inputs.size(); ++k) {
                                           if (tp.requires_grad(inputs[k]))
                                             tp.grad_slot(inputs[k])[0] += g[k];
                                         }
                                       });
}

Var dot(Var a, Var b) {
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_same_shape(x, y, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return a.tape().record(Tensor::vector({acc}), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    const Tensor& xv = tp.value(a);
    const Tensor& yv = tp.value(b);
    if (tp.requires_grad(a)) tp.grad_slot(a).add_scaled(yv, g[0]);
    if (tp.requires_grad(b)) tp.grad_slot(b).add_scaled(xv, g[0]);
  });
}

Var sum(Var a) {
  double acc = 0.0;
  for (double v : a.value().values()) acc += v;
  return a.tape().record(Tensor::vector({acc}), {a}, [a](Tape& tp, const Tensor& g) {
    for (double& v : tp.grad_slot(a).values()) v += g[0];
  });
}

Var add_n(std::span<const Var> scalars) {
  if (scalars.empty()) throw EmptyInputError("add_n of nothing");
  double acc = 0.0;
  for (const Var& s : scalars) {
    if (s.value().size() != 1) throw DimensionError("add_n expects scalars");
    acc += s.value()[0];
  }
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  return scalars.front().tape().record(Tensor::vector({acc}), scalars,
                                       [inputs](Tape& tp, const Tensor& g) {
                                         for (const Var& s : inputs) {
                                           if (tp.requires_grad(s)) tp.grad_slot(s)[0] += g[0];
                                         }
                                       });
}

Var weighted_sum(std::span<const Var> vectors, Var weights) {
  if (vectors.empty()) throw EmptyInputError("weighted_sum of nothing");
  const Tensor& w = weights.value();
  if (w.size() != vectors.size()) throw DimensionError("weighted_sum: weight count mismatch");
  Tensor out = Tensor::zeros_like(vectors.front().value());
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    require_same_shape(out, vectors[k].value(), "weighted_sum");
    out.add_scaled(vectors[k].value(), w[k]);
  }
  std::vector<Var> inputs(vectors.begin(), vectors.end());
  inputs.push_back(weights);
  return weights.tape().record(std::move(out), inputs, [inputs](Tape& tp, const Tensor& g) {
    const Var weights_var = inputs.back();
    const Tensor& wv = tp.value(weights_var);
    const bool want_w = tp.requires_grad(weights_var);
    for (std::size_t k = 0; k + 1 < inputs.size(); ++k) {
      const Tensor& vk = tp.value(inputs[k]);
      if (tp.requires_grad(inputs[k])) tp.grad_slot(inputs[k]).add_scaled(g, wv[k]);
      if (want_w) {
        double acc = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * vk[i];
        tp.grad_slot(weights_var)[k] += acc;
      }
    }
  });
}

Tensor softmax(const Tensor& logits) {
  require_vector(logits, "softmax");
  const double m = *std::max_element(logits.data().begin(), logits.data().end());
  Tensor out = Tensor::zeros_like(logits);
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - m);
    z += out[i];
  }
  for (double& v : out.values()) v /= z;
  return out;
}

Var softmax(Var logits) {
  Tensor out = softmax(logits.value());
  Var self = next_var(logits.tape());
  return logits.tape().record(std::move(out), {logits}, [logits, self](Tape& tp, const Tensor& g) {
    const Tensor& y = tp.value(self);
    double gy = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) gy += g[i] * y[i];
    Tensor& gl = tp.grad_slot(logits);
    for (std::size_t i = 0; i < y.size(); ++i) gl[i] += y[i] * (g[i] - gy);
  });
}

Var log_softmax(Var logits) {
  const Tensor& l = logits.value();
  require_vector(l, "log_softmax");
  const double m = *std::max_element(l.data().begin(), l.data().end());
  double z = 0.0;
  for (double v : l.values()) z += std::exp(v - m);
  const double log_z = m + std::log(z);
  Tensor out = map_values(l, [log_z](double v) { return v - log_z; });
  Var self = next_var(logits.tape());
  return logits.tape().record(std::move(out), {logits}, [logits, self](Tape& tp, const Tensor& g) {
    const Tensor& y = tp.value(self);
    double gs = 0.0;
    for (double v : g.values()) gs += v;
    Tensor& gl = tp.grad_slot(logits);
    for (std::size_t i = 0; i < y.size(); ++i) gl[i] += g[i] - std::exp(y[i]) * gs;
  });
}

Var cross_entropy(Var predicted, const Tensor& target) {
  const Tensor& q = predicted.value();
  require_vector(q, "cross_entropy");
  if (q.size() != target.size()) {
    throw DimensionError("cross_entropy: predicted length " + std::to_string(q.size()) +
                         " != target length " + std::to_string(target.size()));
  }
  double loss = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (target[j] != 0.0) loss -= target[j] * std::log(std::max(q[j], kProbFloor));
  }
  return predicted.tape().record(Tensor::vector({loss}), {predicted},
                                 [predicted, target](Tape& tp, const Tensor& g) {
                                   const Tensor& qv = tp.value(predicted);
                                   Tensor& gq = tp.grad_slot(predicted);
                                   for (std::size_t j = 0; j < qv.size(); ++j) {
                                     if (target[j] != 0.0 && qv[j] > kProbFloor)
                                       gq[j] -= g[0] * target[j] / qv[j];
                                   }
                                 });
}

Var cross_entropy_logits(Var logits, const Tensor& target) {
  const Tensor& l = logits.value();
  require_vector(l, "cross_entropy_logits");
  if (l.size() != target.size()) throw DimensionError("cross_entropy_logits: length mismatch");
  Var log_probs = log_softmax(logits);
  const Tensor& lp = log_probs.value();
  static const double kLogFloor = std::log(kProbFloor);
  double loss = 0.0;
  for (std::size_t j = 0; j < lp.size(); ++j) {
    if (target[j] != 0.0) loss -= target[j] * std::max(lp[j], kLogFloor);
  }
  return logits.tape().record(Tensor::vector({loss}), {log_probs},
                              [log_probs, target](Tape& tp, const Tensor& g) {
                                const Tensor& lpv = tp.value(log_probs);
                                Tensor& gl = tp.grad_slot(log_probs);
                                for (std::size_t j = 0; j < lpv.size(); ++j) {
                                  if (target[j] != 0.0 && lpv[j] > kLogFloor)
                                    gl[j] -= g[0] * target[j];
                                }
                              });
}

Var binary_cross_entropy_logit(Var logit, double label) {
  const Tensor& s = logit.value();
  if (s.size() != 1) throw DimensionError("binary_cross_entropy_logit expects a scalar");
  const double x = s[0];
  const double softplus = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  const double loss = softplus - label * x;
  return logit.tape().record(Tensor::vector({loss}), {logit},
                             [logit, label](Tape& tp, const Tensor& g) {
                               const double xv = tp.value(logit)[0];
                               const double sig = xv >= 0 ? 1.0 / (1.0 + std::exp(-xv))
                                                          : std::exp(xv) / (1.0 + std::exp(xv));
                               tp.grad_slot(logit)[0] += g[0] * (sig - label);
                             });
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("cosine: length mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  const double c = ab / (std::sqrt(aa) * std::sqrt(bb));
  return std::clamp(c, -1.0, 1.0);
}

}  // namespace dagm
