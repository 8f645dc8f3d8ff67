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

#include "dagm/layers.hpp"

#include "dagm/error.hpp"

namespace dagm {

std::vector<Var> embed_sequence(const Graph& g, ParamId table, std::span<const std::uint32_t> ids) {
  Var t = g(table);
  const std::size_t rows = t.value().rows();
  std::vector<Var> out;
  out.reserve(ids.size());
  for (std::uint32_t id : ids) {
    if (id >= rows) {
      throw DataError("token id " + std::to_string(id) + " outside vocabulary of size " +
                      std::to_string(rows));
    }
    out.push_back(row(t, id));
  }
  return out;
}

GruCellParams GruCellParams::create(ParamBuilder b, std::size_t input_size, std::size_t hidden_size) {
  GruCellParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.wz = b.matrix("Wz", hidden_size, input_size);
  p.uz = b.matrix("Uz", hidden_size, hidden_size);
  p.bz = b.bias("bz", hidden_size);
  p.wr = b.matrix("Wr", hidden_size, input_size);
  p.ur = b.matrix("Ur", hidden_size, hidden_size);
  p.br = b.bias("br", hidden_size);
  p.wh = b.matrix("Wh", hidden_size, input_size);
  p.uh = b.matrix("Uh", hidden_size, hidden_size);
  p.bh = b.bias("bh", hidden_size);
  return p;
}

Var gru_step(const Graph& g, const GruCellParams& cell, Var prev_state, Var input) {
  if (prev_state.size() != cell.hidden_size) {
    throw DimensionError("gru_step: state size " + std::to_string(prev_state.size()) +
                         " != hidden size " + std::to_string(cell.hidden_size));
  }
  if (input.size() != cell.input_size) {
    throw DimensionError("gru_step: input size " + std::to_string(input.size()) +
                         " != cell input size " + std::to_string(cell.input_size));
  }
  Var z = sigmoid(affine(g(cell.wz), input, g(cell.bz)) + matvec(g(cell.uz), prev_state));
  Var r = sigmoid(affine(g(cell.wr), input, g(cell.br)) + matvec(g(cell.ur), prev_state));
  Var c = tanh(affine(g(cell.wh), input, g(cell.bh)) + matvec(g(cell.uh), r * prev_state));
  // (1 - z) h + z c  ==  h + z (c - h)
  return prev_state + z * (c - prev_state);
}

std::vector<Var> gru_run(const Graph& g, const GruCellParams& cell, std::span<const Var> inputs) {
  std::vector<Var> states;
  states.reserve(inputs.size());
  Var h = g.zeros(cell.hidden_size);
  for (const Var& x : inputs) {
    h = gru_step(g, cell, h, x);
    states.push_back(h);
  }
  return states;
}

BiGruStates bigru_encode(const Graph& g, const GruCellParams& fwd, const GruCellParams& bwd,
                         std::span<const Var> inputs) {
  if (inputs.empty()) throw EmptyInputError("bigru_encode: empty input sequence");
  const std::size_t n = inputs.size();
  std::vector<Var> forward(n), backward(n);
  Var h = g.zeros(fwd.hidden_size);
  for (std::size_t j = 0; j < n; ++j) forward[j] = h = gru_step(g, fwd, h, inputs[j]);
  h = g.zeros(bwd.hidden_size);
  for (std::size_t j = n; j-- > 0;) backward[j] = h = gru_step(g, bwd, h, inputs[j]);
  BiGruStates out;
  out.states.reserve(n);
  for (std::size_t j = 0; j < n; ++j) out.states.push_back(concat({forward[j], backward[j]}));
  out.forward_final = forward.back();
  out.backward_final = backward.front();
  return out;
}

AttentionParams AttentionParams::create(ParamBuilder b, std::size_t encoder_size,
                                        std::size_t decoder_size, std::size_t attention_size) {
  AttentionParams p;
  p.encoder_size = encoder_size;
  p.decoder_size = decoder_size;
  p.attention_size = attention_size;
  p.v = b.vector("v", attention_size);
  p.w_alpha = b.matrix("W_alpha", attention_size, encoder_size + decoder_size);
  return p;
}

AttentionKeys attention_keys(const Graph& g, const AttentionParams& att,
                             std::span<const Var> encoder_states) {
  if (encoder_states.empty()) throw EmptyInputError("attention over no encoder states");
  AttentionKeys k;
  k.encoder_states.assign(encoder_states.begin(), encoder_states.end());
  k.keys.reserve(encoder_states.size());
  Var w = g(att.w_alpha);
  for (const Var& s : encoder_states) {
    if (s.size() != att.encoder_size) throw DimensionError("attention: encoder state size mismatch");
    k.keys.push_back(matvec_block(w, 0, s));
  }
  return k;
}

AttentionResult attention_context(const Graph& g, const AttentionParams& att,
                                  const AttentionKeys& keys, Var decoder_state) {
  if (decoder_state.size() != att.decoder_size) {
    throw DimensionError("attention: decoder state size mismatch");
  }
  Var query = matvec_block(g(att.w_alpha), att.encoder_size, decoder_state);
  Var v = g(att.v);
  std::vector<Var> scores;
  scores.reserve(keys.keys.size());
  for (const Var& key : keys.keys) scores.push_back(dot(v, tanh(key + query)));
  Var weights = softmax(stack(scores));
  Var context = weighted_sum(keys.encoder_states, weights);
  return {context, weights};
}

AttentionResult attention_context(const Graph& g, const AttentionParams& att,
                                  std::span<const Var> encoder_states, Var decoder_state) {
  return attention_context(g, att, attention_keys(g, att, encoder_states), decoder_state);
}

MlpParams MlpParams::create(ParamBuilder b, std::size_t input_size, std::size_t hidden_size,
                            std::size_t output_size) {
  MlpParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.output_size = output_size;
  p.w1 = b.matrix("W1", hidden_size, input_size);
  p.b1 = b.bias("b1", hidden_size);
  p.w2 = b.matrix("W2", output_size, hidden_size);
  p.b2 = b.bias("b2", output_size);
  return p;
}

Var mlp_logits(const Graph& g, const MlpParams& mlp, Var input) {
  if (input.size() != mlp.input_size) {
    throw DimensionError("mlp: input size " + std::to_string(input.size()) + " != " +
                         std::to_string(mlp.input_size));
  }
  Var hidden = tanh(affine(g(mlp.w1), input, g(mlp.b1)));
  return affine(g(mlp.w2), hidden, g(mlp.b2));
}

}  // namespace dagm
