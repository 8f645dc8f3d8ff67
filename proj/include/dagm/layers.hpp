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
#include <cstdint>
#include <span>
#include <vector>

#include "dagm/params.hpp"
#include "dagm/tape.hpp"

namespace dagm {

// z = sigmoid(Wz x + Uz h + bz)
// r = sigmoid(Wr x + Ur h + br)
// c = tanh(Wh x + Uh (r * h) + bh)
// h' = (1 - z) * h + z * c
// Embedding rows for a token sequence; ids >= table rows throw DataError.
std::vector<Var> embed_sequence(const Graph& g, ParamId table, std::span<const std::uint32_t> ids);

struct GruCellParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  ParamId wz, uz, bz;
  ParamId wr, ur, br;
  ParamId wh, uh, bh;

  static GruCellParams create(ParamBuilder builder, std::size_t input_size, std::size_t hidden_size);
};

Var gru_step(const Graph& g, const GruCellParams& cell, Var prev_state, Var input);

// Runs the cell over `inputs` from a zero state and returns every state.
std::vector<Var> gru_run(const Graph& g, const GruCellParams& cell, std::span<const Var> inputs);

struct BiGruStates {
  // states[j] = [forward_j ; backward_j]
  std::vector<Var> states;
  Var forward_final;   // forward state after the last input
  Var backward_final;  // backward state after the first input
};

BiGruStates bigru_encode(const Graph& g, const GruCellParams& fwd, const GruCellParams& bwd,
                         std::span<const Var> inputs);

// Additive attention: e_k = v^T tanh(W [enc_k ; dec]).
struct AttentionParams {
  std::size_t encoder_size = 0;
  std::size_t decoder_size = 0;
  std::size_t attention_size = 0;
  ParamId v;
  ParamId w_alpha;  // attention_size x (encoder_size + decoder_size)

  static AttentionParams create(ParamBuilder builder, std::size_t encoder_size,
                                std::size_t decoder_size, std::size_t attention_size);
};

struct AttentionResult {
  Var context;
  Var weights;
};

// Encoder-side half of the score, W[:, :enc] enc_k, reusable across decoder
// steps.
struct AttentionKeys {
  std::vector<Var> encoder_states;
  std::vector<Var> keys;
};

AttentionKeys attention_keys(const Graph& g, const AttentionParams& att,
                             std::span<const Var> encoder_states);
AttentionResult attention_context(const Graph& g, const AttentionParams& att,
                                  const AttentionKeys& keys, Var decoder_state);
AttentionResult attention_context(const Graph& g, const AttentionParams& att,
                                  std::span<const Var> encoder_states, Var decoder_state);

// Two-layer perceptron: W2 tanh(W1 x + b1) + b2, returning logits.
struct MlpParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  std::size_t output_size = 0;
  ParamId w1, b1, w2, b2;

  static MlpParams create(ParamBuilder builder, std::size_t input_size, std::size_t hidden_size,
                          std::size_t output_size);
};

Var mlp_logits(const Graph& g, const MlpParams& mlp, Var input);

}  // namespace dagm
