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

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "dagm/acts.hpp"
#include "dagm/layers.hpp"
#include "dagm/params.hpp"
#include "dagm/rng.hpp"
#include "dagm/vocab.hpp"

namespace dagm {

struct GeneratorConfig {
  std::size_t emb_dim = 32;
  std::size_t hidden = 64;
  std::size_t attention = 32;
  std::size_t max_len = 20;
  // Rank finished beams by log-prob / token count; raw sum otherwise.
  bool length_normalize = true;
};

struct EncoderOutput {
  BiGruStates states;
  AttentionKeys keys;
};

struct DecodeHypothesis {
  TokenSeq tokens;  // emitted tokens, EOS included once emitted
  double log_prob = 0.0;
  Var state;
  bool finished = false;
};

struct ScoredResponse {
  TokenSeq tokens;  // without EOS
  double log_prob = 0.0;
  double score = 0.0;
  bool ended_with_eos = false;
};

// p_r(r | a, u_{i-1}, u_{i-2}) with an attention decoder. The encoder reads
// [<act>, u_{i-1}..., <sep>, u_{i-2}...]; without u_{i-2} the tail is one
// zero vector.
class Generator {
 public:
  Generator() = default;
  Generator(std::size_t vocab_size, const GeneratorConfig& config, std::uint64_t seed);

  const GeneratorConfig& config() const { return config_; }
  std::size_t vocab_size() const { return vocab_size_; }
  ParameterStore& params() { return store_; }
  const ParameterStore& params() const { return store_; }

  // Vocabulary ids the decoder may produce: UNK, EOS and non-reserved words.
  const std::vector<std::size_t>& emittable() const { return *emittable_; }
  bool is_emittable(TokenId id) const;

  EncoderOutput encode(const Graph& g, DialogueAct act, std::span<const TokenId> u_prev,
                       std::span<const TokenId> u_prev2) const;

  // e(u): [forward final ; backward final] of the encoder over u alone.
  Tensor utterance_embedding(std::span<const TokenId> tokens) const;

  DecodeHypothesis start(const Graph& g, const EncoderOutput& enc) const;

  // Log-probabilities over emittable() for the next token, plus the advanced
  // decoder state.
  std::pair<Var, Var> step(const Graph& g, const EncoderOutput& enc, const DecodeHypothesis& hyp) const;

  // Full-vocabulary next-token distribution (zeros on non-emittable ids).
  Tensor next_token_distribution(const Graph& g, const EncoderOutput& enc,
                                 const DecodeHypothesis& hyp) const;

  DecodeHypothesis step_decode(const Graph& g, const EncoderOutput& enc, const DecodeHypothesis& hyp,
                               TokenId next) const;

  // Teacher-forced sum of log-probabilities of `response` followed by EOS.
  Var sequence_log_prob(const Graph& g, DialogueAct act, std::span<const TokenId> u_prev,
                        std::span<const TokenId> u_prev2, std::span<const TokenId> response) const;
  double sequence_log_prob(DialogueAct act, std::span<const TokenId> u_prev,
                           std::span<const TokenId> u_prev2, std::span<const TokenId> response) const;

  ScoredResponse greedy(DialogueAct act, std::span<const TokenId> u_prev,
                        std::span<const TokenId> u_prev2, std::size_t max_len = 0) const;

  // Sorted by score descending, ties by lexicographic token order.
  std::vector<ScoredResponse> beam_search(DialogueAct act, std::span<const TokenId> u_prev,
                                          std::span<const TokenId> u_prev2, std::size_t beam_size,
                                          std::size_t max_len = 0) const;

  // Uniform choice among the top k beam results (beam width max(k, beam)).
  ScoredResponse sample_top_k(DialogueAct act, std::span<const TokenId> u_prev,
                              std::span<const TokenId> u_prev2, std::size_t k, Rng& rng,
                              std::size_t beam = 0) const;

  double score(double log_prob, std::size_t token_count) const;

  ParamId embedding() const { return embedding_; }
  const GruCellParams& encoder_forward() const { return enc_fwd_; }
  const GruCellParams& encoder_backward() const { return enc_bwd_; }
  const GruCellParams& decoder_cell() const { return dec_; }
  const AttentionParams& attention() const { return att_; }
  ParamId output_weight() const { return out_w_; }
  ParamId output_bias() const { return out_b_; }

 private:
  std::size_t emit_index(TokenId id) const;

  GeneratorConfig config_;
  std::size_t vocab_size_ = 0;
  ParameterStore store_;
  ParamId embedding_ = 0;
  GruCellParams enc_fwd_, enc_bwd_, dec_;
  AttentionParams att_;
  ParamId out_w_ = 0, out_b_ = 0;
  std::shared_ptr<const std::vector<std::size_t>> emittable_;
  std::vector<std::int64_t> emit_index_;
};

}  // namespace dagm
