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
#include <span>
#include <vector>

#include "dagm/acts.hpp"
#include "dagm/layers.hpp"
#include "dagm/params.hpp"
#include "dagm/rng.hpp"
#include "dagm/vocab.hpp"

namespace dagm {

struct SessionTurn {
  TokenSeq tokens;
  DialogueAct act = DialogueAct::kCmS;
};

// s_i: the turns 1..i-1 seen so far.
using Session = std::vector<SessionTurn>;

// Throws DataError when the two sequences differ in length.
Session make_session(std::span<const TokenSeq> utterances, std::span<const DialogueAct> acts);

struct PolicyConfig {
  std::size_t word_dim = 32;
  std::size_t utterance_hidden = 32;
  std::size_t session_hidden = 32;
  std::size_t act_dim = 16;
  std::size_t act_hidden = 16;
  std::size_t mlp_hidden = 50;
  // Most recent turns kept; 0 keeps everything.
  std::size_t window = 10;
};

enum class SelectMode { kGreedy, kSample };

// p_a(a_i | s_i): per-utterance biGRU, session GRU over utterance summaries,
// act GRU over act embeddings, MLP over both final states.
class PolicyNet {
 public:
  PolicyNet() = default;
  PolicyNet(std::size_t vocab_size, const PolicyConfig& config, std::uint64_t seed);

  const PolicyConfig& config() const { return config_; }
  std::size_t vocab_size() const { return vocab_size_; }
  ParameterStore& params() { return store_; }
  const ParameterStore& params() const { return store_; }

  // Summary of one utterance: [forward final ; backward final].
  Var utterance_summary(const Graph& g, std::span<const TokenId> tokens) const;

  Var logits(const Graph& g, std::span<const SessionTurn> session) const;

  // logits for a_k given turns[0..k), for every k in [0, turns.size()].
  std::vector<Var> prefix_logits(const Graph& g, std::span<const SessionTurn> turns) const;

  ActDistribution act_distribution(std::span<const SessionTurn> session) const;

  const GruCellParams& utterance_forward() const { return utt_fwd_; }
  const GruCellParams& utterance_backward() const { return utt_bwd_; }
  const GruCellParams& session_cell() const { return session_; }
  const GruCellParams& act_cell() const { return act_gru_; }
  ParamId embedding() const { return embedding_; }
  ParamId act_table() const { return act_table_; }
  const MlpParams& mlp() const { return mlp_; }

 private:
  std::span<const SessionTurn> windowed(std::span<const SessionTurn> session) const;

  PolicyConfig config_;
  std::size_t vocab_size_ = 0;
  ParameterStore store_;
  ParamId embedding_ = 0;
  GruCellParams utt_fwd_, utt_bwd_, session_, act_gru_;
  ParamId act_table_ = 0;
  MlpParams mlp_;
};

// Greedy: argmax with lowest-index ties. Sample: one categorical draw.
DialogueAct select_act(const ActDistribution& dist, SelectMode mode, Rng& rng);
DialogueAct select_act(const PolicyNet& policy, std::span<const SessionTurn> session,
                       SelectMode mode, Rng& rng);

// log p_a(a | s) on the graph.
Var policy_log_prob(const Graph& g, const PolicyNet& policy, std::span<const SessionTurn> session,
                    DialogueAct act);

}  // namespace dagm
