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

#include "dagm/policy.hpp"

#include "dagm/error.hpp"

namespace dagm {

Session make_session(std::span<const TokenSeq> utterances, std::span<const DialogueAct> acts) {
  if (utterances.size() != acts.size()) {
    throw DataError("session has " + std::to_string(utterances.size()) + " utterances but " +
                    std::to_string(acts.size()) + " acts");
  }
  Session s;
  s.reserve(acts.size());
  for (std::size_t i = 0; i < acts.size(); ++i) s.push_back({utterances[i], acts[i]});
  return s;
}

PolicyNet::PolicyNet(std::size_t vocab_size, const PolicyConfig& config, std::uint64_t seed)
    : config_(config), vocab_size_(vocab_size) {
  if (vocab_size == 0) throw ConfigError("policy needs a nonempty vocabulary");
  Rng rng(seed);
  ParamBuilder b(store_, rng, "pol");
  embedding_ = b.matrix("embedding", vocab_size, config.word_dim);
  utt_fwd_ = GruCellParams::create(b.child("utt_fwd"), config.word_dim, config.utterance_hidden);
  utt_bwd_ = GruCellParams::create(b.child("utt_bwd"), config.word_dim, config.utterance_hidden);
  session_ = GruCellParams::create(b.child("session"), 2 * config.utterance_hidden,
                                   config.session_hidden);
  act_table_ = b.matrix("act_embedding", kNumActs, config.act_dim);
  act_gru_ = GruCellParams::create(b.child("act_gru"), config.act_dim, config.act_hidden);
  mlp_ = MlpParams::create(b.child("mlp"), config.session_hidden + config.act_hidden,
                           config.mlp_hidden, kNumActs);
}

Var PolicyNet::utterance_summary(const Graph& g, std::span<const TokenId> tokens) const {
  if (tokens.empty()) throw EmptyInputError("policy: empty utterance in session");
  auto enc = bigru_encode(g, utt_fwd_, utt_bwd_, embed_sequence(g, embedding_, tokens));
  return concat({enc.forward_final, enc.backward_final});
}

std::span<const SessionTurn> PolicyNet::windowed(std::span<const SessionTurn> session) const {
  if (config_.window == 0 || session.size() <= config_.window) return session;
  return session.subspan(session.size() - config_.window);
}

Var PolicyNet::logits(const Graph& g, std::span<const SessionTurn> session) const {
  session = windowed(session);
  Var t = g.zeros(config_.session_hidden);
  Var ha = g.zeros(config_.act_hidden);
  Var table = g(act_table_);
  for (const auto& turn : session) {
    t = gru_step(g, session_, t, utterance_summary(g, turn.tokens));
    ha = gru_step(g, act_gru_, ha, row(table, act_index(turn.act)));
  }
  return mlp_logits(g, mlp_, concat({t, ha}));
}

std::vector<Var> PolicyNet::prefix_logits(const Graph& g, std::span<const SessionTurn> turns) const {
  std::vector<Var> out;
  out.reserve(turns.size() + 1);
  if (config_.window != 0 && turns.size() > config_.window) {
    for (std::size_t k = 0; k <= turns.size(); ++k) out.push_back(logits(g, turns.first(k)));
    return out;
  }
  Var t = g.zeros(config_.session_hidden);
  Var ha = g.zeros(config_.act_hidden);
  Var table = g(act_table_);
  out.push_back(mlp_logits(g, mlp_, concat({t, ha})));
  for (const auto& turn : turns) {
    t = gru_step(g, session_, t, utterance_summary(g, turn.tokens));
    ha = gru_step(g, act_gru_, ha, row(table, act_index(turn.act)));
    out.push_back(mlp_logits(g, mlp_, concat({t, ha})));
  }
  return out;
}

ActDistribution PolicyNet::act_distribution(std::span<const SessionTurn> session) const {
  Tape tape(false);
  Graph g(tape, store_);
  Tensor p = softmax(logits(g, session).value());
  return ActDistribution::from_values(p.values());
}

DialogueAct select_act(const ActDistribution& dist, SelectMode mode, Rng& rng) {
  if (mode == SelectMode::kGreedy) return dist.argmax();
  return act_from_index(rng.categorical(dist.values()));
}

DialogueAct select_act(const PolicyNet& policy, std::span<const SessionTurn> session,
                       SelectMode mode, Rng& rng) {
  return select_act(policy.act_distribution(session), mode, rng);
}

Var policy_log_prob(const Graph& g, const PolicyNet& policy, std::span<const SessionTurn> session,
                    DialogueAct act) {
  return pick(log_softmax(policy.logits(g, session)), act_index(act));
}

}  // namespace dagm
