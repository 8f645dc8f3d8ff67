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

#include "dagm/generator.hpp"

#include <algorithm>

#include "dagm/error.hpp"

namespace dagm {

Generator::Generator(std::size_t vocab_size, const GeneratorConfig& config, std::uint64_t seed)
    : config_(config), vocab_size_(vocab_size) {
  if (vocab_size < Vocabulary::kReservedCount) {
    throw ConfigError("generator vocabulary smaller than the reserved block");
  }
  if (config.max_len == 0) throw ConfigError("generator max_len must be positive");
  Rng rng(seed);
  ParamBuilder b(store_, rng, "gen");
  embedding_ = b.matrix("embedding", vocab_size, config.emb_dim);
  enc_fwd_ = GruCellParams::create(b.child("enc_fwd"), config.emb_dim, config.hidden);
  enc_bwd_ = GruCellParams::create(b.child("enc_bwd"), config.emb_dim, config.hidden);
  att_ = AttentionParams::create(b.child("attention"), 2 * config.hidden, config.hidden,
                                 config.attention);
  dec_ = GruCellParams::create(b.child("dec"), config.emb_dim + 2 * config.hidden, config.hidden);
  out_w_ = b.matrix("out_W", vocab_size, config.hidden + config.emb_dim);
  out_b_ = b.bias("out_b", vocab_size);

  std::vector<std::size_t> emit = {Vocabulary::kUnk, Vocabulary::kEos};
  for (std::size_t id = Vocabulary::kReservedCount; id < vocab_size; ++id) emit.push_back(id);
  emit_index_.assign(vocab_size, -1);
  for (std::size_t k = 0; k < emit.size(); ++k) emit_index_[emit[k]] = static_cast<std::int64_t>(k);
  emittable_ = std::make_shared<const std::vector<std::size_t>>(std::move(emit));
}

bool Generator::is_emittable(TokenId id) const {
  return id < vocab_size_ && emit_index_[id] >= 0;
}

std::size_t Generator::emit_index(TokenId id) const {
  if (!is_emittable(id)) {
    throw DataError("token id " + std::to_string(id) + " cannot be produced by the decoder");
  }
  return static_cast<std::size_t>(emit_index_[id]);
}

double Generator::score(double log_prob, std::size_t token_count) const {
  if (!config_.length_normalize || token_count == 0) return log_prob;
  return log_prob / static_cast<double>(token_count);
}

EncoderOutput Generator::encode(const Graph& g, DialogueAct act, std::span<const TokenId> u_prev,
                                std::span<const TokenId> u_prev2) const {
  if (u_prev.empty()) throw DataError("generator: empty previous utterance");
  TokenSeq ids;
  ids.reserve(u_prev.size() + u_prev2.size() + 2);
  ids.push_back(Vocabulary::act_marker(act));
  ids.insert(ids.end(), u_prev.begin(), u_prev.end());
  if (!u_prev2.empty()) {
    ids.push_back(Vocabulary::kSep);
    ids.insert(ids.end(), u_prev2.begin(), u_prev2.end());
  }
  std::vector<Var> inputs = embed_sequence(g, embedding_, ids);
  if (u_prev2.empty()) inputs.push_back(g.zeros(config_.emb_dim));
  EncoderOutput out;
  out.states = bigru_encode(g, enc_fwd_, enc_bwd_, inputs);
  out.keys = attention_keys(g, att_, out.states.states);
  return out;
}

Tensor Generator::utterance_embedding(std::span<const TokenId> tokens) const {
  if (tokens.empty()) throw EmptyInputError("utterance embedding of an empty utterance");
  Tape tape(false);
  Graph g(tape, store_);
  auto enc = bigru_encode(g, enc_fwd_, enc_bwd_, embed_sequence(g, embedding_, tokens));
  return concat({enc.forward_final, enc.backward_final}).value();
}

DecodeHypothesis Generator::start(const Graph&, const EncoderOutput& enc) const {
  DecodeHypothesis h;
  h.state = enc.states.backward_final;
  return h;
}

std::pair<Var, Var> Generator::step(const Graph& g, const EncoderOutput& enc,
                                    const DecodeHypothesis& hyp) const {
  if (hyp.finished) throw StateError("step on a finished hypothesis");
  const TokenId prev = hyp.tokens.empty() ? Vocabulary::kBos : hyp.tokens.back();
  Var emb = row(g(embedding_), prev);
  Var context = attention_context(g, att_, enc.keys, hyp.state).context;
  Var state = gru_step(g, dec_, hyp.state, concat({emb, context}));
  Var logits = affine(g(out_w_), concat({state, emb}), g(out_b_));
  return {log_softmax(gather(logits, emittable_)), state};
}

Tensor Generator::next_token_distribution(const Graph& g, const EncoderOutput& enc,
                                          const DecodeHypothesis& hyp) const {
  auto [log_probs, state] = step(g, enc, hyp);
  Tensor out({vocab_size_});
  const auto& emit = emittable();
  for (std::size_t k = 0; k < emit.size(); ++k) out[emit[k]] = std::exp(log_probs.value()[k]);
  return out;
}

DecodeHypothesis Generator::step_decode(const Graph& g, const EncoderOutput& enc,
                                        const DecodeHypothesis& hyp, TokenId next) const {
  const std::size_t k = emit_index(next);
  auto [log_probs, state] = step(g, enc, hyp);
  DecodeHypothesis out = hyp;
  out.tokens.push_back(next);
  out.log_prob += log_probs.value()[k];
  out.state = state;
  out.finished = next == Vocabulary::kEos;
  return out;
}

Var Generator::sequence_log_prob(const Graph& g, DialogueAct act, std::span<const TokenId> u_prev,
                                 std::span<const TokenId> u_prev2,
                                 std::span<const TokenId> response) const {
  if (response.empty()) throw EmptyInputError("sequence_log_prob: empty response");
  EncoderOutput enc = encode(g, act, u_prev, u_prev2);
  DecodeHypothesis h = start(g, enc);
  std::vector<Var> terms;
  terms.reserve(response.size() + 1);
  for (std::size_t j = 0; j <= response.size(); ++j) {
    const TokenId next = j < response.size() ? response[j] : Vocabulary::kEos;
    if (j < response.size() && next == Vocabulary::kEos) {
      throw DataError("response contains EOS before its end");
    }
    const std::size_t k = emit_index(next);
    auto [log_probs, state] = step(g, enc, h);
    terms.push_back(pick(log_probs, k));
    h.tokens.push_back(next);
    h.state = state;
  }
  return add_n(terms);
}

double Generator::sequence_log_prob(DialogueAct act, std::span<const TokenId> u_prev,
                                    std::span<const TokenId> u_prev2,
                                    std::span<const TokenId> response) const {
  Tape tape(false);
  Graph g(tape, store_);
  return sequence_log_prob(g, act, u_prev, u_prev2, response).value()[0];
}

namespace {

ScoredResponse to_response(const Generator& gen, const DecodeHypothesis& h) {
  ScoredResponse r;
  r.tokens = h.tokens;
  r.ended_with_eos = !r.tokens.empty() && r.tokens.back() == Vocabulary::kEos;
  if (r.ended_with_eos) r.tokens.pop_back();
  r.log_prob = h.log_prob;
  r.score = gen.score(h.log_prob, h.tokens.size());
  return r;
}

bool ranks_before(const ScoredResponse& a, const ScoredResponse& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

}  // namespace

ScoredResponse Generator::greedy(DialogueAct act, std::span<const TokenId> u_prev,
                                 std::span<const TokenId> u_prev2, std::size_t max_len) const {
  if (max_len == 0) max_len = config_.max_len;
  Tape tape(false);
  Graph g(tape, store_);
  EncoderOutput enc = encode(g, act, u_prev, u_prev2);
  DecodeHypothesis h = start(g, enc);
  const auto& emit = emittable();
  while (!h.finished && h.tokens.size() < max_len) {
    auto [log_probs, state] = step(g, enc, h);
    const std::size_t k = argmax_index(log_probs.value().values());
    h.tokens.push_back(static_cast<TokenId>(emit[k]));
    h.log_prob += log_probs.value()[k];
    h.state = state;
    h.finished = emit[k] == Vocabulary::kEos;
  }
  return to_response(*this, h);
}

std::vector<ScoredResponse> Generator::beam_search(DialogueAct act, std::span<const TokenId> u_prev,
                                                   std::span<const TokenId> u_prev2,
                                                   std::size_t beam_size, std::size_t max_len) const {
  if (beam_size == 0) throw ConfigError("beam size must be at least 1");
  if (max_len == 0) max_len = config_.max_len;
  Tape tape(false);
  Graph g(tape, store_);
  EncoderOutput enc = encode(g, act, u_prev, u_prev2);
  const auto& emit = emittable();

  struct Candidate {
    double log_prob;
    std::size_t parent;
    std::size_t token;  // index into emit
  };
  std::vector<DecodeHypothesis> live = {start(g, enc)};
  std::vector<ScoredResponse> finished;
  for (std::size_t len = 1; len <= max_len && !live.empty(); ++len) {
    std::vector<Var> states;
    std::vector<Candidate> cand;
    cand.reserve(live.size() * emit.size());
    for (std::size_t p = 0; p < live.size(); ++p) {
      auto [log_probs, state] = step(g, enc, live[p]);
      states.push_back(state);
      const Tensor& lp = log_probs.value();
      for (std::size_t k = 0; k < emit.size(); ++k) cand.push_back({live[p].log_prob + lp[k], p, k});
    }
    auto better = [&](const Candidate& a, const Candidate& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      const TokenSeq& ta = live[a.parent].tokens;
      const TokenSeq& tb = live[b.parent].tokens;
      if (a.parent != b.parent && ta != tb) return ta < tb;
      return emit[a.token] < emit[b.token];
    };
    const std::size_t keep = std::min(beam_size, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep), cand.end(), better);

    std::vector<DecodeHypothesis> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& c = cand[i];
      DecodeHypothesis h;
      h.tokens = live[c.parent].tokens;
      h.tokens.push_back(static_cast<TokenId>(emit[c.token]));
      h.log_prob = c.log_prob;
      h.state = states[c.parent];
      h.finished = emit[c.token] == Vocabulary::kEos;
      if (h.finished || len == max_len) {
        finished.push_back(to_response(*this, h));
      } else {
        next.push_back(std::move(h));
      }
    }
    live = std::move(next);
  }
  std::sort(finished.begin(), finished.end(), ranks_before);
  return finished;
}

ScoredResponse Generator::sample_top_k(DialogueAct act, std::span<const TokenId> u_prev,
                                       std::span<const TokenId> u_prev2, std::size_t k, Rng& rng,
                                       std::size_t beam) const {
  if (k == 0) throw ConfigError("top-k sampling needs k >= 1");
  auto results = beam_search(act, u_prev, u_prev2, std::max(k, beam));
  const std::size_t n = std::min(k, results.size());
  return results[rng.index(n)];
}

}  // namespace dagm
