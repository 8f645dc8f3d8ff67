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

#include "dagm/matcher.hpp"

#include <algorithm>

#include "dagm/error.hpp"

namespace dagm {

TokenSeq join_context(std::span<const TokenSeq> turns, std::size_t max_turns) {
  const std::size_t first =
      max_turns == 0 || turns.size() <= max_turns ? 0 : turns.size() - max_turns;
  TokenSeq out;
  for (std::size_t i = first; i < turns.size(); ++i) {
    if (i > first) out.push_back(Vocabulary::kSep);
    out.insert(out.end(), turns[i].begin(), turns[i].end());
  }
  return out;
}

Matcher::Matcher(std::size_t vocab_size, const MatcherConfig& config, std::uint64_t seed)
    : config_(config), vocab_size_(vocab_size) {
  if (vocab_size == 0) throw ConfigError("matcher needs a nonempty vocabulary");
  Rng rng(seed);
  ParamBuilder b(store_, rng, "match", config.init_scale);
  embedding_ = b.matrix("embedding", vocab_size, config.emb_dim);
  ctx_ = GruCellParams::create(b.child("context"), config.emb_dim, config.hidden);
  resp_ = GruCellParams::create(b.child("response"), config.emb_dim, config.hidden);
  interaction_ = b.matrix("M", config.hidden, config.hidden);
}

Var Matcher::logit(const Graph& g, std::span<const TokenId> context,
                   std::span<const TokenId> response) const {
  if (context.empty() || response.empty()) throw DataError("match_score: empty context or response");
  Var c = gru_run(g, ctx_, embed_sequence(g, embedding_, context)).back();
  Var r = gru_run(g, resp_, embed_sequence(g, embedding_, response)).back();
  return dot(c, matvec(g(interaction_), r));
}

double Matcher::score(std::span<const TokenId> context, std::span<const TokenId> response) const {
  Tape tape(false);
  Graph g(tape, store_);
  const double l = logit(g, context, response).value()[0];
  return 1.0 / (1.0 + std::exp(-l));
}

NegativeSampler::NegativeSampler(const Corpus& corpus) {
  for (std::size_t i = 0; i < corpus.size(); ++i)
    for (const auto& u : corpus[i].turns)
      if (!u.tokens.empty()) pool_.push_back({i, &u.tokens});
}

const TokenSeq& NegativeSampler::sample(std::size_t dialogue, std::span<const TokenId> true_response,
                                        Rng& rng) const {
  if (pool_.empty()) throw DataError("negative sampler has no utterances");
  // Rejection sampling; fall back to a scan so that a valid negative is found
  // whenever one exists.
  for (int attempt = 0; attempt < 64; ++attempt) {
    const Entry& e = pool_[rng.index(pool_.size())];
    if (e.dialogue != dialogue && !std::ranges::equal(*e.tokens, true_response)) return *e.tokens;
  }
  const std::size_t start = rng.index(pool_.size());
  for (std::size_t k = 0; k < pool_.size(); ++k) {
    const Entry& e = pool_[(start + k) % pool_.size()];
    if (e.dialogue != dialogue && !std::ranges::equal(*e.tokens, true_response)) return *e.tokens;
  }
  throw DataError("no negative response available outside dialogue " + std::to_string(dialogue));
}

std::vector<MatchExample> matcher_examples(const Corpus& corpus, std::size_t negative_ratio,
                                           std::size_t context_turns, Rng& rng) {
  if (corpus.size() < 2) throw DataError("matcher training needs at least 2 dialogues");
  NegativeSampler sampler(corpus);
  std::vector<MatchExample> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& turns = corpus[i].turns;
    std::vector<TokenSeq> history;
    for (std::size_t k = 0; k < turns.size(); ++k) {
      if (turns[k].tokens.empty()) throw DataError("matcher: untokenized utterance in " + corpus[i].id);
      if (k > 0) {
        TokenSeq ctx = join_context(history, context_turns);
        out.push_back({ctx, turns[k].tokens, 1.0});
        for (std::size_t n = 0; n < negative_ratio; ++n)
          out.push_back({ctx, sampler.sample(i, turns[k].tokens, rng), 0.0});
      }
      history.push_back(turns[k].tokens);
    }
  }
  return out;
}

Var matcher_loss(const Graph& g, const Matcher& model, std::span<const MatchExample> batch) {
  std::vector<Var> terms;
  terms.reserve(batch.size());
  for (const auto& ex : batch)
    terms.push_back(binary_cross_entropy_logit(model.logit(g, ex.context, ex.response), ex.label));
  if (terms.empty()) throw EmptyInputError("matcher_loss of an empty batch");
  return add_n(terms);
}

double ranking_auc(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty()) throw EmptyInputError("AUC needs both classes");
  std::vector<double> neg(negatives.begin(), negatives.end());
  std::sort(neg.begin(), neg.end());
  double wins = 0.0;
  for (double p : positives) {
    auto lo = std::lower_bound(neg.begin(), neg.end(), p);
    auto hi = std::upper_bound(neg.begin(), neg.end(), p);
    wins += static_cast<double>(lo - neg.begin()) + 0.5 * static_cast<double>(hi - lo);
  }
  return wins / (static_cast<double>(positives.size()) * static_cast<double>(neg.size()));
}

MatcherReport evaluate_matcher(const Matcher& model, std::span<const MatchExample> examples) {
  std::vector<double> pos, neg;
  for (const auto& ex : examples) (ex.label > 0.5 ? pos : neg).push_back(model.score(ex.context, ex.response));
  MatcherReport r;
  if (!pos.empty()) {
    for (double v : pos) r.mean_positive += v;
    r.mean_positive /= static_cast<double>(pos.size());
  }
  if (!neg.empty()) {
    for (double v : neg) r.mean_negative += v;
    r.mean_negative /= static_cast<double>(neg.size());
  }
  if (!pos.empty() && !neg.empty()) r.auc = ranking_auc(pos, neg);
  return r;
}

std::vector<MatcherEpoch> train_matcher(Matcher& model, const Corpus& train, const Corpus* valid,
                                        const MatcherTrainConfig& config,
                                        const MatcherEpochHook& hook) {
  Rng rng(config.seed);
  std::vector<MatchExample> valid_examples;
  if (valid) {
    Rng vrng = rng.split(1);
    valid_examples = matcher_examples(*valid, config.negative_ratio, model.config().context_turns, vrng);
  }
  ParameterStore& store = model.params();
  AdaDelta opt(store, config.optimizer);
  std::vector<MatcherEpoch> log;
  std::optional<ParameterStore> best;
  double best_auc = -1.0;
  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    auto examples = matcher_examples(train, config.negative_ratio, model.config().context_turns, rng);
    for (std::size_t i = examples.size(); i > 1; --i) std::swap(examples[i - 1], examples[rng.index(i)]);
    double total = 0.0;
    for (std::size_t start = 0; start < examples.size(); start += batch) {
      const std::size_t n = std::min(batch, examples.size() - start);
      Tape tape;
      Graph g(tape, store);
      Var loss = matcher_loss(g, model, std::span<const MatchExample>(examples).subspan(start, n));
      total += loss.value()[0];
      tape.backward(loss);
      Gradients grads(store);
      tape.accumulate(store, grads);
      opt.update(store, grads);
    }
    MatcherEpoch e;
    e.epoch = epoch;
    e.train_loss = total / static_cast<double>(examples.size());
    if (valid) {
      e.valid_auc = evaluate_matcher(model, valid_examples).auc;
      if (*e.valid_auc > best_auc) {
        best_auc = *e.valid_auc;
        best = store;
      }
    }
    log.push_back(e);
    if (hook) hook(e);
  }
  if (best) store = *best;
  return log;
}

}  // namespace dagm
