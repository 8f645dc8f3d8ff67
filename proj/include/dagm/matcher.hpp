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
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "dagm/corpus.hpp"
#include "dagm/layers.hpp"
#include "dagm/optim.hpp"
#include "dagm/params.hpp"
#include "dagm/rng.hpp"
#include "dagm/vocab.hpp"

namespace dagm {

struct MatcherConfig {
  std::size_t emb_dim = 32;
  std::size_t hidden = 32;
  // Most recent turns joined into the context; 0 keeps the full history.
  std::size_t context_turns = 2;
  // Uniform init range; small ranges leave the bilinear score stuck near 1/2.
  double init_scale = 0.3;
};

// Chronological join of the last `max_turns` turns with <sep> between them.
TokenSeq join_context(std::span<const TokenSeq> turns, std::size_t max_turns);

// Dual GRU encoder scored as sigmoid(c^T M r).
class Matcher {
 public:
  Matcher() = default;
  Matcher(std::size_t vocab_size, const MatcherConfig& config, std::uint64_t seed);

  const MatcherConfig& config() const { return config_; }
  std::size_t vocab_size() const { return vocab_size_; }
  ParameterStore& params() { return store_; }
  const ParameterStore& params() const { return store_; }
  ParamId interaction() const { return interaction_; }

  Var logit(const Graph& g, std::span<const TokenId> context, std::span<const TokenId> response) const;
  double score(std::span<const TokenId> context, std::span<const TokenId> response) const;

  const GruCellParams& context_cell() const { return ctx_; }
  const GruCellParams& response_cell() const { return resp_; }
  ParamId embedding() const { return embedding_; }

 private:
  MatcherConfig config_;
  std::size_t vocab_size_ = 0;
  ParameterStore store_;
  ParamId embedding_ = 0;
  GruCellParams ctx_, resp_;
  ParamId interaction_ = 0;
};

// Draws utterances from dialogues other than the given one, never equal in
// content to the true response.
class NegativeSampler {
 public:
  explicit NegativeSampler(const Corpus& corpus);
  const TokenSeq& sample(std::size_t dialogue, std::span<const TokenId> true_response, Rng& rng) const;

 private:
  struct Entry {
    std::size_t dialogue;
    const TokenSeq* tokens;
  };
  std::vector<Entry> pool_;
};

struct MatchExample {
  TokenSeq context;
  TokenSeq response;
  double label = 0.0;
};

// Positives are (context, next turn); each is followed by `negative_ratio`
// sampled negatives sharing its context.
std::vector<MatchExample> matcher_examples(const Corpus& corpus, std::size_t negative_ratio,
                                           std::size_t context_turns, Rng& rng);

struct MatcherTrainConfig {
  std::size_t epochs = 8;
  std::size_t negative_ratio = 1;
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;
  AdaDeltaConfig optimizer;
};

struct MatcherEpoch {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean BCE per example
  std::optional<double> valid_auc;
};

using MatcherEpochHook = std::function<void(const MatcherEpoch&)>;

// Negatives are resampled every epoch. With a validation corpus the
// parameters of the best-AUC epoch are kept.
std::vector<MatcherEpoch> train_matcher(Matcher& model, const Corpus& train, const Corpus* valid,
                                        const MatcherTrainConfig& config,
                                        const MatcherEpochHook& hook = {});

Var matcher_loss(const Graph& g, const Matcher& model, std::span<const MatchExample> batch);

struct MatcherReport {
  double mean_positive = 0.0;
  double mean_negative = 0.0;
  double auc = 0.0;
};

MatcherReport evaluate_matcher(const Matcher& model, std::span<const MatchExample> examples);

// Probability that a random positive outscores a random negative (ties 1/2).
double ranking_auc(std::span<const double> positives, std::span<const double> negatives);

}  // namespace dagm
