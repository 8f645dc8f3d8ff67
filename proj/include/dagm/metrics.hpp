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

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dagm/acts.hpp"
#include "dagm/corpus.hpp"
#include "dagm/rng.hpp"
#include "dagm/tensor.hpp"
#include "dagm/vocab.hpp"

namespace dagm {

// Zero-count n-gram precisions are replaced by this before taking logs.
inline constexpr double kBleuEpsilon = 1e-9;

// Corpus BLEU with uniform weights over 1..n and the brevity penalty.
// Throws DataError on empty or misaligned inputs, or n == 0.
double bleu(std::span<const TokenSeq> candidates, std::span<const TokenSeq> references,
            std::size_t n);

// Unique n-grams over all responses divided by the total n-gram count.
// 0 when no response is long enough.
double distinct_n(std::span<const TokenSeq> responses, std::size_t n);

// Fraction of response tokens (by occurrence) absent from the context.
// Throws DataError on an empty response.
double out_of_context_ratio(std::span<const TokenSeq> context, std::span<const TokenId> response);

double mean_length(std::span<const TokenSeq> responses);

// Rows of `table` indexed by token id. Reserved ids, rows past the end and
// all-zero rows count as out of vocabulary.
class WordVectors {
 public:
  explicit WordVectors(Tensor table, bool skip_reserved = true);
  std::optional<std::span<const double>> lookup(TokenId id) const;
  std::size_t dim() const { return dim_; }

 private:
  Tensor table_;
  std::size_t dim_ = 0;
  bool skip_reserved_ = true;
};

struct EmbeddingScores {
  double average = 0.0;
  double extrema = 0.0;
  double greedy = 0.0;
  std::size_t pairs = 0;    // evaluated
  std::size_t skipped = 0;  // a side had no known word
};

// Per-sentence scores; nullopt if either side has no known word.
std::optional<std::array<double, 3>> embedding_scores(std::span<const TokenId> candidate,
                                                      std::span<const TokenId> reference,
                                                      const WordVectors& vectors);

EmbeddingScores embedding_metrics(std::span<const TokenSeq> candidates,
                                  std::span<const TokenSeq> references, const WordVectors& vectors);

struct EngagementReport {
  std::size_t dialogues = 0;
  double mean_length = 0.0;
  double switch_fraction = 0.0;    // dialogues with at least one CS.* turn
  double question_fraction = 0.0;  // dialogues with at least one question act
  std::optional<double> mean_length_with_switch;
  std::optional<double> mean_length_without_switch;
  std::array<std::size_t, kNumActs> act_counts{};
};

// Turns without an act count toward length only.
EngagementReport engagement_report(std::span<const Dialogue> dialogues);
std::string engagement_to_json(const EngagementReport& report);

struct BootstrapInterval {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

// Percentile bootstrap of mean(treatment) - mean(control), resampling each
// group independently.
BootstrapInterval bootstrap_mean_difference(std::span<const double> treatment,
                                            std::span<const double> control, std::size_t resamples,
                                            Rng& rng, double level = 0.95);

struct ResponseSet {
  std::vector<std::vector<TokenSeq>> contexts;  // chronological turns per example
  std::vector<TokenSeq> candidates;
  std::vector<TokenSeq> references;
};

struct MetricReport {
  std::size_t examples = 0;
  double bleu1 = 0.0;
  double bleu2 = 0.0;
  EmbeddingScores embedding;
  double distinct1 = 0.0;
  double distinct2 = 0.0;
  double out_of_context = 0.0;  // mean over examples
  double mean_response_length = 0.0;
  std::optional<EngagementReport> engagement;

  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

MetricReport evaluate_responses(const ResponseSet& set, const WordVectors& vectors);

}  // namespace dagm
