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
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dagm/acts.hpp"
#include "dagm/corpus.hpp"
#include "dagm/generator.hpp"
#include "dagm/matcher.hpp"
#include "dagm/policy.hpp"
#include "dagm/rng.hpp"

namespace dagm {

class ActPolicy {
 public:
  virtual ~ActPolicy() = default;
  virtual ActDistribution distribution(std::span<const SessionTurn> session) const = 0;
};

class ResponseGenerator {
 public:
  virtual ~ResponseGenerator() = default;
  // u_prev is empty only when the bot opens the dialogue.
  virtual TokenSeq respond(DialogueAct act, std::span<const TokenId> u_prev,
                           std::span<const TokenId> u_prev2, SelectMode mode, Rng& rng) const = 0;
  // e(u) used by the repetition tests.
  virtual Tensor embed(std::span<const TokenId> utterance) const = 0;
};

class RelevanceScorer {
 public:
  virtual ~RelevanceScorer() = default;
  // context is the chronological history before the response.
  virtual double relevance(std::span<const TokenSeq> context, std::span<const TokenId> response) const = 0;
};

class NetworkPolicy final : public ActPolicy {
 public:
  explicit NetworkPolicy(const PolicyNet& net) : net_(net) {}
  ActDistribution distribution(std::span<const SessionTurn> session) const override {
    return net_.act_distribution(session);
  }

 private:
  const PolicyNet& net_;
};

// Sample mode draws uniformly from the top-k beam results; greedy mode takes
// the beam top-1.
class NetworkGenerator final : public ResponseGenerator {
 public:
  NetworkGenerator(const Generator& net, std::size_t top_k, std::size_t beam = 0)
      : net_(net), top_k_(top_k), beam_(beam) {}
  TokenSeq respond(DialogueAct act, std::span<const TokenId> u_prev,
                   std::span<const TokenId> u_prev2, SelectMode mode, Rng& rng) const override;
  Tensor embed(std::span<const TokenId> utterance) const override {
    return net_.utterance_embedding(utterance);
  }

 private:
  const Generator& net_;
  std::size_t top_k_;
  std::size_t beam_;
};

// Empty histories score 1/2, the sigmoid of a zero context vector.
class NetworkScorer final : public RelevanceScorer {
 public:
  explicit NetworkScorer(const Matcher& net) : net_(net) {}
  double relevance(std::span<const TokenSeq> context, std::span<const TokenId> response) const override;

 private:
  const Matcher& net_;
};

enum class Termination { kRepetition3, kRepetitionSkip, kMaxTurns };

std::string_view termination_name(Termination t);

// Rule (1): both consecutive cosines exceed the threshold. Rule (2): the
// skip cosine cos(e(u_{i-1}), e(u_{i+1})) does. (1) is tested first.
std::optional<Termination> should_terminate(const Tensor& e_prev, const Tensor& e_cur,
                                            const Tensor& e_next, double threshold);

struct RlConfig {
  std::size_t max_turns = 8;   // T
  std::size_t rollouts = 4;    // N
  double alpha = 0.67;
  double beta = 0.33;
  double similarity_threshold = 0.9;
  std::size_t top_k = 5;
  double learning_rate = 0.05;
  std::size_t batch_size = 4;  // episodes per update
  std::size_t iterations = 10;
  SelectMode rollout_mode = SelectMode::kSample;

  // Throws ConfigError.
  void validate() const;
};

struct RolloutTurn {
  Speaker speaker = Speaker::kA;
  DialogueAct act = DialogueAct::kCmS;
  TokenSeq tokens;
  bool generated = false;
};

struct RolloutRecord {
  std::vector<RolloutTurn> turns;  // history first, then generated turns
  std::size_t history_length = 0;
  Termination termination = Termination::kMaxTurns;
  std::size_t length() const { return turns.size(); }
};

struct ForcedTurn {
  DialogueAct act;
  std::optional<TokenSeq> response;
};

// Alternating self-play continuing `history`. The T cap is checked before
// each new turn, the repetition rules after each generated one.
RolloutRecord simulate_dialogue(const ActPolicy& policy, const ResponseGenerator& generator,
                                std::span<const SessionTurn> history, const RlConfig& config,
                                SelectMode mode, Rng& rng,
                                const std::optional<ForcedTurn>& forced_first = std::nullopt,
                                Speaker first_speaker = Speaker::kA);

struct RewardEstimate {
  double expected_length = 0.0;
  double expected_relevance = 0.0;
  double reward = 0.0;
  std::size_t rollouts = 0;
};

// N rollouts continuing after (s, a). Relevance averages the scorer over the
// generated turns of each rollout, then over rollouts.
RewardEstimate estimate_reward(const ActPolicy& policy, const ResponseGenerator& generator,
                               const RelevanceScorer& scorer, std::span<const SessionTurn> state,
                               DialogueAct act, const RlConfig& config, Rng& rng);

struct EpisodeStep {
  Session state;
  DialogueAct act = DialogueAct::kCmS;
  std::vector<double> rewards;  // r(a, s) for all 7 acts, by act index
};

using Episode = std::vector<EpisodeStep>;

// Advantage of step t: sum over i >= t of (r(a_i, s_i) - b_t), with
// b_t = mean_a r(a, s_t).
std::vector<double> episode_advantages(const Episode& episode);

struct ReinforceDiagnostics {
  double mean_advantage = 0.0;
  double gradient_norm = 0.0;
  std::size_t steps = 0;
};

// One gradient-ascent step on sum_t A_t log p_a(a_t | s_t) over the batch.
// Only the policy parameters change.
ReinforceDiagnostics reinforce_step(PolicyNet& policy, std::span<const Episode> batch,
                                    const RlConfig& config);

struct RlIteration {
  std::size_t iteration = 0;
  double mean_reward = 0.0;  // mean r(a_t, s_t) over visited states
  double mean_length = 0.0;  // mean episode length
};

using RlIterationHook = std::function<void(const RlIteration&)>;

// Episodes start from an utterance sampled from `corpus` (tagged acts).
std::vector<RlIteration> train_rl(PolicyNet& policy, const ResponseGenerator& generator,
                                  const RelevanceScorer& scorer, const Corpus& corpus,
                                  const RlConfig& config, Rng& rng,
                                  const RlIterationHook& hook = {});

// Uses top-k beam sampling for responses and the matcher for relevance.
std::vector<RlIteration> train_rl(PolicyNet& policy, const Generator& generator,
                                  const Matcher& matcher, const Corpus& corpus,
                                  const RlConfig& config, Rng& rng,
                                  const RlIterationHook& hook = {});

void write_learning_curve(std::ostream& out, std::span<const RlIteration> curve);

// Corpus-format transcript with the termination cause attached.
Dialogue rollout_to_dialogue(const RolloutRecord& record, const Vocabulary& vocab,
                             const std::string& id);

// A single-turn history drawn uniformly from all utterances of `corpus`.
Session sample_opening(const Corpus& corpus, Rng& rng);

}  // namespace dagm
