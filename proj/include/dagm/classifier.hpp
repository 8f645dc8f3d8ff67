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
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "dagm/acts.hpp"
#include "dagm/corpus.hpp"
#include "dagm/layers.hpp"
#include "dagm/optim.hpp"
#include "dagm/params.hpp"
#include "dagm/vocab.hpp"

namespace dagm {

struct ClassifierConfig {
  std::size_t word_dim = 32;
  std::size_t act_dim = 16;
  std::size_t hidden = 32;
  std::size_t mlp_hidden = 32;
  // One biGRU for both u_i and u_{i-1} instead of two.
  bool shared_encoder = false;
};

// c(u_i, u_{i-1}, a_{i-1}): biGRU encodings of the current and previous
// utterance plus an embedding of the previous act, fed to a 2-layer MLP.
class ActClassifier {
 public:
  ActClassifier() = default;
  ActClassifier(std::size_t vocab_size, const ClassifierConfig& config, std::uint64_t seed);

  const ClassifierConfig& config() const { return config_; }
  std::size_t vocab_size() const { return vocab_size_; }
  ParameterStore& params() { return store_; }
  const ParameterStore& params() const { return store_; }
  ParamId embedding() const { return embedding_; }
  std::size_t mlp_input_size() const { return mlp_.input_size; }

  // Empty u_prev / missing a_prev are replaced by zero vectors.
  Var logits(const Graph& g, std::span<const TokenId> u, std::span<const TokenId> u_prev,
             std::optional<DialogueAct> a_prev) const;

  ActDistribution classify(std::span<const TokenId> u, std::span<const TokenId> u_prev,
                           std::optional<DialogueAct> a_prev) const;

  // Tags each turn from (u_k, u_{k-1}, own prediction for k-1).
  std::vector<DialogueAct> predict_dialogue(const Dialogue& d) const;

  // Used by tests to hand-set parameters.
  const GruCellParams& current_forward() const { return cur_fwd_; }
  const GruCellParams& current_backward() const { return cur_bwd_; }
  const GruCellParams& previous_forward() const { return prev_fwd_; }
  const GruCellParams& previous_backward() const { return prev_bwd_; }
  ParamId act_table() const { return act_table_; }
  const MlpParams& mlp() const { return mlp_; }

 private:
  Var encode(const Graph& g, const GruCellParams& f, const GruCellParams& b,
             std::span<const TokenId> u) const;

  ClassifierConfig config_;
  std::size_t vocab_size_ = 0;
  ParameterStore store_;
  ParamId embedding_ = 0;
  GruCellParams cur_fwd_, cur_bwd_, prev_fwd_, prev_bwd_;
  ParamId act_table_ = 0;
  MlpParams mlp_;
};

struct ClassifierTrainConfig {
  std::size_t max_epochs = 200;
  // Stop after this many epochs without a validation accuracy gain.
  std::size_t patience = 5;
  // 0 means full batch.
  std::size_t batch_size = 16;
  bool shuffle = true;
  bool freeze_embeddings = false;
  std::uint64_t seed = 1;
  AdaDeltaConfig optimizer;
};

struct ClassifierEpoch {
  std::size_t epoch = 0;          // 1-based
  double train_loss = 0.0;        // mean cross entropy per utterance
  double train_accuracy = 0.0;    // sequential protocol
  std::optional<double> valid_accuracy;
};

struct ClassifierTrainResult {
  std::vector<ClassifierEpoch> epochs;
  std::size_t best_epoch = 0;
  bool early_stopped = false;
};

using ClassifierEpochHook = std::function<void(const ClassifierEpoch&)>;

// Teacher forcing: the previous act fed during training is the argmax of the
// previous turn's gold distribution. With a validation set the parameters of
// the best validation epoch are restored at the end.
ClassifierTrainResult train_classifier(ActClassifier& model, const Corpus& train,
                                       const Corpus* valid, const ClassifierTrainConfig& config,
                                       const ClassifierEpochHook& hook = {});

// Summed cross entropy over every labeled turn under teacher forcing.
Var classifier_loss(const Graph& g, const ActClassifier& model, const Dialogue& d);

double evaluate_classifier(const ActClassifier& model, const Corpus& corpus);

// Fraction of utterances whose argmax prediction matches the gold argmax.
double prediction_accuracy(std::span<const DialogueAct> predicted,
                           std::span<const ActDistribution> gold);

// Reads "token v1 ... vD" lines into rows of the embedding table for tokens
// present in `vocab`. Returns the number of rows replaced.
std::size_t load_text_embeddings(std::istream& in, const Vocabulary& vocab, Tensor& table);

// Fills predicted acts on every turn (act_source "tagged").
void tag_corpus(Corpus& corpus, const ActClassifier& model);

}  // namespace dagm
