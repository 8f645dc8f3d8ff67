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
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dagm/bundle.hpp"
#include "dagm/classifier.hpp"
#include "dagm/config.hpp"
#include "dagm/corpus.hpp"
#include "dagm/matcher.hpp"
#include "dagm/metrics.hpp"
#include "dagm/selfplay.hpp"
#include "dagm/supervised.hpp"

namespace dagm {

// Artifact layout under one work directory.
struct WorkDir {
  std::filesystem::path root;

  std::filesystem::path corpus(const std::string& split) const;
  std::filesystem::path corpus_stats() const;
  std::filesystem::path tagged(const std::string& split) const;
  std::filesystem::path model(const std::string& name) const;
  std::filesystem::path log(const std::string& name) const;
  std::filesystem::path transcripts(const std::string& model) const;
  std::filesystem::path engagement(const std::string& model) const;
  std::filesystem::path metrics_json(const std::string& model) const;
  std::filesystem::path metrics_csv(const std::string& model) const;
  std::filesystem::path act_report(const std::string& model) const;
};

inline const std::array<std::string, 3> kSplits = {"train", "valid", "test"};

// Reads a corpus file and tokenizes it with `vocab`.
Corpus load_tokenized(const std::filesystem::path& path, const Vocabulary& vocab);

// Stage functions behind the CLI subcommands. Each reads its inputs from
// and writes its outputs to `work`; progress lines go to `log`.
void run_gen_corpus(const PipelineConfig& cfg, const WorkDir& work, std::ostream& log);

struct ClassifierStageResult {
  ClassifierTrainResult training;
  double test_accuracy = 0.0;
};
ClassifierStageResult run_train_classifier(const PipelineConfig& cfg, const WorkDir& work,
                                           std::ostream& log);

// Tag accuracy against the gold argmax, per split.
std::array<double, 3> run_tag(const PipelineConfig& cfg, const WorkDir& work, std::ostream& log);

std::vector<SupervisedEpoch> run_train_sl(const PipelineConfig& cfg, const WorkDir& work,
                                          std::ostream& log);
std::vector<MatcherEpoch> run_train_matcher(const PipelineConfig& cfg, const WorkDir& work,
                                            std::ostream& log);
std::vector<RlIteration> run_train_rl(const PipelineConfig& cfg, const WorkDir& work,
                                      std::ostream& log);

struct SimulationResult {
  Corpus transcripts;
  std::vector<double> lengths;
  EngagementReport engagement;
};
// `model` names a bundle under models/ ("sl" or "rl"). Episode e uses the
// same opening for every model.
SimulationResult run_simulate(const PipelineConfig& cfg, const WorkDir& work, const std::string& model,
                              std::size_t episodes, std::ostream& log);

struct ActConditioning {
  std::size_t contexts = 0;
  std::array<double, kNumActs> mean_length{};
  std::array<double, kNumActs> distinct1{};
  double distinct1_pooled = 0.0;  // over the responses of all acts
};

struct EvalExample {
  Session context;
  TokenSeq reference;
};

// The first `limit` test dialogues with at least two turns; the last turn is
// the reference.
std::vector<EvalExample> eval_examples(const Corpus& test, std::size_t limit);

// Beam top-1 for every act on every example.
ActConditioning act_conditioning(const Generator& generator, std::span<const EvalExample> examples,
                                 std::size_t beam);

struct EvalResult {
  MetricReport report;
  ActConditioning acts;
};
// Responses use the policy argmax act and the beam top-1. Engagement comes
// from the model's simulation transcripts when they exist.
EvalResult run_eval(const PipelineConfig& cfg, const WorkDir& work, const std::string& model,
                    std::ostream& log);

std::string act_conditioning_json(const ActConditioning& acts);

}  // namespace dagm
