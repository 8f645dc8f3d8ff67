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
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dagm/classifier.hpp"
#include "dagm/generator.hpp"
#include "dagm/matcher.hpp"
#include "dagm/optim.hpp"
#include "dagm/policy.hpp"
#include "dagm/selfplay.hpp"
#include "dagm/supervised.hpp"

namespace dagm {

// Every tunable of the pipeline. The INI form uses one section per module;
// see configs/toy.cfg for the full key list.
struct PipelineConfig {
  std::uint64_t seed = 1;

  std::size_t train_dialogues = 300;
  std::size_t valid_dialogues = 30;
  std::size_t test_dialogues = 50;
  // Total CS.* mass of every transition row; unset keeps the world default.
  std::optional<double> switch_mass;
  std::size_t max_vocab = 30000;

  AdaDeltaConfig optimizer;

  ClassifierConfig classifier;
  ClassifierTrainConfig classifier_train;
  std::string classifier_embeddings;  // optional word-vector file

  PolicyConfig policy;
  GeneratorConfig generator;
  SupervisedConfig supervised;

  MatcherConfig matcher;
  MatcherTrainConfig matcher_train;

  RlConfig rl;
  std::size_t rl_beam = 5;  // beam width whose top_k results are sampled

  std::size_t simulate_episodes = 200;
  std::size_t eval_contexts = 100;
  std::size_t eval_beam = 5;

  // Throws ConfigError.
  void validate() const;
};

// Throws ConfigError on unknown sections or keys and unparsable values.
PipelineConfig parse_config(std::string_view ini_text);
PipelineConfig load_config(const std::filesystem::path& path);

// "section.key=value".
void apply_override(PipelineConfig& config, std::string_view assignment);

// Canonical INI text; parse_config(config_to_ini(c)) reproduces c.
std::string config_to_ini(const PipelineConfig& config);

// Stage seeds derived from the run seed.
enum class SeedStream : std::uint64_t {
  kCorpus = 1,
  kClassifier,
  kPolicy,
  kGenerator,
  kMatcher,
  kSupervised,
  kMatcherTrain,
  kRl,
  kSimulate,
  kEval,
  kChat,
};
std::uint64_t stage_seed(const PipelineConfig& config, SeedStream stream);

}  // namespace dagm
