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

#include "dagm/corpus.hpp"
#include "dagm/generator.hpp"
#include "dagm/optim.hpp"
#include "dagm/policy.hpp"

namespace dagm {

// Per-dialogue terms of the joint objective: the policy predicts every
// turn's act from the turns before it; the generator reproduces every turn
// after the first from its act and the two preceding turns.
struct JointLoss {
  Var policy;
  Var generator;
  Var total;
  std::size_t policy_terms = 0;
  std::size_t generator_terms = 0;
};

// Acts come from Utterance::effective_act(); a turn without one throws.
JointLoss joint_sl_loss(Tape& tape, const PolicyNet& policy, const Generator& generator,
                        const Dialogue& dialogue);

struct SupervisedConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 8;  // dialogues per update
  // Epochs without a validation improvement before stopping; 0 disables.
  std::size_t patience = 3;
  std::uint64_t seed = 1;
  AdaDeltaConfig optimizer;
};

struct SupervisedEpoch {
  std::size_t epoch = 0;
  double policy_loss = 0.0;     // mean per predicted act
  double generator_loss = 0.0;  // mean per response
  std::optional<double> valid_policy_loss;
  std::optional<double> valid_generator_loss;
};

using SupervisedEpochHook = std::function<void(const SupervisedEpoch&)>;

struct SupervisedLossTotals {
  double policy = 0.0;
  double generator = 0.0;
  std::size_t policy_terms = 0;
  std::size_t generator_terms = 0;
};

SupervisedLossTotals evaluate_joint_loss(const PolicyNet& policy, const Generator& generator,
                                         const Corpus& corpus);

// With a validation corpus the best epoch by summed mean validation loss is
// restored at the end.
std::vector<SupervisedEpoch> train_supervised(PolicyNet& policy, Generator& generator,
                                              const Corpus& train, const Corpus* valid,
                                              const SupervisedConfig& config,
                                              const SupervisedEpochHook& hook = {});

}  // namespace dagm
