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
#include <string>
#include <vector>

#include "dagm/acts.hpp"
#include "dagm/corpus.hpp"

namespace dagm {

struct ToyTopic {
  std::string name;
  std::vector<std::string> nouns;
};

// Scripted dialogue world with gold acts by construction.
//
// A dialogue is a sequence of context blocks. A block fixes a topic noun and,
// for every act, which template realizes it; staying in the block therefore
// eventually repeats earlier turns, while a CS.* act opens a new block on a
// different topic. Templates use the slot "{n}" for the block noun.
struct ToyWorldConfig {
  std::vector<ToyTopic> topics;
  std::array<std::vector<std::string>, kNumActs> templates;
  std::array<double, kNumActs> initial{};
  // transition[previous act][next act]
  std::array<std::array<double, kNumActs>, kNumActs> transition{};
  // A switch moves to the next topic in list order instead of a random one.
  bool cyclic_switch = true;
  std::size_t min_turns = 4;
  std::size_t max_turns = 8;

  // Throws ConfigError on malformed distributions or templates.
  void validate() const;
};

ToyWorldConfig default_toy_world();

// Every row of the transition matrix (and the initial distribution) is
// replaced so that CS.* acts carry `switch_mass` in total, split evenly, and
// the remaining mass goes to the non-switch acts in the proportions of the
// original row.
ToyWorldConfig with_switch_mass(ToyWorldConfig config, double switch_mass);

// Deterministic in (seed, n_dialogues, config). Dialogue ids are
// "<prefix>-<index>".
Corpus generate_toy_corpus(std::uint64_t seed, std::size_t n_dialogues,
                           const ToyWorldConfig& config, const std::string& id_prefix = "toy");

}  // namespace dagm
