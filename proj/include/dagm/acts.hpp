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
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "dagm/tensor.hpp"

namespace dagm {

// The seven acts, in their fixed index order 0..6.
enum class DialogueAct : std::uint8_t {
  kCmS = 0,  // context maintain, statement
  kCmQ = 1,  // context maintain, question
  kCmA = 2,  // context maintain, answer
  kCsS = 3,  // context switch, statement
  kCsQ = 4,  // context switch, question
  kCsA = 5,  // context switch, answer
  kOther = 6,
};

inline constexpr std::size_t kNumActs = 7;

inline constexpr std::array<DialogueAct, kNumActs> kAllActs = {
    DialogueAct::kCmS, DialogueAct::kCmQ, DialogueAct::kCmA, DialogueAct::kCsS,
    DialogueAct::kCsQ, DialogueAct::kCsA, DialogueAct::kOther};

constexpr std::size_t act_index(DialogueAct a) { return static_cast<std::size_t>(a); }
DialogueAct act_from_index(std::size_t index);

std::string_view act_name(DialogueAct a);
std::optional<DialogueAct> try_parse_act(std::string_view name);
DialogueAct parse_act(std::string_view name);  // throws DataError
std::string_view act_definition(DialogueAct a);

constexpr bool is_context_switch(DialogueAct a) {
  return a == DialogueAct::kCsS || a == DialogueAct::kCsQ || a == DialogueAct::kCsA;
}
constexpr bool is_question(DialogueAct a) {
  return a == DialogueAct::kCmQ || a == DialogueAct::kCsQ;
}

// Probability vector over the seven acts.
class ActDistribution {
 public:
  static constexpr double kTolerance = 1e-6;

  ActDistribution() = default;  // uniform
  // Validates nonnegativity and the unit sum; throws DataError.
  static ActDistribution from_values(std::span<const double> values);
  static ActDistribution one_hot(DialogueAct a);
  // Average of one-hot votes, e.g. three annotators.
  static ActDistribution from_votes(std::span<const DialogueAct> votes);

  double operator[](std::size_t i) const { return p_[i]; }
  double operator[](DialogueAct a) const { return p_[act_index(a)]; }
  const std::array<double, kNumActs>& values() const { return p_; }
  // Lowest index wins ties.
  DialogueAct argmax() const;
  Tensor to_tensor() const;

  bool operator==(const ActDistribution&) const = default;

 private:
  std::array<double, kNumActs> p_ = {1.0 / 7, 1.0 / 7, 1.0 / 7, 1.0 / 7,
                                     1.0 / 7, 1.0 / 7, 1.0 / 7};
};

// Lowest index wins ties.
std::size_t argmax_index(std::span<const double> values);

}  // namespace dagm
