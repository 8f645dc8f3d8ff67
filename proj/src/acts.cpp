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

#include "dagm/acts.hpp"

#include <cmath>
#include <string>

#include "dagm/error.hpp"

namespace dagm {

namespace {

constexpr std::array<std::string_view, kNumActs> kNames = {"CM.S", "CM.Q", "CM.A", "CS.S",
                                                           "CS.Q", "CS.A", "O"};

constexpr std::array<std::string_view, kNumActs> kDefinitions = {
    "Keeps the current topic going with information, a suggestion, or a comment.",
    "Asks a question that stays within the current topic.",
    "Answers or responds to the previous turn without leaving the topic.",
    "Brings in new content to move the conversation to another topic.",
    "Asks a question meant to move the conversation to another topic.",
    "Replies to the previous turn and starts a new topic in the same breath.",
    "Greetings, thanks, requests and other social moves.",
};

}  // namespace

DialogueAct act_from_index(std::size_t index) {
  if (index >= kNumActs) throw DataError("act index out of range: " + std::to_string(index));
  return static_cast<DialogueAct>(index);
}

std::string_view act_name(DialogueAct a) { return kNames[act_index(a)]; }

std::optional<DialogueAct> try_parse_act(std::string_view name) {
  for (std::size_t i = 0; i < kNumActs; ++i) {
    if (kNames[i] == name) return static_cast<DialogueAct>(i);
  }
  return std::nullopt;
}

DialogueAct parse_act(std::string_view name) {
  auto a = try_parse_act(name);
  if (!a) throw DataError("unknown dialogue act: '" + std::string(name) + "'");
  return *a;
}

std::string_view act_definition(DialogueAct a) { return kDefinitions[act_index(a)]; }

ActDistribution ActDistribution::from_values(std::span<const double> values) {
  if (values.size() != kNumActs) {
    throw DataError("act distribution needs 7 values, got " + std::to_string(values.size()));
  }
  ActDistribution d;
  double total = 0.0;
  for (std::size_t i = 0; i < kNumActs; ++i) {
    if (!(values[i] >= 0.0) || !std::isfinite(values[i])) {
      throw DataError("act distribution entries must be finite and nonnegative");
    }
    d.p_[i] = values[i];
    total += values[i];
  }
  if (std::abs(total - 1.0) > kTolerance) {
    throw DataError("act distribution sums to " + std::to_string(total) + ", expected 1");
  }
  return d;
}

ActDistribution ActDistribution::one_hot(DialogueAct a) {
  ActDistribution d;
  d.p_.fill(0.0);
  d.p_[act_index(a)] = 1.0;
  return d;
}

ActDistribution ActDistribution::from_votes(std::span<const DialogueAct> votes) {
  if (votes.empty()) throw EmptyInputError("act distribution from no votes");
  ActDistribution d;
  d.p_.fill(0.0);
  for (DialogueAct v : votes) d.p_[act_index(v)] += 1.0;
  for (double& p : d.p_) p /= static_cast<double>(votes.size());
  return d;
}

DialogueAct ActDistribution::argmax() const { return act_from_index(argmax_index(p_)); }

Tensor ActDistribution::to_tensor() const { return Tensor({kNumActs}, {p_.begin(), p_.end()}); }

std::size_t argmax_index(std::span<const double> values) {
  if (values.empty()) throw EmptyInputError("argmax of nothing");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

}  // namespace dagm
