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

#include "dagm/toyworld.hpp"

#include <algorithm>
#include <cmath>

#include "dagm/error.hpp"
#include "dagm/rng.hpp"

namespace dagm {

namespace {

using Row = std::array<double, kNumActs>;

void check_distribution(const Row& row, const std::string& what) {
  double total = 0.0;
  for (double p : row) {
    if (!(p >= 0.0)) throw ConfigError(what + " has a negative entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw ConfigError(what + " sums to " + std::to_string(total) + ", expected 1");
  }
}

// {n} is the block noun, {nK} the K-th noun of the block topic.
std::string fill_template(const std::string& tmpl, const ToyTopic& topic, std::size_t noun) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl.compare(i, 3, "{n}") == 0) {
      out += topic.nouns[noun];
      i += 2;
    } else if (tmpl.compare(i, 2, "{n") == 0 && i + 3 < tmpl.size() && tmpl[i + 3] == '}') {
      out += topic.nouns[static_cast<std::size_t>(tmpl[i + 2] - '0')];
      i += 3;
    } else {
      out += tmpl[i];
    }
  }
  return out;
}

std::size_t max_noun_slot(const std::string& tmpl) {
  std::size_t need = 0;
  for (std::size_t i = 0; i + 3 < tmpl.size(); ++i) {
    if (tmpl.compare(i, 2, "{n") == 0 && tmpl[i + 3] == '}') {
      const char k = tmpl[i + 2];
      if (k < '0' || k > '9') throw ConfigError("bad template slot in '" + tmpl + "'");
      need = std::max<std::size_t>(need, static_cast<std::size_t>(k - '0') + 1);
    }
  }
  return need;
}

struct Block {
  std::size_t topic = 0;
  std::size_t noun = 0;
  std::array<std::size_t, kNumActs> template_choice{};
};

Block open_block(const ToyWorldConfig& config, Rng& rng, std::optional<std::size_t> avoid_topic) {
  Block b;
  const std::size_t n_topics = config.topics.size();
  if (avoid_topic && config.cyclic_switch) {
    b.topic = (*avoid_topic + 1) % n_topics;
  } else if (avoid_topic && n_topics > 1) {
    b.topic = rng.index(n_topics - 1);
    if (b.topic >= *avoid_topic) ++b.topic;
  } else {
    b.topic = rng.index(n_topics);
  }
  b.noun = rng.index(config.topics[b.topic].nouns.size());
  for (std::size_t a = 0; a < kNumActs; ++a) b.template_choice[a] = rng.index(config.templates[a].size());
  return b;
}

}  // namespace

void ToyWorldConfig::validate() const {
  if (topics.size() < 2) throw ConfigError("toy world needs at least two topics");
  for (const auto& t : topics) {
    if (t.nouns.empty()) throw ConfigError("topic '" + t.name + "' has no nouns");
  }
  std::size_t min_nouns = topics.front().nouns.size();
  for (const auto& t : topics) min_nouns = std::min(min_nouns, t.nouns.size());
  for (std::size_t a = 0; a < kNumActs; ++a) {
    if (templates[a].empty()) {
      throw ConfigError("no templates for act " + std::string(act_name(act_from_index(a))));
    }
    for (const auto& tmpl : templates[a]) {
      if (max_noun_slot(tmpl) > min_nouns) {
        throw ConfigError("template '" + tmpl + "' needs more nouns than some topic has");
      }
    }
  }
  check_distribution(initial, "initial act distribution");
  for (std::size_t a = 0; a < kNumActs; ++a) {
    check_distribution(transition[a],
                       "transition row " + std::string(act_name(act_from_index(a))));
  }
  if (min_turns < 1 || max_turns < min_turns) throw ConfigError("invalid toy dialogue length range");
}

ToyWorldConfig default_toy_world() {
  ToyWorldConfig c;
  c.topics = {
      {"food", {"pizza", "sushi", "noodles"}},   {"travel", {"tokyo", "paris", "beach"}},
      {"music", {"guitar", "piano", "concert"}}, {"sports", {"soccer", "tennis", "swimming"}},
      {"movies", {"movie", "actor", "cinema"}},  {"pets", {"dog", "cat", "puppy"}},
      {"study", {"math", "exam", "english"}},    {"work", {"office", "boss", "project"}},
  };
  c.templates[act_index(DialogueAct::kCmS)] = {"i think the {n} is really great",
                                               "the {n} here is pretty good to be honest",
                                               "there are many good {n} places in town"};
  c.templates[act_index(DialogueAct::kCmQ)] = {"do you like the {n} ?",
                                               "where do you usually go for {n} ?",
                                               "how often do you think about {n} ?"};
  c.templates[act_index(DialogueAct::kCmA)] = {"yes i went for the {n} last week",
                                               "sure the {n} was fun for me",
                                               "mostly on weekends with the {n}"};
  // Switch templates name the whole new topic at both ends of the sentence.
  c.templates[act_index(DialogueAct::kCsS)] = {
      "{n0} and {n1} , by the way i plan to spend more time this summer on {n2}",
      "{n1} or {n0} , anyway i recently started getting into it and it has been amazing with {n2}"};
  c.templates[act_index(DialogueAct::kCsQ)] = {
      "{n0} {n1} , speaking of something else have you ever tried {n2} ?",
      "{n1} and {n0} , on another note when did you last enjoy some {n2} ?"};
  c.templates[act_index(DialogueAct::kCsA)] = {"{n0} , not sure because i have to focus on {n1} and {n2}",
                                               "{n1} , no idea since my {n0} keeps me busy with {n2}"};
  c.templates[act_index(DialogueAct::kOther)] = {"thanks for telling me about the {n}",
                                                 "ok nice chatting about {n}",
                                                 "hello again my friend"};
  //                 CM.S  CM.Q  CM.A  CS.S  CS.Q  CS.A  O
  const Row after_statement = {0.40, 0.25, 0.05, 0.12, 0.08, 0.02, 0.08};
  const Row after_question = {0.10, 0.05, 0.60, 0.03, 0.02, 0.15, 0.05};
  const Row after_switch = {0.45, 0.30, 0.05, 0.05, 0.05, 0.02, 0.08};
  const Row after_other = {0.35, 0.25, 0.05, 0.15, 0.10, 0.02, 0.08};
  c.initial = {0.50, 0.30, 0.00, 0.10, 0.05, 0.00, 0.05};
  c.transition[act_index(DialogueAct::kCmS)] = after_statement;
  c.transition[act_index(DialogueAct::kCmQ)] = after_question;
  c.transition[act_index(DialogueAct::kCmA)] = after_statement;
  c.transition[act_index(DialogueAct::kCsS)] = after_switch;
  c.transition[act_index(DialogueAct::kCsQ)] = after_question;
  c.transition[act_index(DialogueAct::kCsA)] = after_switch;
  c.transition[act_index(DialogueAct::kOther)] = after_other;
  c.min_turns = 4;
  c.max_turns = 8;
  return c;
}

ToyWorldConfig with_switch_mass(ToyWorldConfig config, double switch_mass) {
  if (switch_mass < 0.0 || switch_mass > 1.0) throw ConfigError("switch mass must be in [0, 1]");
  auto reshape = [switch_mass](Row& row) {
    double keep = 0.0;
    for (DialogueAct a : kAllActs) {
      if (!is_context_switch(a)) keep += row[act_index(a)];
    }
    for (DialogueAct a : kAllActs) {
      double& p = row[act_index(a)];
      if (is_context_switch(a)) {
        p = switch_mass / 3.0;
      } else {
        p = keep > 0.0 ? p / keep * (1.0 - switch_mass) : (1.0 - switch_mass) / 4.0;
      }
    }
  };
  reshape(config.initial);
  for (auto& row : config.transition) reshape(row);
  return config;
}

Corpus generate_toy_corpus(std::uint64_t seed, std::size_t n_dialogues,
                           const ToyWorldConfig& config, const std::string& id_prefix) {
  config.validate();
  Rng rng(seed);
  Corpus corpus;
  corpus.reserve(n_dialogues);
  for (std::size_t i = 0; i < n_dialogues; ++i) {
    Dialogue d;
    d.id = id_prefix + "-" + std::to_string(i);
    const std::size_t n_turns =
        config.min_turns + rng.index(config.max_turns - config.min_turns + 1);
    Block block = open_block(config, rng, std::nullopt);
    std::optional<DialogueAct> prev;
    Speaker speaker = Speaker::kA;
    for (std::size_t k = 0; k < n_turns; ++k) {
      const Row& dist = prev ? config.transition[act_index(*prev)] : config.initial;
      const DialogueAct act = act_from_index(rng.categorical(dist));
      if (is_context_switch(act)) block = open_block(config, rng, block.topic);
      const auto& tmpl = config.templates[act_index(act)][block.template_choice[act_index(act)]];
      Utterance u;
      u.speaker = speaker;
      u.text = fill_template(tmpl, config.topics[block.topic], block.noun);
      u.gold = ActDistribution::one_hot(act);
      d.turns.push_back(std::move(u));
      prev = act;
      speaker = other_speaker(speaker);
    }
    corpus.push_back(std::move(d));
  }
  return corpus;
}

}  // namespace dagm
