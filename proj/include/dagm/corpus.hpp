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
#include <optional>
#include <string>
#include <vector>

#include "dagm/acts.hpp"
#include "dagm/vocab.hpp"

namespace dagm {

enum class Speaker { kA, kB };

std::string_view speaker_name(Speaker s);
Speaker other_speaker(Speaker s);

struct Utterance {
  Speaker speaker = Speaker::kA;
  std::string text;
  TokenSeq tokens;                      // filled by tokenize_corpus
  std::optional<ActDistribution> gold;  // annotator (or generator) label
  std::optional<DialogueAct> act;       // tagged or chosen act
  // Where `act` came from: "tagged", "model", "override", "gold". Free-form.
  std::string act_source;

  // Tagged act when present, else the gold argmax.
  std::optional<DialogueAct> effective_act() const;
};

struct Dialogue {
  std::string id;
  std::vector<Utterance> turns;
  // Set on self-play transcripts.
  std::optional<std::string> termination;

  // Throws DataError unless speakers strictly alternate.
  void validate() const;
};

using Corpus = std::vector<Dialogue>;

// One dialogue per line:
// {"id": s, "turns": [{"speaker": "A"|"B", "text": s, "act": s|null, "act_dist": [7]|null}]}
// Extra fields: "act_source" per turn, "termination" per dialogue.
Dialogue parse_dialogue_json(std::string_view line);
std::string dialogue_to_json(const Dialogue& d);
Corpus read_corpus(std::istream& in);
Corpus read_corpus(const std::filesystem::path& path);
void write_corpus(std::ostream& out, const Corpus& corpus);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);

// Fills every Utterance::tokens from its text.
void tokenize_corpus(Corpus& corpus, const Vocabulary& vocab,
                     const Tokenizer& tokenizer = default_tokenizer());

// Most frequent tokens up to max_size entries including the reserved ones;
// ties broken lexicographically.
Vocabulary build_vocab(const Corpus& corpus, std::size_t max_size,
                       const Tokenizer& tokenizer = default_tokenizer());

struct CorpusStats {
  std::size_t dialogues = 0;
  std::size_t utterances = 0;
  std::size_t min_turns = 0;
  std::size_t max_turns = 0;
  std::size_t total_words = 0;
  std::size_t labeled_utterances = 0;
  std::array<std::size_t, kNumActs> act_counts{};
  std::size_t dialogues_with_switch = 0;
  // Turns preceding the first CS.* turn, summed over dialogues that have one.
  std::size_t turns_before_switch = 0;

  double avg_turns() const;
  double avg_words_per_utterance() const;
  double act_percentage(DialogueAct a) const;
  double pct_dialogues_with_switch() const;
  double avg_turns_before_switch() const;

  bool operator==(const CorpusStats&) const = default;
};

CorpusStats corpus_stats(const Corpus& corpus, const Tokenizer& tokenizer = default_tokenizer());
CorpusStats merge_stats(const CorpusStats& a, const CorpusStats& b);
std::string stats_to_json(const CorpusStats& s);

// Fleiss' kappa over items each rated by the same number of raters.
double fleiss_kappa(const std::vector<std::vector<DialogueAct>>& ratings);

}  // namespace dagm
