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

#include "dagm/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include "json.hpp"
#include <sstream>

#include "dagm/error.hpp"

namespace dagm {

using nlohmann::json;

std::string_view speaker_name(Speaker s) { return s == Speaker::kA ? "A" : "B"; }
Speaker other_speaker(Speaker s) { return s == Speaker::kA ? Speaker::kB : Speaker::kA; }

std::optional<DialogueAct> Utterance::effective_act() const {
  if (act) return act;
  if (gold) return gold->argmax();
  return std::nullopt;
}

void Dialogue::validate() const {
  for (std::size_t i = 1; i < turns.size(); ++i) {
    if (turns[i].speaker == turns[i - 1].speaker) {
      throw DataError("dialogue '" + id + "': speakers do not alternate at turn " +
                      std::to_string(i + 1));
    }
  }
}

Dialogue parse_dialogue_json(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed corpus line: ") + e.what());
  }
  try {
    Dialogue d;
    d.id = j.at("id").get<std::string>();
    for (const auto& t : j.at("turns")) {
      Utterance u;
      const auto sp = t.at("speaker").get<std::string>();
      if (sp == "A") {
        u.speaker = Speaker::kA;
      } else if (sp == "B") {
        u.speaker = Speaker::kB;
      } else {
        throw DataError("speaker must be A or B, got '" + sp + "'");
      }
      u.text = t.at("text").get<std::string>();
      if (auto it = t.find("act_dist"); it != t.end() && !it->is_null()) {
        const auto values = it->get<std::vector<double>>();
        u.gold = ActDistribution::from_values(values);
      }
      std::string source;
      if (auto it = t.find("act_source"); it != t.end() && !it->is_null()) {
        source = it->get<std::string>();
      }
      if (auto it = t.find("act"); it != t.end() && !it->is_null()) {
        const DialogueAct a = parse_act(it->get<std::string>());
        if (source == "gold" || (source.empty() && !u.gold)) {
          // A bare act label with no distribution is a one-hot gold label.
          if (!u.gold) u.gold = ActDistribution::one_hot(a);
        } else {
          u.act = a;
          u.act_source = source.empty() ? "tagged" : source;
        }
      }
      d.turns.push_back(std::move(u));
    }
    if (auto it = j.find("termination"); it != j.end() && !it->is_null()) {
      d.termination = it->get<std::string>();
    }
    d.validate();
    return d;
  } catch (const json::exception& e) {
    throw DataError(std::string("invalid corpus record: ") + e.what());
  }
}

std::string dialogue_to_json(const Dialogue& d) {
  json turns = json::array();
  for (const auto& u : d.turns) {
    json t;
    t["speaker"] = std::string(speaker_name(u.speaker));
    t["text"] = u.text;
    if (u.act) {
      t["act"] = std::string(act_name(*u.act));
      t["act_source"] = u.act_source.empty() ? "tagged" : u.act_source;
    } else if (u.gold) {
      t["act"] = std::string(act_name(u.gold->argmax()));
      t["act_source"] = "gold";
    } else {
      t["act"] = nullptr;
    }
    if (u.gold) {
      t["act_dist"] = std::vector<double>(u.gold->values().begin(), u.gold->values().end());
    } else {
      t["act_dist"] = nullptr;
    }
    turns.push_back(std::move(t));
  }
  json j;
  j["id"] = d.id;
  j["turns"] = std::move(turns);
  if (d.termination) j["termination"] = *d.termination;
  return j.dump();
}

Corpus read_corpus(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      corpus.push_back(parse_dialogue_json(line));
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return corpus;
}

Corpus read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  return read_corpus(in);
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& d : corpus) out << dialogue_to_json(d) << '\n';
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file " + path.string());
  write_corpus(out, corpus);
}

void tokenize_corpus(Corpus& corpus, const Vocabulary& vocab, const Tokenizer& tokenizer) {
  for (auto& d : corpus) {
    for (auto& u : d.turns) {
      try {
        u.tokens = tokenize(u.text, vocab, tokenizer);
      } catch (const EmptyInputError&) {
        throw DataError("dialogue '" + d.id + "' has an utterance with no tokens");
      }
    }
  }
}

Vocabulary build_vocab(const Corpus& corpus, std::size_t max_size, const Tokenizer& tokenizer) {
  if (corpus.empty()) throw EmptyInputError("build_vocab on an empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& d : corpus) {
    for (const auto& u : d.turns) {
      for (auto& t : tokenizer.split(u.text)) ++counts[std::move(t)];
    }
  }
  const Vocabulary reserved;
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [token, n] : counts) {
    if (!reserved.contains(token)) ranked.emplace_back(token, n);
  }
  // std::map iteration is lexicographic, so a stable sort by count keeps
  // lexicographic order among ties.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t room =
      max_size > Vocabulary::kReservedCount ? max_size - Vocabulary::kReservedCount : 0;
  std::vector<std::string> words;
  for (std::size_t i = 0; i < ranked.size() && i < room; ++i) words.push_back(ranked[i].first);
  return Vocabulary::from_words(words);
}

double CorpusStats::avg_turns() const {
  return dialogues ? static_cast<double>(utterances) / static_cast<double>(dialogues) : 0.0;
}
double CorpusStats::avg_words_per_utterance() const {
  return utterances ? static_cast<double>(total_words) / static_cast<double>(utterances) : 0.0;
}
double CorpusStats::act_percentage(DialogueAct a) const {
  return labeled_utterances ? 100.0 * static_cast<double>(act_counts[act_index(a)]) /
                                  static_cast<double>(labeled_utterances)
                            : 0.0;
}
double CorpusStats::pct_dialogues_with_switch() const {
  return dialogues ? 100.0 * static_cast<double>(dialogues_with_switch) /
                         static_cast<double>(dialogues)
                   : 0.0;
}
double CorpusStats::avg_turns_before_switch() const {
  return dialogues_with_switch ? static_cast<double>(turns_before_switch) /
                                     static_cast<double>(dialogues_with_switch)
                               : 0.0;
}

CorpusStats corpus_stats(const Corpus& corpus, const Tokenizer& tokenizer) {
  CorpusStats s;
  for (const auto& d : corpus) {
    const std::size_t n = d.turns.size();
    s.min_turns = s.dialogues == 0 ? n : std::min(s.min_turns, n);
    s.max_turns = std::max(s.max_turns, n);
    ++s.dialogues;
    s.utterances += n;
    std::optional<std::size_t> first_switch;
    for (std::size_t k = 0; k < n; ++k) {
      const auto& u = d.turns[k];
      s.total_words += tokenizer.split(u.text).size();
      if (auto a = u.effective_act()) {
        ++s.labeled_utterances;
        ++s.act_counts[act_index(*a)];
        if (!first_switch && is_context_switch(*a)) first_switch = k;
      }
    }
    if (first_switch) {
      ++s.dialogues_with_switch;
      s.turns_before_switch += *first_switch;
    }
  }
  return s;
}

CorpusStats merge_stats(const CorpusStats& a, const CorpusStats& b) {
  if (a.dialogues == 0) return b;
  if (b.dialogues == 0) return a;
  CorpusStats s;
  s.dialogues = a.dialogues + b.dialogues;
  s.utterances = a.utterances + b.utterances;
  s.min_turns = std::min(a.min_turns, b.min_turns);
  s.max_turns = std::max(a.max_turns, b.max_turns);
  s.total_words = a.total_words + b.total_words;
  s.labeled_utterances = a.labeled_utterances + b.labeled_utterances;
  for (std::size_t i = 0; i < kNumActs; ++i) s.act_counts[i] = a.act_counts[i] + b.act_counts[i];
  s.dialogues_with_switch = a.dialogues_with_switch + b.dialogues_with_switch;
  s.turns_before_switch = a.turns_before_switch + b.turns_before_switch;
  return s;
}

std::string stats_to_json(const CorpusStats& s) {
  json j;
  j["dialogues"] = s.dialogues;
  j["utterances"] = s.utterances;
  j["min_turns"] = s.min_turns;
  j["max_turns"] = s.max_turns;
  j["avg_turns"] = s.avg_turns();
  j["avg_words_per_utterance"] = s.avg_words_per_utterance();
  json acts;
  for (DialogueAct a : kAllActs) acts[std::string(act_name(a))] = s.act_percentage(a);
  j["act_percentages"] = acts;
  j["pct_dialogues_with_switch"] = s.pct_dialogues_with_switch();
  j["avg_turns_before_switch"] = s.avg_turns_before_switch();
  return j.dump(2);
}

double fleiss_kappa(const std::vector<std::vector<DialogueAct>>& ratings) {
  if (ratings.empty()) throw EmptyInputError("fleiss_kappa: no items");
  const std::size_t raters = ratings.front().size();
  if (raters < 2) throw ConfigError("fleiss_kappa needs at least 2 raters per item");
  std::array<double, kNumActs> category_totals{};
  double mean_agreement = 0.0;
  for (const auto& item : ratings) {
    if (item.size() != raters) throw ConfigError("fleiss_kappa: items differ in rater count");
    std::array<double, kNumActs> counts{};
    for (DialogueAct a : item) counts[act_index(a)] += 1.0;
    double sq = 0.0;
    for (std::size_t j = 0; j < kNumActs; ++j) {
      sq += counts[j] * counts[j];
      category_totals[j] += counts[j];
    }
    const double n = static_cast<double>(raters);
    mean_agreement += (sq - n) / (n * (n - 1.0));
  }
  const double items = static_cast<double>(ratings.size());
  mean_agreement /= items;
  double expected = 0.0;
  for (double t : category_totals) {
    const double p = t / (items * static_cast<double>(raters));
    expected += p * p;
  }
  // Every rating in a single category: agreement is perfect but chance
  // agreement is 1 as well; report it as perfect.
  if (expected >= 1.0) return 1.0;
  return (mean_agreement - expected) / (1.0 - expected);
}

}  // namespace dagm
