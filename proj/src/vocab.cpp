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

#include "dagm/vocab.hpp"

#include <cctype>

#include "dagm/error.hpp"

namespace dagm {

Vocabulary::Vocabulary() {
  for (const char* t : {"<pad>", "<unk>", "<bos>", "<eos>", "<sep>"}) append(t);
  for (DialogueAct a : kAllActs) append("<" + std::string(act_name(a)) + ">");
}

Vocabulary Vocabulary::from_words(std::span<const std::string> words) {
  Vocabulary v;
  for (const auto& w : words) {
    if (w.empty()) throw DataError("empty vocabulary entry");
    if (v.ids_.contains(w)) throw DataError("duplicate vocabulary entry: " + w);
    v.append(w);
  }
  return v;
}

void Vocabulary::append(std::string token) {
  ids_.emplace(token, static_cast<TokenId>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return ids_.contains(std::string(token)); }

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) throw DataError("token id out of range: " + std::to_string(id));
  return tokens_[id];
}

std::vector<std::string> DefaultTokenizer::split(std::string_view text) const {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      flush();
    } else if (c == '<') {
      // Reserved tokens such as <unk> or <CM.S> pass through whole, so that
      // detokenized output re-tokenizes to the same ids.
      std::size_t j = i + 1;
      while (j < text.size() && text[j] != '>' &&
             !std::isspace(static_cast<unsigned char>(text[j])))
        ++j;
      flush();
      if (j < text.size() && text[j] == '>' && j > i + 1) {
        out.emplace_back(text.substr(i, j - i + 1));
        i = j;
      } else {
        out.emplace_back(1, '<');
      }
    } else if (c < 128 && std::ispunct(c) && c != '\'') {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    } else {
      current.push_back(c < 128 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    }
  }
  flush();
  return out;
}

const Tokenizer& default_tokenizer() {
  static const DefaultTokenizer tokenizer;
  return tokenizer;
}

TokenSeq tokenize(std::string_view text, const Vocabulary& vocab, const Tokenizer& tokenizer) {
  TokenSeq ids;
  for (const auto& t : tokenizer.split(text)) ids.push_back(vocab.id(t));
  if (ids.empty()) throw EmptyInputError("text has no tokens");
  return ids;
}

std::string detokenize(std::span<const TokenId> tokens, const Vocabulary& vocab) {
  std::string out;
  for (TokenId t : tokens) {
    if (!out.empty()) out += ' ';
    out += vocab.token(t);
  }
  return out;
}

}  // namespace dagm
