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
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dagm/acts.hpp"

namespace dagm {

using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;

// Token <-> id table. Ids are dense from 0 and the first twelve are reserved:
//   0 <pad>  1 <unk>  2 <bos>  3 <eos>  4 <sep>  5..11 act markers <CM.S> .. <O>
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kBos = 2;
  static constexpr TokenId kEos = 3;
  static constexpr TokenId kSep = 4;
  static constexpr TokenId kActBase = 5;
  static constexpr std::size_t kReservedCount = kActBase + kNumActs;

  Vocabulary();
  // Reserved entries followed by `words` in the given order. Throws on
  // duplicates or on words that collide with reserved tokens.
  static Vocabulary from_words(std::span<const std::string> words);

  static constexpr TokenId act_marker(DialogueAct a) {
    return kActBase + static_cast<TokenId>(act_index(a));
  }
  static constexpr bool is_reserved(TokenId id) { return id < kReservedCount; }

  // UNK for unknown tokens.
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  void append(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

// Splits raw text into token strings.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<std::string> split(std::string_view text) const = 0;
};

// ASCII lowercase, whitespace separated, each punctuation character its own
// token.
class DefaultTokenizer final : public Tokenizer {
 public:
  std::vector<std::string> split(std::string_view text) const override;
};

const Tokenizer& default_tokenizer();

// Throws EmptyInputError when the text has no tokens.
TokenSeq tokenize(std::string_view text, const Vocabulary& vocab,
                  const Tokenizer& tokenizer = default_tokenizer());
std::string detokenize(std::span<const TokenId> tokens, const Vocabulary& vocab);

}  // namespace dagm
