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
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dagm/bundle.hpp"
#include "dagm/corpus.hpp"
#include "dagm/selfplay.hpp"

namespace dagm {

// Predicts the act of a user turn from (u, u_prev, a_prev).
using TurnTagger = std::function<DialogueAct(std::span<const TokenId>, std::span<const TokenId>,
                                             std::optional<DialogueAct>)>;

struct ChatModels {
  Vocabulary vocab;
  std::shared_ptr<const ActPolicy> policy;
  std::shared_ptr<const ResponseGenerator> generator;
  TurnTagger tagger;  // may be empty: user turns then get act O
  std::shared_ptr<const void> keep_alive;
};

// Adapters over a loaded bundle; the bundle needs a policy and a generator.
// Responses are the top-1 of a beam of the given width.
ChatModels chat_models(std::shared_ptr<const ModelBundle> bundle, std::size_t beam);

struct ChatOptions {
  double similarity_threshold = 0.9;
  std::uint64_t seed = 1;
};

struct ChatTurn {
  Speaker speaker = Speaker::kA;
  bool from_bot = false;
  std::string text;
  TokenSeq tokens;
  DialogueAct act = DialogueAct::kOther;
  // "model" or "override" for bot turns, "corpus" for a sampled opening,
  // "tagged" or "none" for user turns.
  std::string act_source;
};

struct ChatSessionView {
  std::string id;
  std::int64_t created_unix = 0;
  std::vector<ChatTurn> turns;
  bool terminated = false;
  std::optional<std::string> cause;
};

struct ChatCandidate {
  DialogueAct act = DialogueAct::kOther;
  std::string text;
  double probability = 0.0;
};

struct ChatReply {
  ChatTurn bot;
  std::array<double, kNumActs> act_probs{};
  std::vector<ChatCandidate> candidates;  // one per act, taxonomy order
  bool terminated = false;
  std::optional<std::string> cause;
};

// Sessions are isolated; the models are shared read-only. All methods are
// safe to call concurrently.
class ChatService {
 public:
  // Bot-first sessions open with an utterance sampled from `openings`.
  ChatService(ChatModels models, ChatOptions options, Corpus openings = {});

  // Returns the new session; its transcript holds the opening turn when
  // openings are available.
  ChatSessionView create_session();

  // Throws StateError on a terminated session, DataError on an unknown id or
  // a user text with no tokens.
  ChatReply turn(const std::string& id, const std::optional<std::string>& user_text,
                 std::optional<DialogueAct> act_override);

  ChatSessionView session(const std::string& id) const;
  bool remove(const std::string& id);
  std::vector<std::string> session_ids() const;

  Dialogue export_dialogue(const std::string& id) const;

  const ChatModels& models() const { return models_; }

 private:
  struct Live {
    std::mutex mu;
    ChatSessionView view;
  };
  std::shared_ptr<Live> find(const std::string& id) const;

  ChatModels models_;
  ChatOptions options_;
  Corpus openings_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Live>> sessions_;
  std::uint64_t next_id_ = 1;
};

}  // namespace dagm
