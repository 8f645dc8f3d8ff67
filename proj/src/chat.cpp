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


#include "dagm/chat.hpp"

#include <chrono>

#include "dagm/error.hpp"
#include "dagm/tape.hpp"

namespace dagm {

namespace {

Dialogue to_dialogue(const ChatSessionView& view) {
  Dialogue d;
  d.id = view.id;
  for (const auto& t : view.turns) {
    Utterance u;
    u.speaker = t.speaker;
    u.text = t.text;
    u.tokens = t.tokens;
    u.act = t.act;
    u.act_source = t.act_source;
    d.turns.push_back(std::move(u));
  }
  if (view.cause) d.termination = view.cause;
  return d;
}

}  // namespace

ChatModels chat_models(std::shared_ptr<const ModelBundle> bundle, std::size_t beam) {
  if (!bundle) throw StateError("chat needs a bundle");
  if (!bundle->policy || !bundle->generator) {
    throw StateError("chat needs a bundle with a policy and a generator");
  }
  ChatModels m;
  m.vocab = bundle->vocab;
  m.policy = std::make_shared<NetworkPolicy>(*bundle->policy);
  m.generator = std::make_shared<NetworkGenerator>(*bundle->generator, 1, beam);
  if (bundle->classifier) {
    const ActClassifier* clf = &*bundle->classifier;
    m.tagger = [clf](std::span<const TokenId> u, std::span<const TokenId> prev,
                     std::optional<DialogueAct> a_prev) { return clf->classify(u, prev, a_prev).argmax(); };
  }
  m.keep_alive = bundle;
  return m;
}

ChatService::ChatService(ChatModels models, ChatOptions options, Corpus openings)
    : models_(std::move(models)), options_(options), openings_(std::move(openings)) {
  if (!models_.policy || !models_.generator) throw StateError("chat service needs a policy and a generator");
  tokenize_corpus(openings_, models_.vocab);
}

ChatSessionView ChatService::create_session() {
  auto live = std::make_shared<Live>();
  std::uint64_t n;
  {
    std::lock_guard lock(mu_);
    n = next_id_++;
  }
  live->view.id = "s" + std::to_string(n);
  live->view.created_unix = std::chrono::duration_cast<std::chrono::seconds>(
                                std::chrono::system_clock::now().time_since_epoch())
                                .count();
  if (!openings_.empty()) {
    Rng rng(mix_seed(options_.seed, n));
    const Session opening = sample_opening(openings_, rng);
    ChatTurn t;
    t.speaker = Speaker::kA;
    t.from_bot = true;
    t.tokens = opening.front().tokens;
    t.text = detokenize(t.tokens, models_.vocab);
    t.act = opening.front().act;
    t.act_source = "corpus";
    live->view.turns.push_back(std::move(t));
  }
  ChatSessionView copy = live->view;
  std::lock_guard lock(mu_);
  sessions_[copy.id] = std::move(live);
  return copy;
}

std::shared_ptr<ChatService::Live> ChatService::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw DataError("no chat session '" + id + "'");
  return it->second;
}

ChatReply ChatService::turn(const std::string& id, const std::optional<std::string>& user_text,
                            std::optional<DialogueAct> act_override) {
  auto live = find(id);
  std::lock_guard lock(live->mu);
  ChatSessionView& view = live->view;
  if (view.terminated) throw StateError("chat session '" + id + "' has terminated");

  auto next_speaker = [&view] {
    return view.turns.empty() ? Speaker::kA : other_speaker(view.turns.back().speaker);
  };
  if (user_text) {
    ChatTurn u;
    u.speaker = next_speaker();
    try {
      u.tokens = tokenize(*user_text, models_.vocab);
    } catch (const EmptyInputError&) {
      throw DataError("user text has no tokens");
    }
    u.text = *user_text;
    if (models_.tagger) {
      std::span<const TokenId> prev;
      std::optional<DialogueAct> a_prev;
      if (!view.turns.empty()) {
        prev = view.turns.back().tokens;
        a_prev = view.turns.back().act;
      }
      u.act = models_.tagger(u.tokens, prev, a_prev);
      u.act_source = "tagged";
    } else {
      u.act = DialogueAct::kOther;
      u.act_source = "none";
    }
    view.turns.push_back(std::move(u));
  }

  Session session;
  for (const auto& t : view.turns) session.push_back({t.tokens, t.act});
  const ActDistribution dist = models_.policy->distribution(session);

  std::span<const TokenId> u1, u2;
  const std::size_t n = session.size();
  if (n >= 1) u1 = session[n - 1].tokens;
  if (n >= 2) u2 = session[n - 2].tokens;

  ChatReply reply;
  Rng unused(0);
  std::vector<TokenSeq> responses;
  for (DialogueAct a : kAllActs) {
    reply.act_probs[act_index(a)] = dist[a];
    TokenSeq r = models_.generator->respond(a, u1, u2, SelectMode::kGreedy, unused);
    reply.candidates.push_back({a, detokenize(r, models_.vocab), dist[a]});
    responses.push_back(std::move(r));
  }
  const DialogueAct chosen = act_override ? *act_override : dist.argmax();

  ChatTurn bot;
  bot.speaker = next_speaker();
  bot.from_bot = true;
  bot.act = chosen;
  bot.act_source = act_override ? "override" : "model";
  bot.tokens = responses[act_index(chosen)];
  bot.text = reply.candidates[act_index(chosen)].text;

  // Compare with the bot's previous turn.
  for (auto it = view.turns.rbegin(); it != view.turns.rend(); ++it) {
    if (!it->from_bot) continue;
    const double c = cosine(models_.generator->embed(it->tokens), models_.generator->embed(bot.tokens));
    if (c > options_.similarity_threshold) {
      view.terminated = true;
      view.cause = std::string(termination_name(Termination::kRepetitionSkip));
    }
    break;
  }
  view.turns.push_back(bot);
  reply.bot = std::move(bot);
  reply.terminated = view.terminated;
  reply.cause = view.cause;
  return reply;
}

ChatSessionView ChatService::session(const std::string& id) const {
  auto live = find(id);
  std::lock_guard lock(live->mu);
  return live->view;
}

bool ChatService::remove(const std::string& id) {
  std::lock_guard lock(mu_);
  return sessions_.erase(id) > 0;
}

std::vector<std::string> ChatService::session_ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> ids;
  for (const auto& [k, v] : sessions_) ids.push_back(k);
  return ids;
}

Dialogue ChatService::export_dialogue(const std::string& id) const {
  return to_dialogue(session(id));
}

}  // namespace dagm
