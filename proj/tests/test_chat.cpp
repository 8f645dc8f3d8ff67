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


#include <cmath>
#include <thread>

#include "dagm/chat.hpp"
#include "dagm/error.hpp"
#include "dagm/server.hpp"
#include "doctest.h"
#include "httplib.h"
#include "json.hpp"
#include "test_util.hpp"

using namespace dagm;
using nlohmann::json;

namespace {

struct Uniform : ActPolicy {
  ActDistribution distribution(std::span<const SessionTurn>) const override {
    return ActDistribution::from_values(std::vector<double>(kNumActs, 1.0 / kNumActs));
  }
};

struct Favors : ActPolicy {
  DialogueAct act;
  explicit Favors(DialogueAct a) : act(a) {}
  ActDistribution distribution(std::span<const SessionTurn>) const override {
    std::vector<double> v(kNumActs, 0.05);
    v[act_index(act)] = 0.7;
    return ActDistribution::from_values(v);
  }
};

// Says the same thing whatever the act or context.
struct Parrot : ResponseGenerator {
  TokenSeq respond(DialogueAct, std::span<const TokenId>, std::span<const TokenId>, SelectMode,
                   Rng&) const override {
    return {20, 21};
  }
  Tensor embed(std::span<const TokenId> u) const override {
    Tensor e(Tensor::Shape{64});
    for (TokenId t : u) e.values()[t % 64] += 1.0;
    return e;
  }
};

// Names the act it was asked for and never repeats across acts.
struct ActNamer : ResponseGenerator {
  TokenSeq respond(DialogueAct a, std::span<const TokenId>, std::span<const TokenId>, SelectMode,
                   Rng&) const override {
    return {static_cast<TokenId>(12 + act_index(a))};
  }
  Tensor embed(std::span<const TokenId> u) const override { return Parrot{}.embed(u); }
};

Vocabulary words(std::size_t n) {
  std::vector<std::string> w;
  for (std::size_t i = 0; i < n; ++i) w.push_back("w" + std::to_string(i));
  return Vocabulary::from_words(w);
}

ChatModels stub_models(std::shared_ptr<const ActPolicy> p, std::shared_ptr<const ResponseGenerator> g) {
  ChatModels m;
  m.vocab = words(60);
  m.policy = std::move(p);
  m.generator = std::move(g);
  return m;
}

std::shared_ptr<const ModelBundle> tiny_bundle() {
  auto data = testutil::toy_data(8, 20, 4);
  auto b = std::make_shared<ModelBundle>();
  b->vocab = data.vocab;
  PolicyConfig pc;
  pc.word_dim = pc.utterance_hidden = pc.session_hidden = pc.mlp_hidden = 4;
  pc.act_dim = pc.act_hidden = 3;
  GeneratorConfig gc;
  gc.emb_dim = gc.hidden = gc.attention = 4;
  gc.max_len = 5;
  ClassifierConfig cc;
  cc.word_dim = cc.hidden = cc.mlp_hidden = 4;
  cc.act_dim = 3;
  b->policy.emplace(data.vocab.size(), pc, 1);
  b->generator.emplace(data.vocab.size(), gc, 2);
  b->classifier.emplace(data.vocab.size(), cc, 3);
  return b;
}

}  // namespace

TEST_CASE("override wins over the policy") {
  ChatService svc(stub_models(std::make_shared<Favors>(DialogueAct::kCmS), std::make_shared<ActNamer>()), {});
  auto s = svc.create_session();
  CHECK(s.turns.empty());
  auto r = svc.turn(s.id, std::string("w1 w2"), DialogueAct::kCsQ);
  CHECK(r.bot.act == DialogueAct::kCsQ);
  CHECK(r.bot.act_source == "override");
  CHECK(r.bot.tokens == TokenSeq{static_cast<TokenId>(12 + act_index(DialogueAct::kCsQ))});
  auto r2 = svc.turn(s.id, std::string("w3"), std::nullopt);
  CHECK(r2.bot.act == DialogueAct::kCmS);
  CHECK(r2.bot.act_source == "model");
  CHECK_FALSE(r2.terminated);

  auto view = svc.session(s.id);
  REQUIRE(view.turns.size() == 4);
  CHECK_FALSE(view.turns[0].from_bot);
  CHECK(view.turns[0].act_source == "none");
  CHECK(view.turns[0].speaker == Speaker::kA);
  CHECK(view.turns[1].speaker == Speaker::kB);
  CHECK(view.turns[1].act == DialogueAct::kCsQ);
}

TEST_CASE("candidates cover all acts") {
  auto bundle = tiny_bundle();
  auto data = testutil::toy_data(8, 20, 4);
  ChatService svc(chat_models(bundle, 3), {}, data.test);
  auto s = svc.create_session();
  REQUIRE(s.turns.size() == 1);
  CHECK(s.turns[0].from_bot);
  CHECK(s.turns[0].act_source == "corpus");
  for (int k = 0; k < 4; ++k) {
    ChatReply r;
    try {
      r = svc.turn(s.id, std::string("do you like the pizza ?"), std::nullopt);
    } catch (const StateError&) {
      break;
    }
    REQUIRE(r.candidates.size() == kNumActs);
    double total = 0.0;
    for (std::size_t a = 0; a < kNumActs; ++a) {
      CHECK(r.candidates[a].act == act_from_index(a));
      CHECK(r.candidates[a].probability == r.act_probs[a]);
      total += r.candidates[a].probability;
    }
    CHECK(std::abs(total - 1.0) < 1e-6);
    const std::size_t best = argmax_index(r.act_probs);
    CHECK(r.bot.act == act_from_index(best));
    CHECK(r.bot.text == r.candidates[best].text);
    if (r.terminated) break;
  }
  auto view = svc.session(s.id);
  CHECK(view.turns[1].act_source == "tagged");
}

TEST_CASE("repetitive bot terminates the session") {
  ChatService svc(stub_models(std::make_shared<Uniform>(), std::make_shared<Parrot>()), {});
  auto s = svc.create_session();
  auto r1 = svc.turn(s.id, std::string("w1"), std::nullopt);
  CHECK_FALSE(r1.terminated);
  auto r2 = svc.turn(s.id, std::string("w5"), std::nullopt);
  CHECK(r2.terminated);
  REQUIRE(r2.cause);
  CHECK(*r2.cause == "repetition-skip");
  CHECK_THROWS_AS(svc.turn(s.id, std::string("w2"), std::nullopt), StateError);
  auto view = svc.session(s.id);
  CHECK(view.terminated);
  CHECK(view.turns.size() == 4);
}

TEST_CASE("errors, removal and export") {
  ChatService svc(stub_models(std::make_shared<Uniform>(), std::make_shared<ActNamer>()), {});
  CHECK_THROWS_AS(svc.turn("nope", std::nullopt, std::nullopt), DataError);
  auto s = svc.create_session();
  CHECK_THROWS_AS(svc.turn(s.id, std::string("   "), std::nullopt), DataError);
  // A bot-only turn with no user text.
  auto r = svc.turn(s.id, std::nullopt, DialogueAct::kOther);
  CHECK(r.bot.speaker == Speaker::kA);
  svc.turn(s.id, std::string("w9 zzz"), std::nullopt);

  const Dialogue d = svc.export_dialogue(s.id);
  const Dialogue back = parse_dialogue_json(dialogue_to_json(d));
  REQUIRE(back.turns.size() == 3);
  CHECK_NOTHROW(back.validate());
  CHECK(back.turns[0].act == DialogueAct::kOther);
  CHECK(back.turns[0].act_source == "override");
  CHECK(back.turns[1].text == "w9 zzz");

  CHECK(svc.session_ids().size() == 1);
  CHECK(svc.remove(s.id));
  CHECK_FALSE(svc.remove(s.id));
  CHECK_THROWS_AS(svc.session(s.id), DataError);
}

TEST_CASE("concurrent sessions share one snapshot") {
  auto bundle = tiny_bundle();
  const ModelBundle before = *bundle;
  auto data = testutil::toy_data(8, 20, 4);
  ChatService svc(chat_models(bundle, 2), {}, data.test);
  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(svc.create_session().id);
  // Sequential reference transcripts from a fresh service with equal seeds.
  ChatService ref(chat_models(bundle, 2), {}, data.test);
  std::vector<ChatSessionView> expected;
  for (int i = 0; i < 4; ++i) {
    auto s = ref.create_session();
    for (int k = 0; k < 3; ++k) {
      if (ref.turn(s.id, std::string("the dog here is pretty good"), std::nullopt).terminated) break;
    }
    expected.push_back(ref.session(s.id));
  }
  std::vector<std::thread> threads;
  for (int i = 0; i < 4; ++i) {
    threads.emplace_back([&, i] {
      for (int k = 0; k < 3; ++k) {
        if (svc.turn(ids[i], std::string("the dog here is pretty good"), std::nullopt).terminated) break;
      }
    });
  }
  for (auto& t : threads) t.join();
  for (int i = 0; i < 4; ++i) {
    auto got = svc.session(ids[i]);
    REQUIRE(got.turns.size() == expected[i].turns.size());
    for (std::size_t k = 0; k < got.turns.size(); ++k) {
      CHECK(got.turns[k].tokens == expected[i].turns[k].tokens);
      CHECK(got.turns[k].act == expected[i].turns[k].act);
    }
  }
  CHECK(bundle->policy->params() == before.policy->params());
  CHECK(bundle->generator->params() == before.generator->params());
}

TEST_CASE("HTTP API") {
  ChatService svc(stub_models(std::make_shared<Favors>(DialogueAct::kCmA), std::make_shared<ActNamer>()), {},
                  Corpus{});
  ChatServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  std::thread t([&] { server.run(); });
  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(10, 0);

  auto acts = cli.Get("/api/acts");
  REQUIRE(acts);
  CHECK(acts->status == 200);
  auto aj = json::parse(acts->body);
  REQUIRE(aj["acts"].size() == kNumActs);
  CHECK(aj["acts"][3]["name"] == "CS.S");
  CHECK_FALSE(aj["acts"][3]["definition"].get<std::string>().empty());

  auto created = cli.Post("/api/sessions", "", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const std::string id = json::parse(created->body)["session_id"];
  CHECK(json::parse(created->body)["opening"].is_null());

  auto turn = cli.Post("/api/sessions/" + id + "/turns", R"({"text": "w1 w2", "act_override": "CS.Q"})",
                       "application/json");
  REQUIRE(turn);
  CHECK(turn->status == 200);
  auto tj = json::parse(turn->body);
  CHECK(tj["bot"]["act"] == "CS.Q");
  CHECK(tj["bot"]["act_source"] == "override");
  CHECK(tj["bot"]["act_probs"].size() == kNumActs);
  CHECK(tj["candidates"].size() == kNumActs);
  CHECK(tj["terminated"] == false);
  CHECK_FALSE(tj.contains("cause"));

  auto plain = cli.Post("/api/sessions/" + id + "/turns", R"({"text": "w3"})", "application/json");
  REQUIRE(plain);
  CHECK(json::parse(plain->body)["bot"]["act"] == "CM.A");

  auto bad_act = cli.Post("/api/sessions/" + id + "/turns", R"({"act_override": "XX"})", "application/json");
  REQUIRE(bad_act);
  CHECK(bad_act->status == 400);
  CHECK(json::parse(bad_act->body).contains("error"));
  auto bad_json = cli.Post("/api/sessions/" + id + "/turns", "{", "application/json");
  REQUIRE(bad_json);
  CHECK(bad_json->status == 400);

  auto got = cli.Get("/api/sessions/" + id);
  REQUIRE(got);
  auto gj = json::parse(got->body);
  CHECK(gj["turns"].size() == 4);
  CHECK(gj["turns"][1]["role"] == "bot");

  auto exported = cli.Get("/api/sessions/" + id + "/export");
  REQUIRE(exported);
  CHECK(parse_dialogue_json(exported->body).turns.size() == 4);

  auto missing = cli.Get("/api/sessions/zzz");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  auto del = cli.Delete("/api/sessions/" + id);
  REQUIRE(del);
  CHECK(del->status == 200);
  auto gone = cli.Post("/api/sessions/" + id + "/turns", R"({"text": "w1"})", "application/json");
  REQUIRE(gone);
  CHECK(gone->status == 404);
  auto unknown = cli.Get("/api/nothing");
  REQUIRE(unknown);
  CHECK(unknown->status == 404);
  CHECK(json::parse(unknown->body).contains("error"));

  server.stop();
  t.join();
}

TEST_CASE("terminated sessions answer 409") {
  ChatService svc(stub_models(std::make_shared<Uniform>(), std::make_shared<Parrot>()), {});
  ChatServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  std::thread t([&] { server.run(); });
  httplib::Client cli("127.0.0.1", port);
  const std::string id = json::parse(cli.Post("/api/sessions", "", "application/json")->body)["session_id"];
  cli.Post("/api/sessions/" + id + "/turns", R"({"text": "w1"})", "application/json");
  auto second = cli.Post("/api/sessions/" + id + "/turns", R"({"text": "w2"})", "application/json");
  REQUIRE(second);
  auto sj = json::parse(second->body);
  CHECK(sj["terminated"] == true);
  CHECK(sj["cause"] == "repetition-skip");
  auto third = cli.Post("/api/sessions/" + id + "/turns", R"({"text": "w3"})", "application/json");
  REQUIRE(third);
  CHECK(third->status == 409);
  server.stop();
  t.join();
}
