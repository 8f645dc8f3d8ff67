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


#include "dagm/server.hpp"

#include "dagm/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace dagm {

namespace {

using json = nlohmann::ordered_json;

json turn_obj(const ChatTurn& t) {
  return {{"speaker", std::string(speaker_name(t.speaker))},
          {"role", t.from_bot ? "bot" : "user"},
          {"text", t.text},
          {"act", std::string(act_name(t.act))},
          {"act_source", t.act_source}};
}

json reply_obj(const ChatReply& r) {
  json bot = turn_obj(r.bot);
  bot["act_probs"] = r.act_probs;
  json cands = json::array();
  for (const auto& c : r.candidates) {
    cands.push_back({{"act", std::string(act_name(c.act))}, {"text", c.text}, {"prob", c.probability}});
  }
  json out{{"bot", bot}, {"candidates", cands}, {"terminated", r.terminated}};
  if (r.cause) out["cause"] = *r.cause;
  return out;
}

json session_obj(const ChatSessionView& v) {
  json turns = json::array();
  for (const auto& t : v.turns) turns.push_back(turn_obj(t));
  json out{{"session_id", v.id}, {"created", v.created_unix}, {"turns", turns}, {"terminated", v.terminated}};
  if (v.cause) out["cause"] = *v.cause;
  return out;
}

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send(res, status, json{{"error", message}});
}

// Maps library errors onto HTTP statuses.
template <class F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const StateError& e) {
    send_error(res, 409, e.what());
  } catch (const DataError& e) {
    const std::string what = e.what();
    send_error(res, what.rfind("no chat session", 0) == 0 ? 404 : 400, what);
  } catch (const json::exception& e) {
    send_error(res, 400, std::string("bad JSON: ") + e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

}  // namespace

std::string turn_json(const ChatTurn& turn) { return turn_obj(turn).dump(); }
std::string reply_json(const ChatReply& reply) { return reply_obj(reply).dump(); }
std::string session_json(const ChatSessionView& view) { return session_obj(view).dump(); }

std::string acts_json() {
  json acts = json::array();
  for (DialogueAct a : kAllActs) {
    acts.push_back({{"name", std::string(act_name(a))}, {"definition", std::string(act_definition(a))}});
  }
  return json{{"acts", acts}}.dump();
}

struct ChatServer::Impl {
  ChatService& service;
  httplib::Server server;
  explicit Impl(ChatService& s) : service(s) {}
};

ChatServer::ChatServer(ChatService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  ChatService& svc = impl_->service;

  srv.Get("/api/acts", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(acts_json(), "application/json; charset=utf-8");
  });

  srv.Post("/api/sessions", [&svc](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      const ChatSessionView v = svc.create_session();
      json out{{"session_id", v.id}};
      out["opening"] = v.turns.empty() ? json(nullptr) : turn_obj(v.turns.front());
      send(res, 201, out);
    });
  });

  srv.Post(R"(/api/sessions/([^/]+)/turns)", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      std::optional<std::string> text;
      std::optional<DialogueAct> act;
      if (!req.body.empty()) {
        const json body = json::parse(req.body);
        if (!body.is_object()) throw DataError("turn request must be a JSON object");
        if (body.contains("text") && !body["text"].is_null()) text = body["text"].get<std::string>();
        if (body.contains("act_override") && !body["act_override"].is_null()) {
          const auto name = body["act_override"].get<std::string>();
          act = try_parse_act(name);
          if (!act) throw DataError("unknown act '" + name + "'");
        }
      }
      send(res, 200, reply_obj(svc.turn(req.matches[1], text, act)));
    });
  });

  srv.Get(R"(/api/sessions/([^/]+)/export)", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      res.set_content(dialogue_to_json(svc.export_dialogue(req.matches[1])) + "\n",
                      "application/x-ndjson; charset=utf-8");
    });
  });

  srv.Get(R"(/api/sessions/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, session_obj(svc.session(req.matches[1]))); });
  });

  srv.Delete(R"(/api/sessions/([^/]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!svc.remove(req.matches[1])) throw DataError("no chat session '" + std::string(req.matches[1]) + "'");
      send(res, 200, json{{"deleted", std::string(req.matches[1])}});
    });
  });

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) send_error(res, res.status, "HTTP " + std::to_string(res.status));
  });
}

ChatServer::~ChatServer() { stop(); }

int ChatServer::bind(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void ChatServer::run() { impl_->server.listen_after_bind(); }

void ChatServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace dagm
