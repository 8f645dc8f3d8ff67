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

#include <memory>
#include <string>

#include "dagm/chat.hpp"

namespace dagm {

// JSON API over a ChatService:
//   POST   /api/sessions               -> {session_id, opening}
//   POST   /api/sessions/{id}/turns    {text?, act_override?}
//   GET    /api/sessions/{id}          -> transcript
//   GET    /api/sessions/{id}/export   -> corpus JSONL line
//   DELETE /api/sessions/{id}
//   GET    /api/acts
// Errors are {"error": message} with a 4xx or 5xx status.
class ChatServer {
 public:
  explicit ChatServer(ChatService& service);
  ~ChatServer();
  ChatServer(const ChatServer&) = delete;
  ChatServer& operator=(const ChatServer&) = delete;

  // Returns the bound port; port 0 picks a free one. Throws Error.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Response bodies, exposed for tests and the terminal REPL.
std::string turn_json(const ChatTurn& turn);
std::string reply_json(const ChatReply& reply);
std::string session_json(const ChatSessionView& view);
std::string acts_json();

}  // namespace dagm
