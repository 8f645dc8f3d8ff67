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


#include "dagm/cli.hpp"

#include <algorithm>
#include <functional>
#include <iomanip>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "dagm/chat.hpp"
#include "dagm/error.hpp"
#include "dagm/pipeline.hpp"
#include "dagm/server.hpp"

namespace dagm::cli {

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string work = "work";

  PipelineConfig load() const {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_config(config_path);
    for (const auto& o : overrides) apply_override(cfg, o);
    if (seed) cfg.seed = *seed;
    cfg.validate();
    return cfg;
  }
};

void add_common(CLI::App& sub, Common& c) {
  sub.add_option("--config", c.config_path, "INI configuration file")->check(CLI::ExistingFile);
  sub.add_option("--set", c.overrides, "Override one key, as section.key=value")->take_all();
  sub.add_option("--seed", c.seed, "Master seed");
  sub.add_option("--work", c.work, "Work directory for artifacts");
}

void check_model_name(const std::string& m) {
  if (m != "sl" && m != "rl") throw ConfigError("model must be 'sl' or 'rl', got '" + m + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

Corpus chat_openings(const WorkDir& work, const Vocabulary& vocab) {
  if (std::filesystem::exists(work.tagged("test"))) return load_tokenized(work.tagged("test"), vocab);
  return {};
}

ChatService make_service(const PipelineConfig& cfg, const WorkDir& work, const std::string& model) {
  auto bundle = std::make_shared<const ModelBundle>(load_bundle(work.model(model)));
  if (!bundle->policy || !bundle->generator) {
    throw DataError(work.model(model).string() + " needs a policy and a generator");
  }
  ChatOptions opts;
  opts.similarity_threshold = cfg.rl.similarity_threshold;
  opts.seed = stage_seed(cfg, SeedStream::kChat);
  Corpus openings = chat_openings(work, bundle->vocab);
  return ChatService(chat_models(bundle, cfg.eval_beam), opts, std::move(openings));
}

void print_bot(std::ostream& out, const ChatTurn& t) {
  out << "bot [" << act_name(t.act) << ", " << t.act_source << "]: " << t.text << '\n';
}

void chat_loop(ChatService& svc, std::ostream& out, std::istream& in) {
  out << "commands: /act NAME [text] overrides the act, /acts lists acts, /quit exits\n";
  const auto view = svc.create_session();
  for (const auto& t : view.turns) print_bot(out, t);
  std::string line;
  while (out << "> " << std::flush, std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line == "/quit") break;
    if (line == "/acts") {
      for (DialogueAct a : kAllActs) out << "  " << act_name(a) << "  " << act_definition(a) << '\n';
      continue;
    }
    std::optional<std::string> text = line;
    std::optional<DialogueAct> act;
    if (line.rfind("/act ", 0) == 0) {
      std::string rest = trim(line.substr(5));
      const auto sp = rest.find(' ');
      const std::string name = rest.substr(0, sp);
      act = try_parse_act(name);
      if (!act) {
        out << "unknown act '" << name << "'\n";
        continue;
      }
      text = sp == std::string::npos ? std::nullopt : std::optional(trim(rest.substr(sp)));
      if (text && text->empty()) text.reset();
    } else if (line[0] == '/') {
      out << "unknown command " << line << '\n';
      continue;
    }
    ChatReply reply;
    try {
      reply = svc.turn(view.id, text, act);
    } catch (const DataError& e) {
      out << "error: " << e.what() << '\n';
      continue;
    }
    print_bot(out, reply.bot);
    for (const auto& c : reply.candidates) {
      out << "    " << act_name(c.act) << ' ' << std::fixed << std::setprecision(3) << c.probability
          << "  " << c.text << '\n';
    }
    out.unsetf(std::ios::floatfield);
    if (reply.terminated) {
      out << "session ended: " << reply.cause.value_or("terminated") << '\n';
      break;
    }
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::istream& in) {
  CLI::App app{"Dialogue-act controlled generation: corpus, training, self-play, evaluation, chat"};
  app.name("dagm");
  app.require_subcommand(1, 1);
  Common common;
  std::string model = "rl";
  std::optional<std::size_t> episodes;
  std::string host = "127.0.0.1";
  int port = 8080;

  std::function<int()> action;
  auto stage = [&](const char* name, const char* help, auto fn) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(*sub, common);
    sub->callback([&, fn] {
      action = [&, fn] {
        const PipelineConfig cfg = common.load();
        fn(cfg, WorkDir{common.work});
        return 0;
      };
    });
    return sub;
  };

  stage("gen-corpus", "Generate the labeled toy corpus", [&](const PipelineConfig& c, const WorkDir& w) {
    run_gen_corpus(c, w, out);
  });
  stage("train-classifier", "Train the dialogue act classifier",
        [&](const PipelineConfig& c, const WorkDir& w) { run_train_classifier(c, w, out); });
  stage("tag", "Tag every corpus split with the classifier",
        [&](const PipelineConfig& c, const WorkDir& w) { run_tag(c, w, out); });
  stage("train-sl", "Jointly train the policy and generator on tagged data",
        [&](const PipelineConfig& c, const WorkDir& w) { run_train_sl(c, w, out); });
  stage("train-matcher", "Train the relevance matcher",
        [&](const PipelineConfig& c, const WorkDir& w) { run_train_matcher(c, w, out); });
  stage("train-rl", "Optimize the policy with self-play REINFORCE",
        [&](const PipelineConfig& c, const WorkDir& w) { run_train_rl(c, w, out); });
  auto* sim = stage("simulate", "Run machine-machine dialogues", [&](const PipelineConfig& c, const WorkDir& w) {
    check_model_name(model);
    run_simulate(c, w, model, episodes.value_or(c.simulate_episodes), out);
  });
  sim->add_option("--model", model, "Bundle to simulate: sl or rl");
  sim->add_option("--episodes", episodes, "Number of dialogues")->check(CLI::PositiveNumber);
  auto* ev = stage("eval", "Compute response metrics on held-out contexts",
                   [&](const PipelineConfig& c, const WorkDir& w) {
                     check_model_name(model);
                     run_eval(c, w, model, out);
                   });
  ev->add_option("--model", model, "Bundle to evaluate: sl or rl");
  auto* chat = stage("chat", "Chat with a bundle in the terminal", [&](const PipelineConfig& c, const WorkDir& w) {
    check_model_name(model);
    ChatService svc = make_service(c, w, model);
    chat_loop(svc, out, in);
  });
  chat->add_option("--model", model, "Bundle to chat with: sl or rl");
  auto* serve = stage("serve", "Serve the chat HTTP API", [&](const PipelineConfig& c, const WorkDir& w) {
    check_model_name(model);
    ChatService svc = make_service(c, w, model);
    ChatServer server(svc);
    const int bound = server.bind(host, port);
    out << "listening on http://" << host << ':' << bound << std::endl;
    server.run();
  });
  serve->add_option("--model", model, "Bundle to serve: sl or rl");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port, 0 picks a free one")->check(CLI::Range(0, 65535));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\nrun 'dagm --help' for usage\n";
    return 2;
  }
  try {
    return action();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace dagm::cli
