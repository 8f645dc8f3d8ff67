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


#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <sstream>

#include "dagm/acts.hpp"
#include "dagm/chat.hpp"
#include "dagm/config.hpp"
#include "dagm/error.hpp"
#include "dagm/metrics.hpp"
#include "dagm/pipeline.hpp"

namespace py = pybind11;
using namespace dagm;

namespace {

using Seqs = std::vector<TokenSeq>;

// Runs a stage with the GIL released and returns its log text with the result.
template <typename Fn>
auto logged(Fn fn) {
  std::ostringstream log;
  py::gil_scoped_release release;
  auto result = fn(log);
  return std::make_pair(std::move(result), log.str());
}

py::dict turn_dict(const ChatTurn& t) {
  py::dict d;
  d["speaker"] = std::string(speaker_name(t.speaker));
  d["role"] = t.from_bot ? "bot" : "user";
  d["text"] = t.text;
  d["act"] = std::string(act_name(t.act));
  d["act_source"] = t.act_source;
  return d;
}

class PyChat {
 public:
  PyChat(const PipelineConfig& cfg, const std::string& work, const std::string& model) {
    const WorkDir dir{work};
    auto bundle = std::make_shared<const ModelBundle>(load_bundle(dir.model(model)));
    Corpus openings;
    if (std::filesystem::exists(dir.tagged("test"))) openings = load_tokenized(dir.tagged("test"), bundle->vocab);
    ChatOptions opts;
    opts.similarity_threshold = cfg.rl.similarity_threshold;
    opts.seed = stage_seed(cfg, SeedStream::kChat);
    service_ = std::make_unique<ChatService>(chat_models(bundle, cfg.eval_beam), opts, std::move(openings));
  }

  py::dict create_session() {
    const auto view = service_->create_session();
    py::dict d;
    d["session_id"] = view.id;
    py::list turns;
    for (const auto& t : view.turns) turns.append(turn_dict(t));
    d["turns"] = turns;
    return d;
  }

  py::dict turn(const std::string& id, std::optional<std::string> text, std::optional<std::string> act) {
    std::optional<DialogueAct> override_act;
    if (act) {
      override_act = try_parse_act(*act);
      if (!override_act) throw py::value_error("unknown act '" + *act + "'");
    }
    ChatReply r;
    {
      py::gil_scoped_release release;
      r = service_->turn(id, text, override_act);
    }
    py::dict d;
    d["bot"] = turn_dict(r.bot);
    d["act_probs"] = std::vector<double>(r.act_probs.begin(), r.act_probs.end());
    py::list cands;
    for (const auto& c : r.candidates) {
      py::dict cd;
      cd["act"] = std::string(act_name(c.act));
      cd["text"] = c.text;
      cd["prob"] = c.probability;
      cands.append(cd);
    }
    d["candidates"] = cands;
    d["terminated"] = r.terminated;
    d["cause"] = r.cause ? py::cast(*r.cause) : py::none();
    return d;
  }

  std::string export_jsonl(const std::string& id) const {
    return dialogue_to_json(service_->export_dialogue(id));
  }

 private:
  std::unique_ptr<ChatService> service_;
};

}  // namespace

PYBIND11_MODULE(_dagm, m) {
  m.doc() = "Dialogue-act controlled generation";

  // Later registrations are tried first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);

  py::class_<PipelineConfig>(m, "Config")
      .def(py::init<>())
      .def_static("load", [](const std::string& path) { return load_config(path); })
      .def_static("parse", [](const std::string& text) { return parse_config(text); })
      .def("set", [](PipelineConfig& c, const std::string& a) { apply_override(c, a); }, py::arg("assignment"))
      .def("validate", &PipelineConfig::validate)
      .def("to_ini", [](const PipelineConfig& c) { return config_to_ini(c); })
      .def_readwrite("seed", &PipelineConfig::seed);

  m.def("acts", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (DialogueAct a : kAllActs) out.emplace_back(act_name(a), act_definition(a));
    return out;
  });

  m.def("gen_corpus", [](const PipelineConfig& c, const std::string& work) {
    return logged([&](std::ostream& log) { run_gen_corpus(c, WorkDir{work}, log); return 0; }).second;
  });
  m.def("train_classifier", [](const PipelineConfig& c, const std::string& work) {
    auto [r, log] = logged([&](std::ostream& l) { return run_train_classifier(c, WorkDir{work}, l); });
    py::dict d;
    d["test_accuracy"] = r.test_accuracy;
    d["best_epoch"] = r.training.best_epoch;
    d["epochs"] = r.training.epochs.size();
    d["log"] = log;
    return d;
  });
  m.def("tag", [](const PipelineConfig& c, const std::string& work) {
    auto [acc, log] = logged([&](std::ostream& l) { return run_tag(c, WorkDir{work}, l); });
    py::dict d;
    for (std::size_t i = 0; i < kSplits.size(); ++i) d[py::str(kSplits[i])] = acc[i];
    return d;
  });
  m.def("train_sl", [](const PipelineConfig& c, const std::string& work) {
    auto [curve, log] = logged([&](std::ostream& l) { return run_train_sl(c, WorkDir{work}, l); });
    py::list out;
    for (const auto& e : curve) {
      py::dict d;
      d["epoch"] = e.epoch;
      d["policy_nll"] = e.policy_loss;
      d["generator_nll"] = e.generator_loss;
      out.append(d);
    }
    return out;
  });
  m.def("train_matcher", [](const PipelineConfig& c, const std::string& work) {
    auto [curve, log] = logged([&](std::ostream& l) { return run_train_matcher(c, WorkDir{work}, l); });
    py::list out;
    for (const auto& e : curve) out.append(e.train_loss);
    return out;
  });
  m.def("train_rl", [](const PipelineConfig& c, const std::string& work) {
    auto [curve, log] = logged([&](std::ostream& l) { return run_train_rl(c, WorkDir{work}, l); });
    py::list out;
    for (const auto& r : curve) {
      py::dict d;
      d["iteration"] = r.iteration;
      d["mean_reward"] = r.mean_reward;
      d["mean_length"] = r.mean_length;
      out.append(d);
    }
    return out;
  });
  m.def(
      "simulate",
      [](const PipelineConfig& c, const std::string& work, const std::string& model,
         std::optional<std::size_t> episodes) {
        auto [res, log] = logged([&](std::ostream& l) {
          return run_simulate(c, WorkDir{work}, model, episodes.value_or(c.simulate_episodes), l);
        });
        py::dict d;
        d["lengths"] = res.lengths;
        d["engagement_json"] = engagement_to_json(res.engagement);
        return d;
      },
      py::arg("config"), py::arg("work"), py::arg("model") = "rl", py::arg("episodes") = py::none());
  m.def(
      "evaluate_json",
      [](const PipelineConfig& c, const std::string& work, const std::string& model) {
        auto [res, log] = logged([&](std::ostream& l) { return run_eval(c, WorkDir{work}, model, l); });
        return std::make_pair(res.report.to_json(), act_conditioning_json(res.acts));
      },
      py::arg("config"), py::arg("work"), py::arg("model") = "rl");

  m.def("bleu", [](const Seqs& c, const Seqs& r, std::size_t n) { return bleu(c, r, n); },
        py::arg("candidates"), py::arg("references"), py::arg("n"));
  m.def("distinct_n", [](const Seqs& r, std::size_t n) { return distinct_n(r, n); }, py::arg("responses"),
        py::arg("n"));
  m.def("out_of_context_ratio",
        [](const Seqs& ctx, const TokenSeq& resp) { return out_of_context_ratio(ctx, resp); },
        py::arg("context"), py::arg("response"));

  py::class_<PyChat>(m, "Chat")
      .def(py::init<const PipelineConfig&, const std::string&, const std::string&>(), py::arg("config"),
           py::arg("work"), py::arg("model") = "rl")
      .def("create_session", &PyChat::create_session)
      .def("turn", &PyChat::turn, py::arg("session_id"), py::arg("text") = py::none(),
           py::arg("act") = py::none())
      .def("export_jsonl", &PyChat::export_jsonl);
}
