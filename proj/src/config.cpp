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


#include "dagm/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "dagm/error.hpp"
#include "dagm/rng.hpp"

namespace dagm {

namespace {

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string show(double d) {
  std::ostringstream out;
  out.precision(17);
  out << d;
  return out.str();
}

struct Binding {
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

// Ordered so config_to_ini groups keys by section.
using Registry = std::vector<std::pair<std::string, Binding>>;

template <class T>
Binding size_field(T PipelineConfig::*member, std::size_t T::*field, std::string key) {
  return {[=](PipelineConfig& c, const std::string& v) { (c.*member).*field = parse_size(key, v); },
          [=](const PipelineConfig& c) { return std::to_string((c.*member).*field); }};
}
template <class T>
Binding double_field(T PipelineConfig::*member, double T::*field, std::string key) {
  return {[=](PipelineConfig& c, const std::string& v) { (c.*member).*field = parse_double(key, v); },
          [=](const PipelineConfig& c) { return show((c.*member).*field); }};
}
template <class T>
Binding bool_field(T PipelineConfig::*member, bool T::*field, std::string key) {
  return {[=](PipelineConfig& c, const std::string& v) { (c.*member).*field = parse_bool(key, v); },
          [=](const PipelineConfig& c) { return std::string((c.*member).*field ? "true" : "false"); }};
}
Binding top_size(std::size_t PipelineConfig::*field, std::string key) {
  return {[=](PipelineConfig& c, const std::string& v) { c.*field = parse_size(key, v); },
          [=](const PipelineConfig& c) { return std::to_string(c.*field); }};
}

const Registry& registry() {
  static const Registry r = [] {
    Registry r;
    auto add = [&r](std::string key, Binding b) { r.emplace_back(std::move(key), std::move(b)); };
    using P = PipelineConfig;

    add("run.seed", {[](P& c, const std::string& v) { c.seed = parse_size("run.seed", v); },
                     [](const P& c) { return std::to_string(c.seed); }});

    add("corpus.train_dialogues", top_size(&P::train_dialogues, "corpus.train_dialogues"));
    add("corpus.valid_dialogues", top_size(&P::valid_dialogues, "corpus.valid_dialogues"));
    add("corpus.test_dialogues", top_size(&P::test_dialogues, "corpus.test_dialogues"));
    add("corpus.switch_mass",
        {[](P& c, const std::string& v) {
           if (v.empty() || v == "default") c.switch_mass.reset();
           else c.switch_mass = parse_double("corpus.switch_mass", v);
         },
         [](const P& c) { return c.switch_mass ? show(*c.switch_mass) : std::string("default"); }});
    add("corpus.max_vocab", top_size(&P::max_vocab, "corpus.max_vocab"));

    add("optimizer.rho", double_field(&P::optimizer, &AdaDeltaConfig::rho, "optimizer.rho"));
    add("optimizer.epsilon", double_field(&P::optimizer, &AdaDeltaConfig::epsilon, "optimizer.epsilon"));
    add("optimizer.learning_rate",
        double_field(&P::optimizer, &AdaDeltaConfig::learning_rate, "optimizer.learning_rate"));

    add("classifier.word_dim", size_field(&P::classifier, &ClassifierConfig::word_dim, "classifier.word_dim"));
    add("classifier.act_dim", size_field(&P::classifier, &ClassifierConfig::act_dim, "classifier.act_dim"));
    add("classifier.hidden", size_field(&P::classifier, &ClassifierConfig::hidden, "classifier.hidden"));
    add("classifier.mlp_hidden",
        size_field(&P::classifier, &ClassifierConfig::mlp_hidden, "classifier.mlp_hidden"));
    add("classifier.shared_encoder",
        bool_field(&P::classifier, &ClassifierConfig::shared_encoder, "classifier.shared_encoder"));
    add("classifier.max_epochs",
        size_field(&P::classifier_train, &ClassifierTrainConfig::max_epochs, "classifier.max_epochs"));
    add("classifier.patience",
        size_field(&P::classifier_train, &ClassifierTrainConfig::patience, "classifier.patience"));
    add("classifier.batch_size",
        size_field(&P::classifier_train, &ClassifierTrainConfig::batch_size, "classifier.batch_size"));
    add("classifier.freeze_embeddings",
        bool_field(&P::classifier_train, &ClassifierTrainConfig::freeze_embeddings,
                   "classifier.freeze_embeddings"));
    add("classifier.embeddings", {[](P& c, const std::string& v) { c.classifier_embeddings = v; },
                                  [](const P& c) { return c.classifier_embeddings; }});

    add("policy.word_dim", size_field(&P::policy, &PolicyConfig::word_dim, "policy.word_dim"));
    add("policy.utterance_hidden",
        size_field(&P::policy, &PolicyConfig::utterance_hidden, "policy.utterance_hidden"));
    add("policy.session_hidden",
        size_field(&P::policy, &PolicyConfig::session_hidden, "policy.session_hidden"));
    add("policy.act_dim", size_field(&P::policy, &PolicyConfig::act_dim, "policy.act_dim"));
    add("policy.act_hidden", size_field(&P::policy, &PolicyConfig::act_hidden, "policy.act_hidden"));
    add("policy.mlp_hidden", size_field(&P::policy, &PolicyConfig::mlp_hidden, "policy.mlp_hidden"));
    add("policy.window", size_field(&P::policy, &PolicyConfig::window, "policy.window"));

    add("generator.emb_dim", size_field(&P::generator, &GeneratorConfig::emb_dim, "generator.emb_dim"));
    add("generator.hidden", size_field(&P::generator, &GeneratorConfig::hidden, "generator.hidden"));
    add("generator.attention",
        size_field(&P::generator, &GeneratorConfig::attention, "generator.attention"));
    add("generator.max_len", size_field(&P::generator, &GeneratorConfig::max_len, "generator.max_len"));
    add("generator.length_normalize",
        bool_field(&P::generator, &GeneratorConfig::length_normalize, "generator.length_normalize"));

    add("supervised.epochs", size_field(&P::supervised, &SupervisedConfig::epochs, "supervised.epochs"));
    add("supervised.batch_size",
        size_field(&P::supervised, &SupervisedConfig::batch_size, "supervised.batch_size"));
    add("supervised.patience",
        size_field(&P::supervised, &SupervisedConfig::patience, "supervised.patience"));

    add("matcher.emb_dim", size_field(&P::matcher, &MatcherConfig::emb_dim, "matcher.emb_dim"));
    add("matcher.hidden", size_field(&P::matcher, &MatcherConfig::hidden, "matcher.hidden"));
    add("matcher.context_turns",
        size_field(&P::matcher, &MatcherConfig::context_turns, "matcher.context_turns"));
    add("matcher.init_scale", double_field(&P::matcher, &MatcherConfig::init_scale, "matcher.init_scale"));
    add("matcher.epochs", size_field(&P::matcher_train, &MatcherTrainConfig::epochs, "matcher.epochs"));
    add("matcher.negative_ratio",
        size_field(&P::matcher_train, &MatcherTrainConfig::negative_ratio, "matcher.negative_ratio"));
    add("matcher.batch_size",
        size_field(&P::matcher_train, &MatcherTrainConfig::batch_size, "matcher.batch_size"));

    add("rl.max_turns", size_field(&P::rl, &RlConfig::max_turns, "rl.max_turns"));
    add("rl.rollouts", size_field(&P::rl, &RlConfig::rollouts, "rl.rollouts"));
    add("rl.alpha", double_field(&P::rl, &RlConfig::alpha, "rl.alpha"));
    add("rl.beta", double_field(&P::rl, &RlConfig::beta, "rl.beta"));
    add("rl.similarity_threshold",
        double_field(&P::rl, &RlConfig::similarity_threshold, "rl.similarity_threshold"));
    add("rl.top_k", size_field(&P::rl, &RlConfig::top_k, "rl.top_k"));
    add("rl.beam", top_size(&P::rl_beam, "rl.beam"));
    add("rl.learning_rate", double_field(&P::rl, &RlConfig::learning_rate, "rl.learning_rate"));
    add("rl.batch_size", size_field(&P::rl, &RlConfig::batch_size, "rl.batch_size"));
    add("rl.iterations", size_field(&P::rl, &RlConfig::iterations, "rl.iterations"));

    add("simulate.episodes", top_size(&P::simulate_episodes, "simulate.episodes"));
    add("eval.contexts", top_size(&P::eval_contexts, "eval.contexts"));
    add("eval.beam", top_size(&P::eval_beam, "eval.beam"));
    return r;
  }();
  return r;
}

const Binding& lookup(std::string_view key) {
  for (const auto& [k, b] : registry())
    if (k == key) return b;
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(a, b - a + 1));
}

}  // namespace

void PipelineConfig::validate() const {
  if (train_dialogues < 2) throw ConfigError("corpus.train_dialogues must be at least 2");
  if (switch_mass && (*switch_mass < 0.0 || *switch_mass > 1.0)) {
    throw ConfigError("corpus.switch_mass must be in [0, 1]");
  }
  if (!(optimizer.rho > 0.0 && optimizer.rho < 1.0)) throw ConfigError("optimizer.rho must be in (0, 1)");
  if (!(optimizer.epsilon > 0.0)) throw ConfigError("optimizer.epsilon must be positive");
  if (!(optimizer.learning_rate > 0.0)) throw ConfigError("optimizer.learning_rate must be positive");
  auto positive = [](std::size_t v, const char* key) {
    if (v == 0) throw ConfigError(std::string(key) + " must be positive");
  };
  positive(classifier.word_dim, "classifier.word_dim");
  positive(classifier.hidden, "classifier.hidden");
  positive(policy.utterance_hidden, "policy.utterance_hidden");
  positive(policy.window, "policy.window");
  positive(generator.hidden, "generator.hidden");
  positive(generator.max_len, "generator.max_len");
  positive(matcher.hidden, "matcher.hidden");
  positive(supervised.batch_size, "supervised.batch_size");
  positive(matcher_train.batch_size, "matcher.batch_size");
  positive(eval_beam, "eval.beam");
  positive(rl_beam, "rl.beam");
  rl.validate();
  if (rl.top_k > rl_beam) throw ConfigError("rl.top_k cannot exceed rl.beam");
}

PipelineConfig parse_config(std::string_view ini_text) {
  boost::property_tree::ptree tree;
  std::istringstream in{std::string(ini_text)};
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  PipelineConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config key '" + section + "' is outside a section");
    for (const auto& [key, node] : body) {
      const std::string full = section + "." + key;
      lookup(full).set(c, trim(node.data()));
    }
  }
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_override(PipelineConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form section.key=value");
  }
  lookup(trim(assignment.substr(0, eq))).set(config, trim(assignment.substr(eq + 1)));
}

std::string config_to_ini(const PipelineConfig& config) {
  std::ostringstream out;
  std::string current;
  for (const auto& [key, binding] : registry()) {
    const auto dot = key.find('.');
    const std::string section = key.substr(0, dot);
    if (section != current) {
      if (!current.empty()) out << '\n';
      out << '[' << section << "]\n";
      current = section;
    }
    out << key.substr(dot + 1) << " = " << binding.get(config) << '\n';
  }
  return out.str();
}

std::uint64_t stage_seed(const PipelineConfig& config, SeedStream stream) {
  return mix_seed(config.seed, static_cast<std::uint64_t>(stream));
}

}  // namespace dagm
