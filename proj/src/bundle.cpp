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


#include "dagm/bundle.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dagm/error.hpp"
#include "json.hpp"

namespace dagm {

namespace {

using json = nlohmann::ordered_json;

constexpr std::string_view kMagic = "DAGM";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

std::uint32_t crc(std::string_view bytes) {
  uLong c = crc32(0L, Z_NULL, 0);
  c = crc32(c, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(c);
}

json config_json(const ClassifierConfig& c) {
  return {{"word_dim", c.word_dim}, {"act_dim", c.act_dim}, {"hidden", c.hidden},
          {"mlp_hidden", c.mlp_hidden}, {"shared_encoder", c.shared_encoder}};
}
json config_json(const PolicyConfig& c) {
  return {{"word_dim", c.word_dim},     {"utterance_hidden", c.utterance_hidden},
          {"session_hidden", c.session_hidden}, {"act_dim", c.act_dim},
          {"act_hidden", c.act_hidden}, {"mlp_hidden", c.mlp_hidden},
          {"window", c.window}};
}
json config_json(const GeneratorConfig& c) {
  return {{"emb_dim", c.emb_dim}, {"hidden", c.hidden}, {"attention", c.attention},
          {"max_len", c.max_len}, {"length_normalize", c.length_normalize}};
}
json config_json(const MatcherConfig& c) {
  return {{"emb_dim", c.emb_dim}, {"hidden", c.hidden}, {"context_turns", c.context_turns},
          {"init_scale", c.init_scale}};
}

template <class T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) throw LoadError(std::string("bundle config is missing '") + key + "'");
  out = j.at(key).get<T>();
}

void from_config(const json& j, ClassifierConfig& c) {
  read_field(j, "word_dim", c.word_dim);
  read_field(j, "act_dim", c.act_dim);
  read_field(j, "hidden", c.hidden);
  read_field(j, "mlp_hidden", c.mlp_hidden);
  read_field(j, "shared_encoder", c.shared_encoder);
}
void from_config(const json& j, PolicyConfig& c) {
  read_field(j, "word_dim", c.word_dim);
  read_field(j, "utterance_hidden", c.utterance_hidden);
  read_field(j, "session_hidden", c.session_hidden);
  read_field(j, "act_dim", c.act_dim);
  read_field(j, "act_hidden", c.act_hidden);
  read_field(j, "mlp_hidden", c.mlp_hidden);
  read_field(j, "window", c.window);
}
void from_config(const json& j, GeneratorConfig& c) {
  read_field(j, "emb_dim", c.emb_dim);
  read_field(j, "hidden", c.hidden);
  read_field(j, "attention", c.attention);
  read_field(j, "max_len", c.max_len);
  read_field(j, "length_normalize", c.length_normalize);
}
void from_config(const json& j, MatcherConfig& c) {
  read_field(j, "emb_dim", c.emb_dim);
  read_field(j, "hidden", c.hidden);
  read_field(j, "context_turns", c.context_turns);
  read_field(j, "init_scale", c.init_scale);
}

template <class Model>
void describe(json& models, std::string& floats, const char* kind, const Model& m) {
  json entry;
  entry["kind"] = kind;
  entry["vocab_size"] = m.vocab_size();
  entry["config"] = config_json(m.config());
  json tensors = json::array();
  const ParameterStore& store = m.params();
  for (ParamId id = 0; id < store.size(); ++id) {
    tensors.push_back({{"name", store.name(id)}, {"shape", store.value(id).shape()}});
    for (double v : store.value(id).values()) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      put_u32(floats, bits);
    }
  }
  entry["tensors"] = tensors;
  models.push_back(entry);
}

template <class Model, class Config>
Model rebuild(const json& entry, std::string_view floats, std::size_t& offset) {
  Config cfg;
  from_config(entry.at("config"), cfg);
  // Seed is irrelevant: every tensor is overwritten below.
  Model m(entry.at("vocab_size").get<std::size_t>(), cfg, 0);
  ParameterStore& store = m.params();
  const json& tensors = entry.at("tensors");
  if (tensors.size() != store.size()) {
    throw LoadError("bundle lists " + std::to_string(tensors.size()) + " tensors for " +
                    entry.at("kind").get<std::string>() + ", model has " + std::to_string(store.size()));
  }
  for (ParamId id = 0; id < store.size(); ++id) {
    const auto& t = tensors[id];
    const auto name = t.at("name").get<std::string>();
    const auto shape = t.at("shape").get<Tensor::Shape>();
    if (name != store.name(id) || shape != store.value(id).shape()) {
      throw LoadError("bundle tensor '" + name + "' does not match model parameter '" + store.name(id) + "'");
    }
    auto values = store.value(id).values();
    if (offset + 4 * values.size() > floats.size()) throw LoadError("bundle tensor data is short");
    for (double& v : values) {
      v = static_cast<double>(std::bit_cast<float>(get_u32(floats, offset)));
      offset += 4;
    }
  }
  return m;
}

}  // namespace

void round_to_float(ParameterStore& store) {
  for (ParamId id = 0; id < store.size(); ++id)
    for (double& v : store.value(id).values()) v = static_cast<double>(static_cast<float>(v));
}

void ModelBundle::round_to_float() {
  if (classifier) dagm::round_to_float(classifier->params());
  if (policy) dagm::round_to_float(policy->params());
  if (generator) dagm::round_to_float(generator->params());
  if (matcher) dagm::round_to_float(matcher->params());
}

std::string serialize_bundle(const ModelBundle& bundle) {
  json meta;
  meta["format"] = "dagm-bundle";
  const auto& tokens = bundle.vocab.tokens();
  meta["vocab"] = std::vector<std::string>(tokens.begin() + Vocabulary::kReservedCount, tokens.end());
  meta["config"] = bundle.config_echo;
  json models = json::array();
  std::string floats;
  if (bundle.classifier) describe(models, floats, "classifier", *bundle.classifier);
  if (bundle.policy) describe(models, floats, "policy", *bundle.policy);
  if (bundle.generator) describe(models, floats, "generator", *bundle.generator);
  if (bundle.matcher) describe(models, floats, "matcher", *bundle.matcher);
  meta["models"] = models;
  const std::string meta_text = meta.dump();

  std::string body;
  body.push_back(static_cast<char>(kBundleVersion));
  put_u32(body, static_cast<std::uint32_t>(meta_text.size()));
  body += meta_text;
  body += floats;
  std::string out(kMagic);
  out += body;
  put_u32(out, crc(body));
  return out;
}

ModelBundle parse_bundle(std::string_view bytes) {
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    throw LoadError("not a dagm bundle (bad magic)");
  }
  if (bytes.size() < kMagic.size() + 1 + 4 + 4) throw LoadError("bundle checksum error: file is truncated");
  const std::string_view body = bytes.substr(kMagic.size(), bytes.size() - kMagic.size() - 4);
  const std::uint32_t stored = get_u32(bytes, bytes.size() - 4);
  if (crc(body) != stored) throw LoadError("bundle checksum error: file is corrupt or truncated");
  const auto version = static_cast<std::uint8_t>(body[0]);
  if (version != kBundleVersion) {
    throw LoadError("unsupported bundle version " + std::to_string(version) + " (expected " +
                    std::to_string(kBundleVersion) + ")");
  }
  const std::uint32_t meta_len = get_u32(body, 1);
  if (5 + static_cast<std::size_t>(meta_len) > body.size()) throw LoadError("bundle metadata length is invalid");
  json meta;
  try {
    meta = json::parse(body.substr(5, meta_len));
  } catch (const json::exception& e) {
    throw LoadError(std::string("bundle metadata is not valid JSON: ") + e.what());
  }
  const std::string_view floats = body.substr(5 + meta_len);

  ModelBundle b;
  try {
    b.vocab = Vocabulary::from_words(meta.at("vocab").get<std::vector<std::string>>());
    b.config_echo = meta.at("config").get<std::string>();
    std::size_t offset = 0;
    for (const auto& entry : meta.at("models")) {
      const auto kind = entry.at("kind").get<std::string>();
      if (kind == "classifier") {
        b.classifier = rebuild<ActClassifier, ClassifierConfig>(entry, floats, offset);
      } else if (kind == "policy") {
        b.policy = rebuild<PolicyNet, PolicyConfig>(entry, floats, offset);
      } else if (kind == "generator") {
        b.generator = rebuild<Generator, GeneratorConfig>(entry, floats, offset);
      } else if (kind == "matcher") {
        b.matcher = rebuild<Matcher, MatcherConfig>(entry, floats, offset);
      } else {
        throw LoadError("unknown model kind '" + kind + "' in bundle");
      }
    }
    if (offset != floats.size()) throw LoadError("bundle has trailing tensor data");
  } catch (const json::exception& e) {
    throw LoadError(std::string("bundle metadata is malformed: ") + e.what());
  } catch (const DataError& e) {
    throw LoadError(std::string("bundle vocabulary is invalid: ") + e.what());
  }
  return b;
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
  const std::string bytes = serialize_bundle(bundle);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write bundle to " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing bundle to " + path.string());
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open bundle " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_bundle(ss.str());
}

}  // namespace dagm
