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

#include "dagm/classifier.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <sstream>

#include "dagm/error.hpp"

namespace dagm {

namespace {

void require_tokens(const Utterance& u) {
  if (u.tokens.empty()) throw DataError("utterance has no tokens; tokenize the corpus first");
}

}  // namespace

ActClassifier::ActClassifier(std::size_t vocab_size, const ClassifierConfig& config,
                             std::uint64_t seed)
    : config_(config), vocab_size_(vocab_size) {
  if (vocab_size == 0) throw ConfigError("classifier needs a nonempty vocabulary");
  Rng rng(seed);
  ParamBuilder b(store_, rng, "clf");
  embedding_ = b.matrix("embedding", vocab_size, config.word_dim);
  cur_fwd_ = GruCellParams::create(b.child("cur_fwd"), config.word_dim, config.hidden);
  cur_bwd_ = GruCellParams::create(b.child("cur_bwd"), config.word_dim, config.hidden);
  if (config.shared_encoder) {
    prev_fwd_ = cur_fwd_;
    prev_bwd_ = cur_bwd_;
  } else {
    prev_fwd_ = GruCellParams::create(b.child("prev_fwd"), config.word_dim, config.hidden);
    prev_bwd_ = GruCellParams::create(b.child("prev_bwd"), config.word_dim, config.hidden);
  }
  act_table_ = b.matrix("act_embedding", kNumActs, config.act_dim);
  mlp_ = MlpParams::create(b.child("mlp"), 4 * config.hidden + config.act_dim, config.mlp_hidden,
                           kNumActs);
}

Var ActClassifier::encode(const Graph& g, const GruCellParams& f, const GruCellParams& b,
                          std::span<const TokenId> u) const {
  if (u.empty()) return g.zeros(2 * config_.hidden);
  auto emb = embed_sequence(g, embedding_, u);
  return bigru_encode(g, f, b, emb).states.back();
}

Var ActClassifier::logits(const Graph& g, std::span<const TokenId> u,
                          std::span<const TokenId> u_prev,
                          std::optional<DialogueAct> a_prev) const {
  if (u.empty()) throw EmptyInputError("classify: empty utterance");
  Var cur = encode(g, cur_fwd_, cur_bwd_, u);
  Var prev = encode(g, prev_fwd_, prev_bwd_, u_prev);
  Var act = a_prev ? row(g(act_table_), act_index(*a_prev)) : g.zeros(config_.act_dim);
  return mlp_logits(g, mlp_, concat({cur, prev, act}));
}

ActDistribution ActClassifier::classify(std::span<const TokenId> u, std::span<const TokenId> u_prev,
                                        std::optional<DialogueAct> a_prev) const {
  Tape tape(false);
  Graph g(tape, store_);
  Tensor p = softmax(logits(g, u, u_prev, a_prev).value());
  return ActDistribution::from_values(p.values());
}

std::vector<DialogueAct> ActClassifier::predict_dialogue(const Dialogue& d) const {
  std::vector<DialogueAct> out;
  out.reserve(d.turns.size());
  for (std::size_t k = 0; k < d.turns.size(); ++k) {
    require_tokens(d.turns[k]);
    std::span<const TokenId> prev;
    std::optional<DialogueAct> a_prev;
    if (k > 0) {
      prev = d.turns[k - 1].tokens;
      a_prev = out.back();
    }
    out.push_back(classify(d.turns[k].tokens, prev, a_prev).argmax());
  }
  return out;
}

Var classifier_loss(const Graph& g, const ActClassifier& model, const Dialogue& d) {
  std::vector<Var> terms;
  for (std::size_t k = 0; k < d.turns.size(); ++k) {
    const Utterance& u = d.turns[k];
    require_tokens(u);
    if (!u.gold) throw DataError("dialogue " + d.id + " turn " + std::to_string(k) + " has no gold act");
    std::span<const TokenId> prev;
    std::optional<DialogueAct> a_prev;
    if (k > 0) {
      prev = d.turns[k - 1].tokens;
      if (!d.turns[k - 1].gold) throw DataError("dialogue " + d.id + " has unlabeled turns");
      a_prev = d.turns[k - 1].gold->argmax();
    }
    Var l = model.logits(g, u.tokens, prev, a_prev);
    terms.push_back(cross_entropy_logits(l, u.gold->to_tensor()));
  }
  if (terms.empty()) throw EmptyInputError("dialogue " + d.id + " has no turns");
  return add_n(terms);
}

namespace {

struct TurnRef {
  std::size_t dialogue;
  std::size_t turn;
};

Var turn_loss(const Graph& g, const ActClassifier& model, const Dialogue& d, std::size_t k) {
  const Utterance& u = d.turns[k];
  std::span<const TokenId> prev;
  std::optional<DialogueAct> a_prev;
  if (k > 0) {
    prev = d.turns[k - 1].tokens;
    a_prev = d.turns[k - 1].gold->argmax();
  }
  return cross_entropy_logits(model.logits(g, u.tokens, prev, a_prev), u.gold->to_tensor());
}

void check_labeled(const Corpus& corpus) {
  for (const auto& d : corpus) {
    for (std::size_t k = 0; k < d.turns.size(); ++k) {
      require_tokens(d.turns[k]);
      if (!d.turns[k].gold) {
        throw DataError("dialogue " + d.id + " turn " + std::to_string(k) + " has no gold act");
      }
    }
  }
}

}  // namespace

double prediction_accuracy(std::span<const DialogueAct> predicted,
                           std::span<const ActDistribution> gold) {
  if (predicted.size() != gold.size()) throw DimensionError("prediction/gold length mismatch");
  if (predicted.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == gold[i].argmax();
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double evaluate_classifier(const ActClassifier& model, const Corpus& corpus) {
  std::vector<DialogueAct> predicted;
  std::vector<ActDistribution> gold;
  for (const auto& d : corpus) {
    for (const auto& u : d.turns) {
      if (!u.gold) throw DataError("dialogue " + d.id + " has unlabeled turns");
      gold.push_back(*u.gold);
    }
    auto p = model.predict_dialogue(d);
    predicted.insert(predicted.end(), p.begin(), p.end());
  }
  return prediction_accuracy(predicted, gold);
}

ClassifierTrainResult train_classifier(ActClassifier& model, const Corpus& train,
                                       const Corpus* valid, const ClassifierTrainConfig& config,
                                       const ClassifierEpochHook& hook) {
  check_labeled(train);
  if (valid) check_labeled(*valid);
  std::vector<TurnRef> items;
  for (std::size_t i = 0; i < train.size(); ++i)
    for (std::size_t k = 0; k < train[i].turns.size(); ++k) items.push_back({i, k});
  if (items.empty()) throw EmptyInputError("no training utterances");

  ParameterStore& store = model.params();
  AdaDelta opt(store, config.optimizer);
  Rng rng(config.seed);
  const std::size_t batch = config.batch_size == 0 ? items.size() : config.batch_size;

  ClassifierTrainResult result;
  std::optional<ParameterStore> best;
  double best_valid = -1.0;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    if (config.shuffle) {
      for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[rng.index(i)]);
    }
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < items.size(); start += batch) {
      const std::size_t end = std::min(items.size(), start + batch);
      Tape tape;
      Graph g(tape, store);
      std::vector<Var> terms;
      for (std::size_t i = start; i < end; ++i)
        terms.push_back(turn_loss(g, model, train[items[i].dialogue], items[i].turn));
      Var loss = add_n(terms);
      loss_sum += loss.value()[0];
      tape.backward(loss);
      Gradients grads(store);
      tape.accumulate(store, grads);
      if (config.freeze_embeddings) grads[model.embedding()].fill(0.0);
      opt.update(store, grads);
    }

    ClassifierEpoch log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(items.size());
    log.train_accuracy = evaluate_classifier(model, train);
    if (valid) log.valid_accuracy = evaluate_classifier(model, *valid);
    result.epochs.push_back(log);
    if (hook) hook(log);

    if (valid) {
      if (*log.valid_accuracy > best_valid) {
        best_valid = *log.valid_accuracy;
        best = store;
        result.best_epoch = epoch;
        since_best = 0;
      } else if (++since_best >= config.patience) {
        result.early_stopped = true;
        break;
      }
    } else {
      result.best_epoch = epoch;
    }
  }
  if (best) store = *best;
  return result;
}

std::size_t load_text_embeddings(std::istream& in, const Vocabulary& vocab, Tensor& table) {
  if (table.rank() != 2 || table.rows() != vocab.size()) {
    throw DimensionError("embedding table does not match the vocabulary");
  }
  const std::size_t dim = table.cols();
  std::size_t replaced = 0, line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string token;
    if (!(ss >> token)) continue;
    std::vector<double> values;
    double v;
    while (ss >> v) values.push_back(v);
    if (values.size() != dim) {
      throw DataError("embedding line " + std::to_string(line_no) + ": expected " +
                      std::to_string(dim) + " values, got " + std::to_string(values.size()));
    }
    if (!vocab.contains(token)) continue;
    const TokenId id = vocab.id(token);
    for (std::size_t c = 0; c < dim; ++c) table.at(id, c) = values[c];
    ++replaced;
  }
  return replaced;
}

}  // namespace dagm
