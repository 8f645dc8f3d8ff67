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

#include "dagm/supervised.hpp"

#include <algorithm>

#include "dagm/error.hpp"

namespace dagm {

JointLoss joint_sl_loss(Tape& tape, const PolicyNet& policy, const Generator& generator,
                        const Dialogue& dialogue) {
  Graph gp(tape, policy.params());
  Graph gg(tape, generator.params());
  Session turns;
  turns.reserve(dialogue.turns.size());
  for (std::size_t k = 0; k < dialogue.turns.size(); ++k) {
    const Utterance& u = dialogue.turns[k];
    auto act = u.effective_act();
    if (!act) throw DataError("dialogue " + dialogue.id + " turn " + std::to_string(k) + " has no act");
    if (u.tokens.empty()) throw DataError("dialogue " + dialogue.id + " is not tokenized");
    turns.push_back({u.tokens, *act});
  }
  if (turns.empty()) throw EmptyInputError("dialogue " + dialogue.id + " has no turns");

  JointLoss out;
  auto logits = policy.prefix_logits(gp, std::span<const SessionTurn>(turns).first(turns.size() - 1));
  std::vector<Var> pterms;
  for (std::size_t k = 0; k < turns.size(); ++k) {
    pterms.push_back(scale(pick(log_softmax(logits[k]), act_index(turns[k].act)), -1.0));
  }
  out.policy = add_n(pterms);
  out.policy_terms = pterms.size();

  std::vector<Var> gterms;
  for (std::size_t k = 1; k < turns.size(); ++k) {
    std::span<const TokenId> u2;
    if (k >= 2) u2 = turns[k - 2].tokens;
    gterms.push_back(generator.sequence_log_prob(gg, turns[k].act, turns[k - 1].tokens, u2,
                                                 turns[k].tokens));
  }
  out.generator_terms = gterms.size();
  out.generator = gterms.empty() ? tape.constant(Tensor({1})) : scale(add_n(gterms), -1.0);
  out.total = out.policy + out.generator;
  return out;
}

SupervisedLossTotals evaluate_joint_loss(const PolicyNet& policy, const Generator& generator,
                                         const Corpus& corpus) {
  SupervisedLossTotals t;
  for (const auto& d : corpus) {
    Tape tape(false);
    JointLoss l = joint_sl_loss(tape, policy, generator, d);
    t.policy += l.policy.value()[0];
    t.generator += l.generator.value()[0];
    t.policy_terms += l.policy_terms;
    t.generator_terms += l.generator_terms;
  }
  return t;
}

namespace {

double mean(double total, std::size_t n) { return n ? total / static_cast<double>(n) : 0.0; }

}  // namespace

std::vector<SupervisedEpoch> train_supervised(PolicyNet& policy, Generator& generator,
                                              const Corpus& train, const Corpus* valid,
                                              const SupervisedConfig& config,
                                              const SupervisedEpochHook& hook) {
  if (train.empty()) throw EmptyInputError("supervised training on an empty corpus");
  AdaDelta popt(policy.params(), config.optimizer);
  AdaDelta gopt(generator.params(), config.optimizer);
  Rng rng(config.seed);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);

  std::vector<SupervisedEpoch> log;
  std::optional<std::pair<ParameterStore, ParameterStore>> best;
  double best_valid = 0.0;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
    SupervisedLossTotals totals;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      Tape tape;
      std::vector<Var> terms;
      for (std::size_t i = start; i < end; ++i) {
        JointLoss l = joint_sl_loss(tape, policy, generator, train[order[i]]);
        totals.policy += l.policy.value()[0];
        totals.generator += l.generator.value()[0];
        totals.policy_terms += l.policy_terms;
        totals.generator_terms += l.generator_terms;
        terms.push_back(l.total);
      }
      tape.backward(add_n(terms));
      Gradients pg(policy.params()), gg(generator.params());
      tape.accumulate(policy.params(), pg);
      tape.accumulate(generator.params(), gg);
      popt.update(policy.params(), pg);
      gopt.update(generator.params(), gg);
    }
    SupervisedEpoch e;
    e.epoch = epoch;
    e.policy_loss = mean(totals.policy, totals.policy_terms);
    e.generator_loss = mean(totals.generator, totals.generator_terms);
    bool stop = false;
    if (valid) {
      auto v = evaluate_joint_loss(policy, generator, *valid);
      e.valid_policy_loss = mean(v.policy, v.policy_terms);
      e.valid_generator_loss = mean(v.generator, v.generator_terms);
      const double score = *e.valid_policy_loss + *e.valid_generator_loss;
      if (!best || score < best_valid) {
        best_valid = score;
        best.emplace(policy.params(), generator.params());
        since_best = 0;
      } else if (config.patience > 0 && ++since_best >= config.patience) {
        stop = true;
      }
    }
    log.push_back(e);
    if (hook) hook(e);
    if (stop) break;
  }
  if (best) {
    policy.params() = best->first;
    generator.params() = best->second;
  }
  return log;
}

}  // namespace dagm
