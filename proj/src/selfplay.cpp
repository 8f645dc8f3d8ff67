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

#include "dagm/selfplay.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "dagm/error.hpp"

namespace dagm {

TokenSeq NetworkGenerator::respond(DialogueAct act, std::span<const TokenId> u_prev,
                                   std::span<const TokenId> u_prev2, SelectMode mode,
                                   Rng& rng) const {
  const std::size_t width = std::max(top_k_, beam_);
  auto results = net_.beam_search(act, u_prev, u_prev2, width);
  // An immediate EOS is not a usable turn.
  std::erase_if(results, [](const ScoredResponse& r) { return r.tokens.empty(); });
  if (results.empty()) return {Vocabulary::kUnk};
  if (mode == SelectMode::kGreedy) return results.front().tokens;
  return results[rng.index(std::min(top_k_, results.size()))].tokens;
}

double NetworkScorer::relevance(std::span<const TokenSeq> context,
                                std::span<const TokenId> response) const {
  TokenSeq joined = join_context(context, net_.config().context_turns);
  if (joined.empty()) return 0.5;
  return net_.score(joined, response);
}

std::string_view termination_name(Termination t) {
  switch (t) {
    case Termination::kRepetition3: return "repetition-3";
    case Termination::kRepetitionSkip: return "repetition-skip";
    case Termination::kMaxTurns: return "max-turns";
  }
  return "unknown";
}

std::optional<Termination> should_terminate(const Tensor& e_prev, const Tensor& e_cur,
                                            const Tensor& e_next, double threshold) {
  if (cosine(e_prev, e_cur) > threshold && cosine(e_cur, e_next) > threshold) {
    return Termination::kRepetition3;
  }
  if (cosine(e_prev, e_next) > threshold) return Termination::kRepetitionSkip;
  return std::nullopt;
}

void RlConfig::validate() const {
  if (max_turns < 1 || rollouts < 1 || top_k < 1 || batch_size < 1) {
    throw ConfigError("rl: T, N, top_k and batch_size must be at least 1");
  }
  if (alpha < 0.0 || beta < 0.0) throw ConfigError("rl: alpha and beta must be nonnegative");
  if (!(similarity_threshold > 0.0 && similarity_threshold <= 1.0)) {
    throw ConfigError("rl: similarity threshold must be in (0, 1]");
  }
  if (learning_rate < 0.0) throw ConfigError("rl: learning rate must be nonnegative");
}

RolloutRecord simulate_dialogue(const ActPolicy& policy, const ResponseGenerator& generator,
                                std::span<const SessionTurn> history, const RlConfig& config,
                                SelectMode mode, Rng& rng, const std::optional<ForcedTurn>& forced_first,
                                Speaker first_speaker) {
  RolloutRecord rec;
  Session session(history.begin(), history.end());
  rec.history_length = session.size();
  std::vector<Tensor> emb;
  Speaker speaker = first_speaker;
  for (const auto& t : session) {
    rec.turns.push_back({speaker, t.act, t.tokens, false});
    emb.push_back(generator.embed(t.tokens));
    speaker = other_speaker(speaker);
  }
  bool first = true;
  while (true) {
    if (session.size() >= config.max_turns) {
      rec.termination = Termination::kMaxTurns;
      break;
    }
    DialogueAct act;
    TokenSeq tokens;
    std::span<const TokenId> u1, u2;
    const std::size_t n = session.size();
    if (n >= 1) u1 = session[n - 1].tokens;
    if (n >= 2) u2 = session[n - 2].tokens;
    if (first && forced_first) {
      act = forced_first->act;
      tokens = forced_first->response ? *forced_first->response
                                      : generator.respond(act, u1, u2, mode, rng);
    } else {
      act = select_act(policy.distribution(session), mode, rng);
      tokens = generator.respond(act, u1, u2, mode, rng);
    }
    first = false;
    if (tokens.empty()) throw StateError("generator produced an empty response");
    emb.push_back(generator.embed(tokens));
    session.push_back({tokens, act});
    rec.turns.push_back({speaker, act, std::move(tokens), true});
    speaker = other_speaker(speaker);
    const std::size_t m = emb.size();
    if (m >= 3) {
      if (auto t = should_terminate(emb[m - 3], emb[m - 2], emb[m - 1], config.similarity_threshold)) {
        rec.termination = *t;
        break;
      }
    }
  }
  return rec;
}

RewardEstimate estimate_reward(const ActPolicy& policy, const ResponseGenerator& generator,
                               const RelevanceScorer& scorer, std::span<const SessionTurn> state,
                               DialogueAct act, const RlConfig& config, Rng& rng) {
  if (state.size() >= config.max_turns) {
    throw StateError("reward estimate requested for a state already at the turn cap");
  }
  const std::uint64_t base = rng.next_u64();
  RewardEstimate est;
  est.rollouts = config.rollouts;
  for (std::size_t j = 0; j < config.rollouts; ++j) {
    Rng sub(mix_seed(base, j));
    RolloutRecord r = simulate_dialogue(policy, generator, state, config, config.rollout_mode, sub,
                                        ForcedTurn{act, std::nullopt});
    est.expected_length += static_cast<double>(r.length());
    std::vector<TokenSeq> history;
    for (std::size_t k = 0; k < r.history_length; ++k) history.push_back(r.turns[k].tokens);
    double rel = 0.0;
    std::size_t generated = 0;
    for (std::size_t k = r.history_length; k < r.turns.size(); ++k) {
      rel += scorer.relevance(history, r.turns[k].tokens);
      history.push_back(r.turns[k].tokens);
      ++generated;
    }
    est.expected_relevance += rel / static_cast<double>(generated);
  }
  est.expected_length /= static_cast<double>(config.rollouts);
  est.expected_relevance /= static_cast<double>(config.rollouts);
  est.reward = config.alpha * est.expected_length + config.beta * est.expected_relevance;
  return est;
}

std::vector<double> episode_advantages(const Episode& episode) {
  for (const auto& step : episode) {
    if (step.rewards.size() != kNumActs) {
      throw DataError("episode step needs rewards for all " + std::to_string(kNumActs) + " acts");
    }
  }
  std::vector<double> adv(episode.size(), 0.0);
  for (std::size_t t = 0; t < episode.size(); ++t) {
    const auto& rt = episode[t].rewards;
    for (std::size_t i = t; i < episode.size(); ++i) {
      const double taken = episode[i].rewards[act_index(episode[i].act)];
      double d = 0.0;
      for (std::size_t a = 0; a < kNumActs; ++a) d += taken - rt[a];
      adv[t] += d / static_cast<double>(kNumActs);
    }
  }
  return adv;
}

ReinforceDiagnostics reinforce_step(PolicyNet& policy, std::span<const Episode> batch,
                                    const RlConfig& config) {
  ReinforceDiagnostics diag;
  Tape tape;
  Graph g(tape, policy.params());
  std::vector<Var> terms;
  double adv_sum = 0.0;
  for (const auto& episode : batch) {
    auto adv = episode_advantages(episode);
    for (std::size_t t = 0; t < episode.size(); ++t) {
      ++diag.steps;
      adv_sum += adv[t];
      if (adv[t] == 0.0) continue;
      terms.push_back(scale(policy_log_prob(g, policy, episode[t].state, episode[t].act), adv[t]));
    }
  }
  if (diag.steps) diag.mean_advantage = adv_sum / static_cast<double>(diag.steps);
  if (terms.empty() || config.learning_rate == 0.0) return diag;
  tape.backward(add_n(terms));
  Gradients grads(policy.params());
  tape.accumulate(policy.params(), grads);
  double sq = 0.0;
  for (ParamId id = 0; id < grads.size(); ++id)
    for (double v : grads[id].values()) sq += v * v;
  diag.gradient_norm = std::sqrt(sq);
  sgd_step(policy.params(), grads, config.learning_rate);
  return diag;
}

Session sample_opening(const Corpus& corpus, Rng& rng) {
  std::size_t total = 0;
  for (const auto& d : corpus) total += d.turns.size();
  if (total == 0) throw EmptyInputError("no utterances to sample an opening from");
  std::size_t pick_at = rng.index(total);
  for (const auto& d : corpus) {
    if (pick_at >= d.turns.size()) {
      pick_at -= d.turns.size();
      continue;
    }
    const Utterance& u = d.turns[pick_at];
    auto act = u.effective_act();
    if (!act) throw DataError("opening utterance in " + d.id + " has no act");
    if (u.tokens.empty()) throw DataError("opening utterance in " + d.id + " is not tokenized");
    return {{u.tokens, *act}};
  }
  throw StateError("opening sampler ran past the corpus");
}

std::vector<RlIteration> train_rl(PolicyNet& policy, const Generator& generator,
                                  const Matcher& matcher, const Corpus& corpus,
                                  const RlConfig& config, Rng& rng, const RlIterationHook& hook) {
  NetworkGenerator gen(generator, config.top_k);
  NetworkScorer scorer(matcher);
  return train_rl(policy, gen, scorer, corpus, config, rng, hook);
}

std::vector<RlIteration> train_rl(PolicyNet& policy, const ResponseGenerator& gen,
                                  const RelevanceScorer& scorer, const Corpus& corpus,
                                  const RlConfig& config, Rng& rng, const RlIterationHook& hook) {
  config.validate();
  std::vector<RlIteration> curve;
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    NetworkPolicy pol(policy);
    std::vector<Episode> batch;
    double reward_sum = 0.0, length_sum = 0.0;
    std::size_t states = 0;
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      Session opening = sample_opening(corpus, rng);
      RolloutRecord traj = simulate_dialogue(pol, gen, opening, config, SelectMode::kSample, rng);
      length_sum += static_cast<double>(traj.length());
      Episode ep;
      Session state(opening.begin(), opening.end());
      for (std::size_t k = traj.history_length; k < traj.turns.size(); ++k) {
        EpisodeStep step;
        step.state = state;
        step.act = traj.turns[k].act;
        step.rewards.resize(kNumActs);
        for (DialogueAct a : kAllActs) {
          step.rewards[act_index(a)] =
              estimate_reward(pol, gen, scorer, state, a, config, rng).reward;
        }
        reward_sum += step.rewards[act_index(step.act)];
        ++states;
        state.push_back({traj.turns[k].tokens, traj.turns[k].act});
        ep.push_back(std::move(step));
      }
      batch.push_back(std::move(ep));
    }
    reinforce_step(policy, batch, config);
    RlIteration rec;
    rec.iteration = it;
    rec.mean_reward = states ? reward_sum / static_cast<double>(states) : 0.0;
    rec.mean_length = length_sum / static_cast<double>(config.batch_size);
    curve.push_back(rec);
    if (hook) hook(rec);
  }
  return curve;
}

void write_learning_curve(std::ostream& out, std::span<const RlIteration> curve) {
  out << "iteration,mean_reward,mean_length\n";
  out << std::setprecision(10);
  for (const auto& r : curve) out << r.iteration << ',' << r.mean_reward << ',' << r.mean_length << '\n';
}

Dialogue rollout_to_dialogue(const RolloutRecord& record, const Vocabulary& vocab,
                             const std::string& id) {
  Dialogue d;
  d.id = id;
  for (const auto& t : record.turns) {
    Utterance u;
    u.speaker = t.speaker;
    u.tokens = t.tokens;
    u.text = detokenize(t.tokens, vocab);
    u.act = t.act;
    u.act_source = t.generated ? "model" : "tagged";
    d.turns.push_back(std::move(u));
  }
  d.termination = std::string(termination_name(record.termination));
  return d;
}

}  // namespace dagm
