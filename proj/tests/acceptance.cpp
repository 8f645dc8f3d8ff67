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


// Runs every primary acceptance criterion and prints one PASS/FAIL line each.
// Exit status is 0 only when all selected criteria pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "dagm/classifier.hpp"
#include "dagm/config.hpp"
#include "dagm/error.hpp"
#include "dagm/generator.hpp"
#include "dagm/matcher.hpp"
#include "dagm/metrics.hpp"
#include "dagm/optim.hpp"
#include "dagm/pipeline.hpp"
#include "dagm/policy.hpp"
#include "dagm/selfplay.hpp"
#include "dagm/supervised.hpp"
#include "dagm/toyworld.hpp"

using namespace dagm;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kGradTolerance = 1e-4;
constexpr std::size_t kGradInstances = 20;
constexpr double kGradBudgetSeconds = 120;
constexpr std::size_t kOracleSeeds = 50;
constexpr std::size_t kGreedyInstances = 100;
constexpr double kOracleBudgetSeconds = 60;
constexpr double kClassifierAccuracy = 0.95;
constexpr std::size_t kCapacityUtterances = 20;
constexpr std::size_t kCapacityEpochs = 200;
constexpr double kClassifierBudgetSeconds = 300;
constexpr double kRewardTolerance = 1e-12;
constexpr std::size_t kTerminationCases = 30;
constexpr double kBanditMass = 0.9;
constexpr std::size_t kBanditSteps = 200;
constexpr double kReinforceBudgetSeconds = 120;
constexpr std::size_t kEngagementEpisodes = 200;
constexpr std::size_t kBootstrapResamples = 10000;
constexpr double kEngagementBudgetSeconds = 30 * 60;
constexpr double kMetricTolerance = 1e-9;
constexpr std::size_t kFuzzInputs = 10000;
constexpr std::size_t kDiversityContexts = 100;
constexpr double kPipelineBudgetSeconds = 60 * 60;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

constexpr TokenId kW0 = Vocabulary::kReservedCount;

TokenSeq random_tokens(Rng& rng, std::size_t words, std::size_t min_len, std::size_t max_len) {
  TokenSeq u(min_len + rng.index(max_len - min_len + 1));
  for (auto& t : u) t = kW0 + static_cast<TokenId>(rng.index(words));
  return u;
}

void randomize(ParameterStore& store, Rng& rng, double scale) {
  for (ParamId i = 0; i < store.size(); ++i)
    for (double& v : store.value(i).values()) v = rng.uniform(-scale, scale);
}

ActDistribution random_distribution(Rng& rng) {
  std::vector<double> v(kNumActs);
  double total = 0.0;
  for (double& x : v) total += x = rng.uniform(0.05, 1.0);
  for (double& x : v) x /= total;
  return ActDistribution::from_values(v);
}

Dialogue random_dialogue(Rng& rng, std::size_t words, std::size_t turns) {
  Dialogue d;
  d.id = "grad";
  Speaker s = Speaker::kA;
  for (std::size_t k = 0; k < turns; ++k) {
    Utterance u;
    u.speaker = s;
    u.tokens = random_tokens(rng, words, 1, 3);
    u.gold = random_distribution(rng);
    u.act = act_from_index(rng.index(kNumActs));
    d.turns.push_back(std::move(u));
    s = other_speaker(s);
  }
  return d;
}

// ---------------------------------------------------------------------------

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  constexpr std::size_t kWords = 5;
  const std::size_t vocab = Vocabulary::kReservedCount + kWords;
  std::map<std::string, double> worst;
  auto track = [&](const std::string& what, const GradCheckResult& r) {
    worst[what] = std::max(worst[what], r.max_relative_error);
  };
  for (std::size_t i = 0; i < kGradInstances; ++i) {
    Rng rng(mix_seed(101, i));
    {
      ClassifierConfig c;
      c.word_dim = c.act_dim = c.hidden = 2;
      c.mlp_hidden = 3;
      c.shared_encoder = i % 2 == 1;
      ActClassifier m(vocab, c, i);
      randomize(m.params(), rng, 0.8);
      const Dialogue d = random_dialogue(rng, kWords, 3);
      track("classifier", grad_check([&](Tape& t) { return classifier_loss(Graph(t, m.params()), m, d); },
                                     m.params()));
    }
    {
      PolicyConfig pc;
      pc.word_dim = pc.utterance_hidden = pc.session_hidden = 2;
      pc.act_dim = pc.act_hidden = 2;
      pc.mlp_hidden = 3;
      GeneratorConfig gc;
      gc.emb_dim = gc.hidden = gc.attention = 2;
      gc.max_len = 4;
      PolicyNet p(vocab, pc, i);
      Generator g(vocab, gc, i + 1000);
      randomize(p.params(), rng, 0.8);
      randomize(g.params(), rng, 0.8);
      const Dialogue d = random_dialogue(rng, kWords, 3);
      auto loss = [&](Tape& t) { return joint_sl_loss(t, p, g, d).total; };
      track("joint SL (policy term)", grad_check(loss, p.params()));
      track("joint SL (generator term)", grad_check(loss, g.params()));
    }
    {
      MatcherConfig mc;
      mc.emb_dim = mc.hidden = 2;
      Matcher m(vocab, mc, i);
      randomize(m.params(), rng, 0.8);
      std::vector<MatchExample> batch;
      for (int k = 0; k < 2; ++k) {
        batch.push_back({random_tokens(rng, kWords, 1, 4), random_tokens(rng, kWords, 1, 3),
                         static_cast<double>(k % 2)});
      }
      track("matcher", grad_check([&](Tape& t) { return matcher_loss(Graph(t, m.params()), m, batch); },
                                  m.params()));
    }
    {
      PolicyConfig pc;
      pc.word_dim = pc.utterance_hidden = pc.session_hidden = 3;
      pc.act_dim = pc.act_hidden = 2;
      pc.mlp_hidden = 4;
      PolicyNet p(vocab, pc, i + 7);
      randomize(p.params(), rng, 0.8);
      Session s;
      for (std::size_t k = 0; k < 1 + i % 3; ++k) {
        s.push_back({random_tokens(rng, kWords, 1, 3), act_from_index(rng.index(kNumActs))});
      }
      const DialogueAct a = act_from_index(rng.index(kNumActs));
      track("policy log-prob",
            grad_check([&](Tape& t) { return policy_log_prob(Graph(t, p.params()), p, s, a); }, p.params()));
    }
  }
  const double secs = seconds_since(t0);
  bool ok = secs < kGradBudgetSeconds;
  std::string detail;
  for (const auto& [what, err] : worst) {
    ok = ok && err <= kGradTolerance;
    detail += what + " " + num(err, 3) + ", ";
  }
  detail += std::to_string(kGradInstances) + " instances each, max rel err <= " + num(kGradTolerance);
  return {ok, detail};
}

// Sequence score the way beam search accumulates it.
double oracle_score(const Generator& gen, DialogueAct act, const TokenSeq& ctx, const TokenSeq& seq) {
  Tape t(false);
  Graph g(t, gen.params());
  auto enc = gen.encode(g, act, ctx, {});
  auto h = gen.start(g, enc);
  for (TokenId tok : seq) h = gen.step_decode(g, enc, h, tok);
  return gen.score(h.log_prob, seq.size());
}

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  std::size_t exhaustive_ok = 0, greedy_ok = 0;
  for (std::size_t seed = 0; seed < kOracleSeeds; ++seed) {
    GeneratorConfig cfg;
    cfg.emb_dim = 3;
    cfg.hidden = 2;
    cfg.attention = 3;
    cfg.max_len = 3;
    cfg.length_normalize = seed % 2 == 0;
    Generator gen(Vocabulary::kReservedCount + 2, cfg, seed);
    Rng rng(mix_seed(202, seed));
    randomize(gen.params(), rng, 2.0);
    const DialogueAct act = act_from_index(seed % kNumActs);
    const TokenSeq ctx = {static_cast<TokenId>(kW0 + seed % 2)};
    const auto& emit = gen.emittable();
    double best = -1e300;
    TokenSeq best_body;
    std::function<void(const TokenSeq&)> rec = [&](const TokenSeq& seq) {
      if (!seq.empty() && (seq.back() == Vocabulary::kEos || seq.size() == cfg.max_len)) {
        TokenSeq body = seq;
        if (body.back() == Vocabulary::kEos) body.pop_back();
        if (body.empty()) return;  // beam search never returns an empty response first
        const double sc = oracle_score(gen, act, ctx, seq);
        if (sc > best || (sc == best && body < best_body)) {
          best = sc;
          best_body = body;
        }
        return;
      }
      for (std::size_t id : emit) {
        TokenSeq next = seq;
        next.push_back(static_cast<TokenId>(id));
        rec(next);
      }
    };
    rec({});
    // Width covers every partial hypothesis, so the search is exact.
    auto beams = gen.beam_search(act, ctx, {}, 64);
    std::erase_if(beams, [](const ScoredResponse& r) { return r.tokens.empty(); });
    if (emit.size() <= 4 && !beams.empty() && beams[0].tokens == best_body &&
        std::abs(beams[0].score - best) <= 1e-12 * std::max(1.0, std::abs(best))) {
      ++exhaustive_ok;
    }
  }
  for (std::size_t i = 0; i < kGreedyInstances; ++i) {
    GeneratorConfig cfg;
    cfg.emb_dim = 4;
    cfg.hidden = 3;
    cfg.attention = 3;
    cfg.max_len = 6;
    Generator gen(Vocabulary::kReservedCount + 6, cfg, i);
    Rng rng(mix_seed(303, i));
    randomize(gen.params(), rng, 1.5);
    const DialogueAct act = act_from_index(i % kNumActs);
    const TokenSeq u1 = random_tokens(rng, 6, 1, 4), u2 = random_tokens(rng, 6, 0, 3);
    const auto g = gen.greedy(act, u1, u2);
    const auto b = gen.beam_search(act, u1, u2, 1);
    if (b.size() == 1 && b[0].tokens == g.tokens && b[0].log_prob == g.log_prob) ++greedy_ok;
  }
  const double secs = seconds_since(t0);
  const bool ok = exhaustive_ok == kOracleSeeds && greedy_ok == kGreedyInstances && secs < kOracleBudgetSeconds;
  return {ok, "exhaustive top-1 " + std::to_string(exhaustive_ok) + "/" + std::to_string(kOracleSeeds) +
                  ", beam 1 = greedy " + std::to_string(greedy_ok) + "/" + std::to_string(kGreedyInstances)};
}

// Stub pieces for reward and termination checks.
Tensor indicator(std::span<const TokenId> u) {
  Tensor e(Tensor::Shape{256});
  e.values()[u.empty() ? 0 : u[0] % 256] = 1.0;
  return e;
}

struct CountingGenerator : ResponseGenerator {
  TokenSeq respond(DialogueAct, std::span<const TokenId> u1, std::span<const TokenId>, SelectMode,
                   Rng&) const override {
    return {u1.empty() ? kW0 : static_cast<TokenId>(u1[0] + 1)};
  }
  Tensor embed(std::span<const TokenId> u) const override { return indicator(u); }
};

struct ConstantScorer : RelevanceScorer {
  double relevance(std::span<const TokenSeq>, std::span<const TokenId>) const override { return 0.5; }
};

struct OnePolicy : ActPolicy {
  ActDistribution distribution(std::span<const SessionTurn>) const override {
    return ActDistribution::one_hot(DialogueAct::kCmS);
  }
};

Outcome reward_arithmetic() {
  RlConfig cfg;
  cfg.alpha = 0.67;
  cfg.beta = 0.33;
  cfg.rollouts = 3;
  std::string detail;
  bool ok = true;
  for (std::size_t L : {1u, 5u, 8u}) {
    cfg.max_turns = L;
    Rng rng(L);
    const auto est = estimate_reward(OnePolicy{}, CountingGenerator{}, ConstantScorer{}, {},
                                     DialogueAct::kCsS, cfg, rng);
    const double expected = 0.67 * static_cast<double>(L) + 0.165;
    ok = ok && est.expected_length == static_cast<double>(L) && std::abs(est.reward - expected) <= kRewardTolerance;
    detail += "L=" + std::to_string(L) + " -> " + num(est.reward, 12) + " (want " + num(expected, 12) + "); ";
  }
  return {ok, detail};
}

Tensor unit(std::vector<double> v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  Tensor t(Tensor::Shape{v.size()});
  for (std::size_t i = 0; i < v.size(); ++i) t.values()[i] = v[i] / n;
  return t;
}

Outcome termination_rules() {
  Rng rng(404);
  const double threshold = 0.9;
  std::size_t right = 0;
  auto random_dir = [&] {
    std::vector<double> v(6);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
  };
  auto perturb = [&](std::vector<double> v, double eps) {
    for (double& x : v) x += rng.uniform(-eps, eps);
    return v;
  };
  auto orth = [](const std::vector<double>& v) {
    // A vector orthogonal to v built in the plane of v and a fixed axis.
    std::vector<double> w(v.size(), 0.0);
    w[0] = 1.0;
    double dot = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      dot += v[i] * w[i];
      nn += v[i] * v[i];
    }
    for (std::size_t i = 0; i < v.size(); ++i) w[i] -= dot / nn * v[i];
    return w;
  };
  for (std::size_t k = 0; k < kTerminationCases; ++k) {
    const auto base = random_dir();
    std::optional<Termination> want, got;
    switch (k % 3) {
      case 0:  // identical or near-identical triple: rule (1) wins over (2)
        want = Termination::kRepetition3;
        got = should_terminate(unit(base), unit(perturb(base, 0.01)), unit(base), threshold);
        break;
      case 1:  // the agent repeats itself across the other agent's turn
        want = Termination::kRepetitionSkip;
        got = should_terminate(unit(base), unit(orth(base)), unit(perturb(base, 0.01)), threshold);
        break;
      default:  // all pairs below threshold
        want = std::nullopt;
        {
          // Third vector orthogonal to both others.
          auto a = unit(base), b = unit(orth(base));
          std::vector<double> c = random_dir();
          for (const Tensor* v : {&a, &b}) {
            double dot = 0.0;
            for (std::size_t i = 0; i < c.size(); ++i) dot += c[i] * v->values()[i];
            for (std::size_t i = 0; i < c.size(); ++i) c[i] -= dot * v->values()[i];
          }
          got = should_terminate(a, b, unit(c), threshold);
        }
        break;
    }
    right += got == want;
  }
  return {right == kTerminationCases,
          std::to_string(right) + "/" + std::to_string(kTerminationCases) + " constructed triples"};
}

EpisodeStep bandit_step(DialogueAct a, const std::vector<double>& r, const Session& s = {}) {
  EpisodeStep st;
  st.state = s;
  st.act = a;
  st.rewards = r;
  return st;
}

Outcome reinforce_correctness() {
  const auto t0 = Clock::now();
  PolicyConfig pc;
  pc.word_dim = pc.utterance_hidden = pc.session_hidden = 4;
  pc.act_dim = pc.act_hidden = 3;
  pc.mlp_hidden = 8;
  std::string detail;

  // Uniform per-act rewards.
  PolicyNet pol(40, pc, 11);
  Rng rng(505);
  bool zero_ok = true;
  {
    RlConfig cfg;
    cfg.learning_rate = 0.5;
    PolicyNet p = pol;
    std::vector<Episode> batch;
    for (int e = 0; e < 3; ++e) {
      Episode ep;
      Session s;
      for (int t = 0; t < 4; ++t) {
        ep.push_back(bandit_step(act_from_index(rng.index(kNumActs)), std::vector<double>(kNumActs, 2.5), s));
        s.push_back({random_tokens(rng, 20, 1, 3), ep.back().act});
      }
      batch.push_back(ep);
    }
    reinforce_step(p, batch, cfg);
    zero_ok = p.params() == pol.params();
  }
  detail += std::string("uniform rewards ") + (zero_ok ? "bit-identical" : "CHANGED") + "; ";

  // 7-act bandit.
  double mass = 0.0;
  {
    RlConfig cfg;
    cfg.learning_rate = 0.5;
    PolicyNet p = pol;
    const DialogueAct best = DialogueAct::kCsA;
    std::vector<double> r(kNumActs, 0.0);
    r[act_index(best)] = 1.0;
    for (std::size_t it = 0; it < kBanditSteps; ++it) {
      std::vector<Episode> batch;
      for (int b = 0; b < 4; ++b) {
        batch.push_back({bandit_step(select_act(p.act_distribution({}), SelectMode::kSample, rng), r)});
      }
      reinforce_step(p, batch, cfg);
    }
    mass = p.act_distribution({})[best];
  }
  detail += "bandit mass " + num(mass) + "; ";

  // Two rewarded arms. The output bias moves by lr * A * (1[j = a] - p_j).
  bool sign_ok = true;
  double worst = 0.0;
  {
    RlConfig cfg;
    cfg.learning_rate = 1e-3;
    std::vector<double> r(kNumActs, 0.0);
    r[act_index(DialogueAct::kCmS)] = 1.0;
    for (DialogueAct taken : {DialogueAct::kCmS, DialogueAct::kCmQ}) {
      PolicyNet p = pol;
      const ActDistribution before = p.act_distribution({});
      const double A = r[act_index(taken)] - 1.0 / kNumActs;
      const Tensor b_before = p.params().value(p.mlp().b2);
      reinforce_step(p, std::vector<Episode>{{bandit_step(taken, r)}}, cfg);
      const Tensor& b_after = p.params().value(p.mlp().b2);
      for (std::size_t j = 0; j < kNumActs; ++j) {
        const double closed = cfg.learning_rate * A * ((j == act_index(taken) ? 1.0 : 0.0) - before[j]);
        const double moved = b_after.values()[j] - b_before.values()[j];
        sign_ok = sign_ok && (closed > 0) == (moved > 0) && closed != 0.0;
        worst = std::max(worst, std::abs(moved - closed) / std::abs(closed));
      }
      const double dlp = std::log(p.act_distribution({})[taken]) - std::log(before[taken]);
      sign_ok = sign_ok && dlp * A > 0.0;
    }
  }
  detail += std::string("2-arm closed form ") + (sign_ok ? "signs agree" : "SIGN MISMATCH") +
            " (bias rel err " + num(worst, 3) + ")";
  const double secs = seconds_since(t0);
  return {zero_ok && mass >= kBanditMass && sign_ok && worst < 1e-6 && secs < kReinforceBudgetSeconds, detail};
}

TokenSeq w(std::string_view letters) {
  TokenSeq s;
  for (char c : letters) s.push_back(kW0 + static_cast<TokenId>(c - 'a'));
  return s;
}

Outcome metric_fidelity() {
  std::vector<std::string> bad;
  auto near = [&](const std::string& name, double got, double want) {
    if (!(std::abs(got - want) <= kMetricTolerance)) bad.push_back(name + "=" + num(got, 12));
  };
  using V = std::vector<TokenSeq>;
  near("bleu identity", bleu(V{w("abcd")}, V{w("abcd")}, 2), 1.0);
  near("bleu1 abc/abd", bleu(V{w("abc")}, V{w("abd")}, 1), 2.0 / 3.0);
  near("bleu1 clipping", bleu(V{w("aa")}, V{w("a")}, 1), 0.5);
  // 2-gram precision 1/2 at equal lengths: sqrt(2/3 * 1/2).
  near("bleu2 abc/abd", bleu(V{w("abc")}, V{w("abd")}, 2), std::sqrt(2.0 / 3.0 * 0.5));
  // Short candidate: BP = exp(1 - 3/2).
  near("bleu1 brevity", bleu(V{w("ab")}, V{w("abc")}, 1), std::exp(1.0 - 1.5));
  near("distinct1 [ab, ab]", distinct_n(V{w("ab"), w("ab")}, 1), 0.5);
  near("distinct2 [ab, ab]", distinct_n(V{w("ab"), w("ab")}, 2), 0.5);
  near("distinct1 unique", distinct_n(V{w("abc"), w("def")}, 1), 1.0);
  near("ooc subset", out_of_context_ratio(V{w("ab")}, w("ba")), 0.0);
  near("ooc disjoint", out_of_context_ratio(V{w("ab")}, w("cd")), 1.0);
  near("ooc a b / a c c", out_of_context_ratio(V{w("ab")}, w("acc")), 2.0 / 3.0);

  // Hand-set 2-d vectors: a = (1,0), b = (0,1), c = (1,1).
  Tensor table(Tensor::Shape{kW0 + 3, 2});
  table.at(kW0, 0) = 1.0;
  table.at(kW0 + 1, 1) = 1.0;
  table.at(kW0 + 2, 0) = table.at(kW0 + 2, 1) = 1.0;
  const WordVectors vec(table);
  const auto same = embedding_scores(w("ac"), w("ac"), vec);
  const auto orthogonal = embedding_scores(w("a"), w("b"), vec);
  const auto hand = embedding_scores(w("ab"), w("ca"), vec);
  if (!same || !orthogonal || !hand) {
    bad.push_back("embedding pair skipped");
  } else {
    for (int k = 0; k < 3; ++k) {
      near("embedding identity", (*same)[k], 1.0);
      near("embedding orthogonal", (*orthogonal)[k], 0.0);
    }
    near("average", (*hand)[0], 0.75 / std::sqrt(0.5 * 1.25));
    near("extrema", (*hand)[1], 1.0);
    near("greedy", (*hand)[2], (1.0 + 1.0 / std::sqrt(2.0)) / 2.0);
  }
  const auto skipped = embedding_metrics(V{w("a"), {Vocabulary::kUnk}}, V{w("a"), w("a")}, vec);
  if (skipped.pairs != 1 || skipped.skipped != 1) bad.push_back("skip count");

  Rng rng(606);
  std::size_t out_of_range = 0;
  for (std::size_t i = 0; i < kFuzzInputs; ++i) {
    V responses(1 + rng.index(5));
    for (auto& r : responses) r = random_tokens(rng, 1 + rng.index(8), 0, 6);
    V context(rng.index(3));
    for (auto& c : context) c = random_tokens(rng, 8, 0, 5);
    const TokenSeq resp = random_tokens(rng, 10, 1, 6);
    for (double v : {distinct_n(responses, 1), distinct_n(responses, 2), out_of_context_ratio(context, resp)}) {
      out_of_range += !(v >= 0.0 && v <= 1.0);
    }
  }
  if (out_of_range) bad.push_back(std::to_string(out_of_range) + " fuzzed values outside [0, 1]");
  std::string detail = bad.empty() ? "all hand examples within " + num(kMetricTolerance) + ", " +
                                         std::to_string(kFuzzInputs) + " fuzzed inputs bounded"
                                   : "";
  for (const auto& b : bad) detail += b + "; ";
  return {bad.empty(), detail};
}

Outcome classifier_small_set() {
  // The first dialogues of the toy world cut to exactly 20 utterances.
  Corpus raw = generate_toy_corpus(707, 10, default_toy_world(), "cap");
  Corpus set;
  std::size_t n = 0;
  for (auto& d : raw) {
    if (n >= kCapacityUtterances) break;
    if (d.turns.size() > kCapacityUtterances - n) d.turns.resize(kCapacityUtterances - n);
    n += d.turns.size();
    set.push_back(d);
  }
  const Vocabulary vocab = build_vocab(set, 1000);
  tokenize_corpus(set, vocab);
  ClassifierConfig cc;
  cc.word_dim = cc.hidden = cc.mlp_hidden = 16;
  cc.act_dim = 8;
  ActClassifier model(vocab.size(), cc, 7);
  ClassifierTrainConfig tc;
  tc.max_epochs = kCapacityEpochs;
  tc.batch_size = 4;
  std::optional<std::size_t> reached;
  double best = 0.0;
  train_classifier(model, set, nullptr, tc, [&](const ClassifierEpoch& e) {
    best = std::max(best, e.train_accuracy);
    if (!reached && e.train_accuracy >= kClassifierAccuracy) reached = e.epoch;
  });
  return {reached.has_value(), std::to_string(n) + " utterances, best train acc " + num(best) +
                                   (reached ? ", reached at epoch " + std::to_string(*reached) : "")};
}

// ---------------------------------------------------------------------------

struct PipelineRun {
  double total_seconds = 0.0;
  std::map<std::string, double> stage_seconds;
  std::array<double, 3> tag_accuracy{};
  SimulationResult sl_sim, rl_sim;
  EvalResult sl_eval, rl_eval;
  std::string sl_metrics, rl_metrics;
};

PipelineRun run_pipeline(const PipelineConfig& cfg, const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const WorkDir work{dir};
  std::ofstream log(dir / "pipeline.log");
  PipelineRun run;
  const auto t_all = Clock::now();
  auto timed = [&](const std::string& name, auto fn) {
    const auto t0 = Clock::now();
    log << "== " << name << '\n';
    fn();
    run.stage_seconds[name] = seconds_since(t0);
    std::cout << "  " << name << " " << num(run.stage_seconds[name], 3) << "s" << std::endl;
  };
  timed("gen-corpus", [&] { run_gen_corpus(cfg, work, log); });
  timed("train-classifier", [&] { run_train_classifier(cfg, work, log); });
  timed("tag", [&] { run.tag_accuracy = run_tag(cfg, work, log); });
  timed("train-sl", [&] { run_train_sl(cfg, work, log); });
  timed("train-matcher", [&] { run_train_matcher(cfg, work, log); });
  timed("train-rl", [&] { run_train_rl(cfg, work, log); });
  timed("simulate sl", [&] { run.sl_sim = run_simulate(cfg, work, "sl", kEngagementEpisodes, log); });
  timed("simulate rl", [&] { run.rl_sim = run_simulate(cfg, work, "rl", kEngagementEpisodes, log); });
  timed("eval sl", [&] { run.sl_eval = run_eval(cfg, work, "sl", log); });
  timed("eval rl", [&] { run.rl_eval = run_eval(cfg, work, "rl", log); });
  run.total_seconds = seconds_since(t_all);
  std::ifstream a(work.metrics_json("sl")), b(work.metrics_json("rl"));
  std::ostringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  run.sl_metrics = sa.str();
  run.rl_metrics = sb.str();
  return run;
}

Outcome engagement(const PipelineConfig& cfg, const PipelineRun& run) {
  Rng rng(stage_seed(cfg, SeedStream::kEval));
  const auto ci = bootstrap_mean_difference(run.rl_sim.lengths, run.sl_sim.lengths, kBootstrapResamples, rng);
  const double secs = run.stage_seconds.at("train-rl") + run.stage_seconds.at("simulate sl") +
                      run.stage_seconds.at("simulate rl");
  const bool ok = ci.estimate > 0.0 && ci.lower > 0.0 && secs < kEngagementBudgetSeconds;
  return {ok, "SL " + num(run.sl_sim.engagement.mean_length) + " -> RL " + num(run.rl_sim.engagement.mean_length) +
                  " over " + std::to_string(kEngagementEpisodes) + " episodes, diff " + num(ci.estimate) +
                  " 95% CI [" + num(ci.lower) + ", " + num(ci.upper) + "], " + num(secs, 3) + "s"};
}

Outcome classifier_capacity(const Outcome& small, double small_seconds, const PipelineRun& run) {
  const double held_out = run.tag_accuracy[2];
  const double secs = small_seconds + run.stage_seconds.at("train-classifier") + run.stage_seconds.at("tag");
  const bool ok = small.pass && held_out >= kClassifierAccuracy && secs < kClassifierBudgetSeconds;
  return {ok, small.detail + "; held-out tag acc " + num(held_out) + "; " + num(secs, 3) + "s"};
}

Outcome diversity(const PipelineRun& run) {
  const ActConditioning& a = run.sl_eval.acts;
  const double cms = a.distinct1[act_index(DialogueAct::kCmS)];
  const double css_len = a.mean_length[act_index(DialogueAct::kCsS)];
  const double cmq_len = a.mean_length[act_index(DialogueAct::kCmQ)];
  const bool ok = a.contexts == kDiversityContexts && a.distinct1_pooled > cms && css_len >= cmq_len;
  return {ok, std::to_string(a.contexts) + " contexts, distinct-1 all acts " + num(a.distinct1_pooled) +
                  " vs CM.S " + num(cms) + ", mean length CS.S " + num(css_len) + " vs CM.Q " + num(cmq_len)};
}

Outcome reproducibility(const PipelineRun& a, const PipelineRun& b) {
  const bool same = a.rl_metrics == b.rl_metrics && a.sl_metrics == b.sl_metrics && !a.rl_metrics.empty();
  const bool fast = a.total_seconds < kPipelineBudgetSeconds && b.total_seconds < kPipelineBudgetSeconds;
  return {same && fast, std::string("metric JSON ") + (same ? "byte-identical" : "DIFFERS") + ", runs took " +
                            num(a.total_seconds, 4) + "s and " + num(b.total_seconds, 4) + "s"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::string work_dir = "acceptance_work";
  std::string config_dir = "configs";
  std::vector<std::string> only;
  app.add_option("--work-dir", work_dir, "Scratch directory for pipeline runs");
  app.add_option("--configs", config_dir, "Directory holding toy.cfg");
  app.add_option("--only", only, "Run only the named criteria")->take_all();
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::string> pipeline_criteria = {"classifier-capacity", "engagement", "diversity",
                                                      "reproducibility"};
  auto selected = [&](const std::string& name) {
    return only.empty() || std::find(only.begin(), only.end(), name) != only.end();
  };
  int failures = 0;
  auto report = [&](const std::string& name, const Outcome& o, double secs) {
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << " [" << num(secs, 3) << "s]"
              << std::endl;
    failures += !o.pass;
  };
  auto timed = [&](const std::string& name, auto fn) {
    if (!selected(name)) return;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    report(name, o, seconds_since(t0));
  };

  timed("gradients", gradient_suite);
  timed("oracle-equivalence", oracle_equivalence);
  timed("reward-arithmetic", reward_arithmetic);
  timed("termination", termination_rules);
  timed("reinforce", reinforce_correctness);
  timed("metric-fidelity", metric_fidelity);

  const bool need_pipeline = std::any_of(pipeline_criteria.begin(), pipeline_criteria.end(), selected);
  if (need_pipeline) {
    try {
      PipelineConfig cfg = load_config(fs::path(config_dir) / "toy.cfg");
      cfg.validate();
      const auto t_small = Clock::now();
      const Outcome small = selected("classifier-capacity") ? classifier_small_set() : Outcome{};
      const double small_secs = seconds_since(t_small);
      std::cout << "pipeline run 1" << std::endl;
      const PipelineRun first = run_pipeline(cfg, fs::path(work_dir) / "run1");
      if (selected("classifier-capacity")) report("classifier-capacity", classifier_capacity(small, small_secs, first), small_secs);
      if (selected("engagement")) report("engagement", engagement(cfg, first), first.stage_seconds.at("train-rl"));
      if (selected("diversity")) report("diversity", diversity(first), first.stage_seconds.at("eval sl"));
      if (selected("reproducibility")) {
        std::cout << "pipeline run 2" << std::endl;
        const PipelineRun second = run_pipeline(cfg, fs::path(work_dir) / "run2");
        report("reproducibility", reproducibility(first, second), first.total_seconds + second.total_seconds);
      }
    } catch (const std::exception& e) {
      for (const auto& name : pipeline_criteria) {
        if (selected(name)) report(name, {false, std::string("pipeline threw: ") + e.what()}, 0.0);
      }
    }
  }
  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criteria failed" : "acceptance: all criteria passed")
            << std::endl;
  return failures ? 1 : 0;
}
