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


#include "dagm/pipeline.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "dagm/error.hpp"
#include "dagm/toyworld.hpp"
#include "json.hpp"

namespace dagm {

namespace fs = std::filesystem;

fs::path WorkDir::corpus(const std::string& split) const { return root / "corpus" / (split + ".jsonl"); }
fs::path WorkDir::corpus_stats() const { return root / "corpus" / "stats.json"; }
fs::path WorkDir::tagged(const std::string& split) const { return root / "tagged" / (split + ".jsonl"); }
fs::path WorkDir::model(const std::string& name) const { return root / "models" / (name + ".dagm"); }
fs::path WorkDir::log(const std::string& name) const { return root / "logs" / name; }
fs::path WorkDir::transcripts(const std::string& model) const {
  return root / "simulate" / (model + "_transcripts.jsonl");
}
fs::path WorkDir::engagement(const std::string& model) const {
  return root / "simulate" / (model + "_engagement.json");
}
fs::path WorkDir::metrics_json(const std::string& model) const {
  return root / "eval" / (model + "_metrics.json");
}
fs::path WorkDir::metrics_csv(const std::string& model) const {
  return root / "eval" / (model + "_metrics.csv");
}
fs::path WorkDir::act_report(const std::string& model) const {
  return root / "eval" / (model + "_acts.json");
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

void save(const ModelBundle& bundle, const fs::path& path) {
  fs::create_directories(path.parent_path());
  save_bundle(bundle, path);
}

template <typename T>
const T& need(const std::optional<T>& part, const char* what, const fs::path& path) {
  if (!part) throw DataError(path.string() + " has no " + what);
  return *part;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

// Dialogue tokens and acts as a policy session.
Session to_session(const Dialogue& d, std::size_t turns) {
  Session s;
  for (std::size_t k = 0; k < turns; ++k) {
    auto act = d.turns[k].effective_act();
    if (!act) throw DataError("turn " + std::to_string(k) + " of " + d.id + " has no act");
    s.push_back({d.turns[k].tokens, *act});
  }
  return s;
}

TokenSeq top_response(const Generator& gen, DialogueAct act, const Session& ctx, std::size_t beam) {
  std::span<const TokenId> u1, u2;
  if (!ctx.empty()) u1 = ctx.back().tokens;
  if (ctx.size() >= 2) u2 = ctx[ctx.size() - 2].tokens;
  for (auto& r : gen.beam_search(act, u1, u2, beam)) {
    if (!r.tokens.empty()) return r.tokens;
  }
  return {Vocabulary::kUnk};
}

}  // namespace

Corpus load_tokenized(const fs::path& path, const Vocabulary& vocab) {
  Corpus c = read_corpus(path);
  tokenize_corpus(c, vocab);
  return c;
}

void run_gen_corpus(const PipelineConfig& cfg, const WorkDir& work, std::ostream& log) {
  ToyWorldConfig world = default_toy_world();
  if (cfg.switch_mass) world = with_switch_mass(world, *cfg.switch_mass);
  const std::array<std::size_t, 3> sizes = {cfg.train_dialogues, cfg.valid_dialogues, cfg.test_dialogues};
  const std::uint64_t base = stage_seed(cfg, SeedStream::kCorpus);
  nlohmann::ordered_json stats;
  for (std::size_t i = 0; i < kSplits.size(); ++i) {
    Corpus c = generate_toy_corpus(mix_seed(base, i), sizes[i], world, kSplits[i]);
    fs::create_directories(work.corpus(kSplits[i]).parent_path());
    write_corpus(work.corpus(kSplits[i]), c);
    const CorpusStats s = corpus_stats(c);
    stats[kSplits[i]] = nlohmann::ordered_json::parse(stats_to_json(s));
    log << kSplits[i] << ": " << s.dialogues << " dialogues, " << s.utterances << " utterances, "
        << fmt(s.avg_turns()) << " turns per dialogue\n";
  }
  write_text(work.corpus_stats(), stats.dump(2) + "\n");
}

ClassifierStageResult run_train_classifier(const PipelineConfig& cfg, const WorkDir& work,
                                           std::ostream& log) {
  Corpus raw_train = read_corpus(work.corpus("train"));
  Vocabulary vocab = build_vocab(raw_train, cfg.max_vocab);
  tokenize_corpus(raw_train, vocab);
  const Corpus valid = load_tokenized(work.corpus("valid"), vocab);
  const Corpus test = load_tokenized(work.corpus("test"), vocab);

  const std::uint64_t seed = stage_seed(cfg, SeedStream::kClassifier);
  ModelBundle bundle;
  bundle.vocab = vocab;
  ActClassifier& model = bundle.classifier.emplace(vocab.size(), cfg.classifier, seed);
  if (!cfg.classifier_embeddings.empty()) {
    std::ifstream in(cfg.classifier_embeddings);
    if (!in) throw Error("cannot read embeddings " + cfg.classifier_embeddings);
    const std::size_t found = load_text_embeddings(in, vocab, model.params().value(model.embedding()));
    log << "loaded " << found << " word vectors\n";
  }
  ClassifierTrainConfig tc = cfg.classifier_train;
  tc.seed = mix_seed(seed, 1);
  tc.optimizer = cfg.optimizer;
  ClassifierStageResult result;
  result.training = train_classifier(model, raw_train, &valid, tc, [&log](const ClassifierEpoch& e) {
    log << "epoch " << e.epoch << " loss " << fmt(e.train_loss) << " train_acc "
        << fmt(e.train_accuracy);
    if (e.valid_accuracy) log << " valid_acc " << fmt(*e.valid_accuracy);
    log << '\n';
  });
  bundle.round_to_float();
  result.test_accuracy = evaluate_classifier(model, test);
  log << "best epoch " << result.training.best_epoch << ", test accuracy " << fmt(result.test_accuracy)
      << '\n';
  bundle.config_echo = config_to_ini(cfg);
  save(bundle, work.model("classifier"));
  return result;
}

std::array<double, 3> run_tag(const PipelineConfig&, const WorkDir& work, std::ostream& log) {
  const ModelBundle bundle = load_bundle(work.model("classifier"));
  const ActClassifier& model = need(bundle.classifier, "classifier", work.model("classifier"));
  std::array<double, 3> acc{};
  for (std::size_t i = 0; i < kSplits.size(); ++i) {
    Corpus c = load_tokenized(work.corpus(kSplits[i]), bundle.vocab);
    tag_corpus(c, model);
    std::vector<DialogueAct> predicted;
    std::vector<ActDistribution> gold;
    for (const auto& d : c) {
      for (const auto& u : d.turns) {
        if (!u.gold) continue;
        predicted.push_back(*u.act);
        gold.push_back(*u.gold);
      }
    }
    acc[i] = gold.empty() ? 0.0 : prediction_accuracy(predicted, gold);
    fs::create_directories(work.tagged(kSplits[i]).parent_path());
    write_corpus(work.tagged(kSplits[i]), c);
    log << kSplits[i] << ": tag accuracy " << fmt(acc[i]) << '\n';
  }
  return acc;
}

std::vector<SupervisedEpoch> run_train_sl(const PipelineConfig& cfg, const WorkDir& work,
                                          std::ostream& log) {
  ModelBundle bundle = load_bundle(work.model("classifier"));
  const Corpus train = load_tokenized(work.tagged("train"), bundle.vocab);
  const Corpus valid = load_tokenized(work.tagged("valid"), bundle.vocab);
  PolicyNet& policy = bundle.policy.emplace(bundle.vocab.size(), cfg.policy,
                                            stage_seed(cfg, SeedStream::kPolicy));
  Generator& gen = bundle.generator.emplace(bundle.vocab.size(), cfg.generator,
                                            stage_seed(cfg, SeedStream::kGenerator));
  SupervisedConfig sc = cfg.supervised;
  sc.seed = stage_seed(cfg, SeedStream::kSupervised);
  sc.optimizer = cfg.optimizer;
  std::ostringstream csv;
  csv << "epoch,policy_nll,generator_nll,valid_policy_nll,valid_generator_nll\n" << std::setprecision(10);
  auto curve = train_supervised(policy, gen, train, &valid, sc, [&](const SupervisedEpoch& e) {
    log << "epoch " << e.epoch << " policy_nll " << fmt(e.policy_loss) << " generator_nll "
        << fmt(e.generator_loss);
    if (e.valid_policy_loss) log << " valid_policy_nll " << fmt(*e.valid_policy_loss);
    if (e.valid_generator_loss) log << " valid_generator_nll " << fmt(*e.valid_generator_loss);
    log << '\n';
    csv << e.epoch << ',' << e.policy_loss << ',' << e.generator_loss << ','
        << e.valid_policy_loss.value_or(0.0) << ',' << e.valid_generator_loss.value_or(0.0) << '\n';
  });
  bundle.round_to_float();
  bundle.config_echo = config_to_ini(cfg);
  save(bundle, work.model("sl"));
  write_text(work.log("sl.csv"), csv.str());
  return curve;
}

std::vector<MatcherEpoch> run_train_matcher(const PipelineConfig& cfg, const WorkDir& work,
                                            std::ostream& log) {
  const ModelBundle sl = load_bundle(work.model("classifier"));
  const Corpus train = load_tokenized(work.tagged("train"), sl.vocab);
  const Corpus valid = load_tokenized(work.tagged("valid"), sl.vocab);
  ModelBundle bundle;
  bundle.vocab = sl.vocab;
  Matcher& m = bundle.matcher.emplace(sl.vocab.size(), cfg.matcher, stage_seed(cfg, SeedStream::kMatcher));
  MatcherTrainConfig mt = cfg.matcher_train;
  mt.seed = stage_seed(cfg, SeedStream::kMatcherTrain);
  mt.optimizer = cfg.optimizer;
  std::ostringstream csv;
  csv << "epoch,train_loss,valid_auc\n" << std::setprecision(10);
  auto curve = train_matcher(m, train, &valid, mt, [&](const MatcherEpoch& e) {
    log << "epoch " << e.epoch << " loss " << fmt(e.train_loss);
    if (e.valid_auc) log << " valid_auc " << fmt(*e.valid_auc);
    log << '\n';
    csv << e.epoch << ',' << e.train_loss << ',' << e.valid_auc.value_or(0.0) << '\n';
  });
  bundle.round_to_float();
  bundle.config_echo = config_to_ini(cfg);
  save(bundle, work.model("matcher"));
  write_text(work.log("matcher.csv"), csv.str());
  return curve;
}

std::vector<RlIteration> run_train_rl(const PipelineConfig& cfg, const WorkDir& work, std::ostream& log) {
  ModelBundle bundle = load_bundle(work.model("sl"));
  ModelBundle mb = load_bundle(work.model("matcher"));
  if (!(mb.vocab == bundle.vocab)) throw DataError("matcher and SL bundles use different vocabularies");
  need(bundle.policy, "policy", work.model("sl"));
  const Generator& gen = need(bundle.generator, "generator", work.model("sl"));
  bundle.matcher = need(mb.matcher, "matcher", work.model("matcher"));
  const Corpus train = load_tokenized(work.tagged("train"), bundle.vocab);

  NetworkGenerator responder(gen, cfg.rl.top_k, cfg.rl_beam);
  NetworkScorer scorer(*bundle.matcher);
  Rng rng(stage_seed(cfg, SeedStream::kRl));
  auto curve = train_rl(*bundle.policy, responder, scorer, train, cfg.rl, rng, [&log](const RlIteration& r) {
    log << "iteration " << r.iteration << " reward " << fmt(r.mean_reward) << " length "
        << fmt(r.mean_length) << '\n';
  });
  bundle.round_to_float();
  bundle.config_echo = config_to_ini(cfg);
  save(bundle, work.model("rl"));
  std::ostringstream csv;
  write_learning_curve(csv, curve);
  write_text(work.log("rl_curve.csv"), csv.str());
  return curve;
}

SimulationResult run_simulate(const PipelineConfig& cfg, const WorkDir& work, const std::string& model,
                              std::size_t episodes, std::ostream& log) {
  const ModelBundle bundle = load_bundle(work.model(model));
  const PolicyNet& policy = need(bundle.policy, "policy", work.model(model));
  const Generator& gen = need(bundle.generator, "generator", work.model(model));
  const Corpus test = load_tokenized(work.tagged("test"), bundle.vocab);
  NetworkPolicy pol(policy);
  NetworkGenerator responder(gen, cfg.rl.top_k, cfg.rl_beam);
  const std::uint64_t base = stage_seed(cfg, SeedStream::kSimulate);
  SimulationResult result;
  for (std::size_t e = 0; e < episodes; ++e) {
    Rng rng(mix_seed(base, e));
    const Session opening = sample_opening(test, rng);
    const RolloutRecord rec = simulate_dialogue(pol, responder, opening, cfg.rl, SelectMode::kSample, rng);
    result.lengths.push_back(static_cast<double>(rec.length()));
    result.transcripts.push_back(rollout_to_dialogue(rec, bundle.vocab, model + "-" + std::to_string(e + 1)));
  }
  result.engagement = engagement_report(result.transcripts);
  fs::create_directories(work.transcripts(model).parent_path());
  write_corpus(work.transcripts(model), result.transcripts);
  write_text(work.engagement(model), engagement_to_json(result.engagement));
  log << model << ": " << episodes << " episodes, mean length " << fmt(result.engagement.mean_length)
      << ", with a switch " << fmt(result.engagement.switch_fraction) << '\n';
  return result;
}

std::vector<EvalExample> eval_examples(const Corpus& test, std::size_t limit) {
  std::vector<EvalExample> out;
  for (const auto& d : test) {
    if (out.size() >= limit) break;
    if (d.turns.size() < 2) continue;
    out.push_back({to_session(d, d.turns.size() - 1), d.turns.back().tokens});
  }
  return out;
}

ActConditioning act_conditioning(const Generator& generator, std::span<const EvalExample> examples,
                                 std::size_t beam) {
  if (examples.empty()) throw EmptyInputError("no evaluation contexts");
  ActConditioning out;
  out.contexts = examples.size();
  std::vector<TokenSeq> pooled;
  for (DialogueAct a : kAllActs) {
    std::vector<TokenSeq> responses;
    for (const auto& ex : examples) responses.push_back(top_response(generator, a, ex.context, beam));
    out.mean_length[act_index(a)] = mean_length(responses);
    out.distinct1[act_index(a)] = distinct_n(responses, 1);
    pooled.insert(pooled.end(), responses.begin(), responses.end());
  }
  out.distinct1_pooled = distinct_n(pooled, 1);
  return out;
}

std::string act_conditioning_json(const ActConditioning& acts) {
  nlohmann::ordered_json j;
  j["contexts"] = acts.contexts;
  j["distinct1_pooled"] = acts.distinct1_pooled;
  nlohmann::ordered_json per;
  for (DialogueAct a : kAllActs) {
    per[std::string(act_name(a))] = {{"mean_length", acts.mean_length[act_index(a)]},
                                     {"distinct1", acts.distinct1[act_index(a)]}};
  }
  j["acts"] = per;
  return j.dump(2) + "\n";
}

EvalResult run_eval(const PipelineConfig& cfg, const WorkDir& work, const std::string& model,
                    std::ostream& log) {
  const ModelBundle bundle = load_bundle(work.model(model));
  const PolicyNet& policy = need(bundle.policy, "policy", work.model(model));
  const Generator& gen = need(bundle.generator, "generator", work.model(model));
  const Corpus test = load_tokenized(work.tagged("test"), bundle.vocab);
  const auto examples = eval_examples(test, cfg.eval_contexts);
  if (examples.empty()) throw EmptyInputError("test split has no dialogue with two turns");

  ResponseSet set;
  for (const auto& ex : examples) {
    std::vector<TokenSeq> ctx;
    for (const auto& t : ex.context) ctx.push_back(t.tokens);
    set.contexts.push_back(std::move(ctx));
    const DialogueAct act = policy.act_distribution(ex.context).argmax();
    set.candidates.push_back(top_response(gen, act, ex.context, cfg.eval_beam));
    set.references.push_back(ex.reference);
  }
  WordVectors vectors(gen.params().value(gen.embedding()));
  EvalResult result;
  result.report = evaluate_responses(set, vectors);
  if (fs::exists(work.transcripts(model))) {
    const Corpus transcripts = read_corpus(work.transcripts(model));
    result.report.engagement = engagement_report(transcripts);
  }
  result.acts = act_conditioning(gen, examples, cfg.eval_beam);

  write_text(work.metrics_json(model), result.report.to_json());
  write_text(work.metrics_csv(model), MetricReport::csv_header() + "\n" + result.report.csv_row() + "\n");
  write_text(work.act_report(model), act_conditioning_json(result.acts));
  log << model << ": " << result.report.examples << " examples, bleu1 " << fmt(result.report.bleu1)
      << ", bleu2 " << fmt(result.report.bleu2) << ", distinct1 " << fmt(result.report.distinct1)
      << ", distinct2 " << fmt(result.report.distinct2) << '\n';
  return result;
}

}  // namespace dagm
