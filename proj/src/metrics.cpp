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


#include "dagm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "dagm/error.hpp"
#include "dagm/tape.hpp"
#include "json.hpp"

namespace dagm {

namespace {

using NGram = std::vector<TokenId>;

std::map<NGram, std::size_t> ngram_counts(std::span<const TokenId> s, std::size_t n) {
  std::map<NGram, std::size_t> counts;
  if (s.size() < n) return counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++counts[NGram(s.begin() + i, s.begin() + i + n)];
  return counts;
}

}  // namespace

double bleu(std::span<const TokenSeq> candidates, std::span<const TokenSeq> references,
            std::size_t n) {
  if (candidates.empty()) throw DataError("bleu: empty corpus");
  if (candidates.size() != references.size()) throw DataError("bleu: candidate/reference count mismatch");
  if (n == 0) throw DataError("bleu: n must be at least 1");
  double log_sum = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    std::size_t matched = 0, total = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const auto cand = ngram_counts(candidates[i], k);
      const auto ref = ngram_counts(references[i], k);
      for (const auto& [gram, count] : cand) {
        total += count;
        auto it = ref.find(gram);
        if (it != ref.end()) matched += std::min(count, it->second);
      }
    }
    const double p = matched == 0 ? kBleuEpsilon
                                  : static_cast<double>(matched) / static_cast<double>(total);
    log_sum += std::log(p);
  }
  std::size_t c = 0, r = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    c += candidates[i].size();
    r += references[i].size();
  }
  if (c == 0) return 0.0;
  const double bp = c > r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
  return bp * std::exp(log_sum / static_cast<double>(n));
}

double distinct_n(std::span<const TokenSeq> responses, std::size_t n) {
  if (n == 0) throw DataError("distinct_n: n must be at least 1");
  std::set<NGram> unique;
  std::size_t total = 0;
  for (const auto& r : responses) {
    if (r.size() < n) continue;
    for (std::size_t i = 0; i + n <= r.size(); ++i) {
      unique.emplace(r.begin() + i, r.begin() + i + n);
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(unique.size()) / static_cast<double>(total);
}

double out_of_context_ratio(std::span<const TokenSeq> context, std::span<const TokenId> response) {
  if (response.empty()) throw DataError("out_of_context_ratio: empty response");
  std::set<TokenId> seen;
  for (const auto& turn : context) seen.insert(turn.begin(), turn.end());
  std::size_t novel = 0;
  for (TokenId t : response) novel += !seen.contains(t);
  return static_cast<double>(novel) / static_cast<double>(response.size());
}

double mean_length(std::span<const TokenSeq> responses) {
  if (responses.empty()) return 0.0;
  std::size_t total = 0;
  for (const auto& r : responses) total += r.size();
  return static_cast<double>(total) / static_cast<double>(responses.size());
}

WordVectors::WordVectors(Tensor table, bool skip_reserved)
    : table_(std::move(table)), skip_reserved_(skip_reserved) {
  if (table_.shape().size() != 2) throw DimensionError("word vectors must be a matrix");
  dim_ = table_.shape()[1];
}

std::optional<std::span<const double>> WordVectors::lookup(TokenId id) const {
  if (skip_reserved_ && Vocabulary::is_reserved(id)) return std::nullopt;
  if (id >= table_.shape()[0]) return std::nullopt;
  std::span<const double> row = table_.values().subspan(static_cast<std::size_t>(id) * dim_, dim_);
  if (std::all_of(row.begin(), row.end(), [](double v) { return v == 0.0; })) return std::nullopt;
  return row;
}

std::optional<std::array<double, 3>> embedding_scores(std::span<const TokenId> candidate,
                                                      std::span<const TokenId> reference,
                                                      const WordVectors& vectors) {
  auto known = [&](std::span<const TokenId> s) {
    std::vector<std::span<const double>> rows;
    for (TokenId t : s)
      if (auto v = vectors.lookup(t)) rows.push_back(*v);
    return rows;
  };
  const auto c = known(candidate), r = known(reference);
  if (c.empty() || r.empty()) return std::nullopt;
  const std::size_t d = vectors.dim();

  auto mean = [d](const std::vector<std::span<const double>>& rows) {
    std::vector<double> m(d, 0.0);
    for (const auto& row : rows)
      for (std::size_t k = 0; k < d; ++k) m[k] += row[k];
    for (double& v : m) v /= static_cast<double>(rows.size());
    return m;
  };
  auto extrema = [d](const std::vector<std::span<const double>>& rows) {
    std::vector<double> e(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
      for (const auto& row : rows) {
        const double v = row[k];
        if (std::abs(v) > std::abs(e[k]) || (std::abs(v) == std::abs(e[k]) && v > e[k])) e[k] = v;
      }
    }
    return e;
  };
  auto directed_greedy = [](const std::vector<std::span<const double>>& from,
                            const std::vector<std::span<const double>>& to) {
    double total = 0.0;
    for (const auto& a : from) {
      double best = -1.0;
      for (const auto& b : to) best = std::max(best, cosine(a, b));
      total += best;
    }
    return total / static_cast<double>(from.size());
  };
  return std::array<double, 3>{cosine(mean(c), mean(r)), cosine(extrema(c), extrema(r)),
                               0.5 * (directed_greedy(c, r) + directed_greedy(r, c))};
}

EmbeddingScores embedding_metrics(std::span<const TokenSeq> candidates,
                                  std::span<const TokenSeq> references, const WordVectors& vectors) {
  if (candidates.size() != references.size()) {
    throw DataError("embedding_metrics: candidate/reference count mismatch");
  }
  EmbeddingScores out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto s = embedding_scores(candidates[i], references[i], vectors);
    if (!s) {
      ++out.skipped;
      continue;
    }
    out.average += (*s)[0];
    out.extrema += (*s)[1];
    out.greedy += (*s)[2];
    ++out.pairs;
  }
  if (out.pairs) {
    const double n = static_cast<double>(out.pairs);
    out.average /= n;
    out.extrema /= n;
    out.greedy /= n;
  }
  return out;
}

EngagementReport engagement_report(std::span<const Dialogue> dialogues) {
  EngagementReport rep;
  rep.dialogues = dialogues.size();
  if (dialogues.empty()) return rep;
  std::size_t total = 0, with_switch = 0, with_question = 0, len_switch = 0, len_plain = 0;
  for (const auto& d : dialogues) {
    bool sw = false, q = false;
    for (const auto& u : d.turns) {
      auto a = u.effective_act();
      if (!a) continue;
      ++rep.act_counts[act_index(*a)];
      sw = sw || is_context_switch(*a);
      q = q || *a == DialogueAct::kCmQ || *a == DialogueAct::kCsQ;
    }
    total += d.turns.size();
    with_switch += sw;
    with_question += q;
    (sw ? len_switch : len_plain) += d.turns.size();
  }
  const double n = static_cast<double>(dialogues.size());
  rep.mean_length = static_cast<double>(total) / n;
  rep.switch_fraction = static_cast<double>(with_switch) / n;
  rep.question_fraction = static_cast<double>(with_question) / n;
  if (with_switch) rep.mean_length_with_switch = static_cast<double>(len_switch) / static_cast<double>(with_switch);
  if (with_switch < dialogues.size()) {
    rep.mean_length_without_switch =
        static_cast<double>(len_plain) / static_cast<double>(dialogues.size() - with_switch);
  }
  return rep;
}

BootstrapInterval bootstrap_mean_difference(std::span<const double> treatment,
                                            std::span<const double> control, std::size_t resamples,
                                            Rng& rng, double level) {
  if (treatment.empty() || control.empty()) throw DataError("bootstrap: empty sample");
  if (resamples == 0) throw DataError("bootstrap: need at least one resample");
  if (!(level > 0.0 && level < 1.0)) throw DataError("bootstrap: level must be in (0, 1)");
  auto mean = [](std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto resample_mean = [&rng](std::span<const double> v) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[rng.index(v.size())];
    return s / static_cast<double>(v.size());
  };
  BootstrapInterval out;
  out.estimate = mean(treatment) - mean(control);
  std::vector<double> diffs(resamples);
  for (double& d : diffs) d = resample_mean(treatment) - resample_mean(control);
  std::sort(diffs.begin(), diffs.end());
  const double tail = (1.0 - level) / 2.0;
  auto quantile = [&diffs](double q) {
    const double pos = q * static_cast<double>(diffs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, diffs.size() - 1);
    return diffs[lo] + (pos - static_cast<double>(lo)) * (diffs[hi] - diffs[lo]);
  };
  out.lower = quantile(tail);
  out.upper = quantile(1.0 - tail);
  return out;
}

namespace {

nlohmann::ordered_json engagement_json(const EngagementReport& r) {
  auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  };
  nlohmann::ordered_json e;
  e["dialogues"] = r.dialogues;
  e["mean_length"] = r.mean_length;
  e["switch_fraction"] = r.switch_fraction;
  e["question_fraction"] = r.question_fraction;
  e["mean_length_with_switch"] = opt(r.mean_length_with_switch);
  e["mean_length_without_switch"] = opt(r.mean_length_without_switch);
  nlohmann::ordered_json counts;
  for (DialogueAct a : kAllActs) counts[std::string(act_name(a))] = r.act_counts[act_index(a)];
  e["act_counts"] = counts;
  return e;
}

}  // namespace

std::string engagement_to_json(const EngagementReport& report) {
  return engagement_json(report).dump(2) + "\n";
}

std::string MetricReport::to_json() const {
  nlohmann::ordered_json j;
  j["examples"] = examples;
  j["bleu1"] = bleu1;
  j["bleu2"] = bleu2;
  j["embedding_average"] = embedding.average;
  j["embedding_extrema"] = embedding.extrema;
  j["embedding_greedy"] = embedding.greedy;
  j["embedding_pairs"] = embedding.pairs;
  j["embedding_skipped"] = embedding.skipped;
  j["distinct1"] = distinct1;
  j["distinct2"] = distinct2;
  j["out_of_context"] = out_of_context;
  j["mean_response_length"] = mean_response_length;
  if (engagement) j["engagement"] = engagement_json(*engagement);
  return j.dump(2) + "\n";
}

std::string MetricReport::csv_header() {
  return "examples,bleu1,bleu2,embedding_average,embedding_extrema,embedding_greedy,distinct1,"
         "distinct2,out_of_context,mean_response_length,mean_dialogue_length";
}

std::string MetricReport::csv_row() const {
  std::ostringstream out;
  out.precision(10);
  out << examples << ',' << bleu1 << ',' << bleu2 << ',' << embedding.average << ','
      << embedding.extrema << ',' << embedding.greedy << ',' << distinct1 << ',' << distinct2 << ','
      << out_of_context << ',' << mean_response_length << ',';
  if (engagement) out << engagement->mean_length;
  return out.str();
}

MetricReport evaluate_responses(const ResponseSet& set, const WordVectors& vectors) {
  if (set.candidates.size() != set.references.size() || set.candidates.size() != set.contexts.size()) {
    throw DataError("evaluate_responses: contexts, candidates and references must align");
  }
  MetricReport rep;
  rep.examples = set.candidates.size();
  if (rep.examples == 0) throw DataError("evaluate_responses: no examples");
  rep.bleu1 = bleu(set.candidates, set.references, 1);
  rep.bleu2 = bleu(set.candidates, set.references, 2);
  rep.embedding = embedding_metrics(set.candidates, set.references, vectors);
  rep.distinct1 = distinct_n(set.candidates, 1);
  rep.distinct2 = distinct_n(set.candidates, 2);
  double ooc = 0.0;
  std::size_t scored = 0;
  for (std::size_t i = 0; i < rep.examples; ++i) {
    if (set.candidates[i].empty()) continue;
    ooc += out_of_context_ratio(set.contexts[i], set.candidates[i]);
    ++scored;
  }
  rep.out_of_context = scored ? ooc / static_cast<double>(scored) : 0.0;
  rep.mean_response_length = mean_length(set.candidates);
  return rep;
}

}  // namespace dagm
