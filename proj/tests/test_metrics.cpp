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


#include <algorithm>
#include <cmath>

#include "dagm/error.hpp"
#include "dagm/metrics.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace dagm;

namespace {

// Words a..h map to the first non-reserved ids.
TokenSeq s(const std::string& text) {
  TokenSeq out;
  for (char c : text)
    if (c != ' ') out.push_back(static_cast<TokenId>(Vocabulary::kReservedCount + (c - 'a')));
  return out;
}

WordVectors vectors(std::vector<std::array<double, 2>> rows) {
  Tensor t(Tensor::Shape{Vocabulary::kReservedCount + rows.size(), 2});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    t.values()[(Vocabulary::kReservedCount + i) * 2] = rows[i][0];
    t.values()[(Vocabulary::kReservedCount + i) * 2 + 1] = rows[i][1];
  }
  return WordVectors(std::move(t));
}

Dialogue dialogue(std::vector<DialogueAct> acts) {
  Dialogue d;
  for (auto a : acts) {
    Utterance u;
    u.act = a;
    d.turns.push_back(u);
  }
  return d;
}

}  // namespace

TEST_CASE("bleu hand cases") {
  const std::vector<TokenSeq> abc{s("abc")}, abd{s("abd")};
  CHECK(bleu(abc, abc, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bleu(abc, abc, 2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(bleu(abc, abd, 1) - 2.0 / 3.0) < 1e-9);
  // Bigrams: ab matches, bc does not.
  CHECK(std::abs(bleu(abc, abd, 2) - std::sqrt(2.0 / 3.0 * 0.5)) < 1e-9);
  const std::vector<TokenSeq> aa{s("aa")}, a{s("a")};
  CHECK(std::abs(bleu(aa, a, 1) - 0.5) < 1e-9);
  // Short candidate: BP = exp(1 - 4/2).
  const std::vector<TokenSeq> ab{s("ab")}, abcd{s("abcd")};
  CHECK(std::abs(bleu(ab, abcd, 1) - std::exp(-1.0)) < 1e-9);
  // Corpus pooling: counts add before dividing.
  const std::vector<TokenSeq> c2{s("abc"), s("e")}, r2{s("abd"), s("e")};
  CHECK(std::abs(bleu(c2, r2, 1) - 3.0 / 4.0) < 1e-9);
  // Smoothed zero match.
  const std::vector<TokenSeq> x{s("a")}, y{s("b")};
  CHECK(std::abs(bleu(x, y, 1) - kBleuEpsilon) < 1e-15);

  CHECK_THROWS_AS(bleu({}, {}, 1), DataError);
  CHECK_THROWS_AS(bleu(abc, c2, 1), DataError);
  CHECK_THROWS_AS(bleu(abc, abd, 0), DataError);
}

TEST_CASE("bleu of a sentence with itself is one") {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    std::vector<TokenSeq> c(1 + rng.index(4));
    for (auto& t : c) {
      t.resize(2 + rng.index(6));
      for (auto& w : t) w = static_cast<TokenId>(12 + rng.index(5));
    }
    CHECK(bleu(c, c, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(bleu(c, c, 2) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("distinct_n") {
  const std::vector<TokenSeq> twice{s("ab"), s("ab")};
  CHECK(std::abs(distinct_n(twice, 1) - 0.5) < 1e-9);
  CHECK(std::abs(distinct_n(twice, 2) - 0.5) < 1e-9);
  const std::vector<TokenSeq> unique{s("abc"), s("def")};
  CHECK(distinct_n(unique, 1) == 1.0);
  CHECK(distinct_n(unique, 2) == 1.0);
  const std::vector<TokenSeq> short_only{s("a")};
  CHECK(distinct_n(short_only, 2) == 0.0);
  CHECK(distinct_n({}, 1) == 0.0);
  CHECK_THROWS_AS(distinct_n(twice, 0), DataError);
}

TEST_CASE("out_of_context_ratio") {
  const std::vector<TokenSeq> ctx{s("ab")};
  CHECK(out_of_context_ratio(ctx, s("ba")) == 0.0);
  CHECK(out_of_context_ratio(ctx, s("cd")) == 1.0);
  CHECK(std::abs(out_of_context_ratio(ctx, s("acc")) - 2.0 / 3.0) < 1e-9);
  const std::vector<TokenSeq> two{s("a"), s("c")};
  CHECK(std::abs(out_of_context_ratio(two, s("acd")) - 1.0 / 3.0) < 1e-9);
  CHECK_THROWS_AS(out_of_context_ratio(ctx, TokenSeq{}), DataError);
}

TEST_CASE("distinct and OOC stay in [0, 1] on fuzzed inputs") {
  Rng rng(2);
  auto random_seq = [&](std::size_t max_len) {
    TokenSeq t(rng.index(max_len + 1));
    for (auto& w : t) w = static_cast<TokenId>(rng.index(40));
    return t;
  };
  for (int i = 0; i < 10000; ++i) {
    std::vector<TokenSeq> rs(rng.index(4));
    for (auto& r : rs) r = random_seq(6);
    const std::size_t n = 1 + rng.index(2);
    const double d = distinct_n(rs, n);
    CHECK((d >= 0.0 && d <= 1.0));
    std::vector<TokenSeq> ctx(rng.index(3));
    for (auto& c : ctx) c = random_seq(6);
    TokenSeq resp = random_seq(6);
    resp.push_back(static_cast<TokenId>(rng.index(40)));
    const double o = out_of_context_ratio(ctx, resp);
    CHECK((o >= 0.0 && o <= 1.0));
  }
}

TEST_CASE("embedding metrics") {
  // a=(1,0) b=(0,1) c=(1,1) d=(-2,1) e=(-1,0)
  const auto wv = vectors({{1, 0}, {0, 1}, {1, 1}, {-2, 1}, {-1, 0}});

  SUBCASE("identity") {
    auto sc = embedding_scores(s("abd"), s("abd"), wv);
    REQUIRE(sc);
    for (double v : *sc) CHECK(std::abs(v - 1.0) < 1e-9);
  }
  SUBCASE("orthogonal single words") {
    auto sc = embedding_scores(s("a"), s("b"), wv);
    REQUIRE(sc);
    for (double v : *sc) CHECK(std::abs(v) < 1e-12);
  }
  SUBCASE("hand-set two-word sentences") {
    auto sc = embedding_scores(s("ab"), s("cd"), wv);
    REQUIRE(sc);
    // Means (0.5, 0.5) and (-0.5, 1).
    const double average = 0.25 / (std::sqrt(0.5) * std::sqrt(1.25));
    // Extremes (1, 1) and (-2, 1).
    const double extrema = -1.0 / (std::sqrt(2.0) * std::sqrt(5.0));
    const double r2 = 1.0 / std::sqrt(2.0);
    const double c_to_r = (r2 + r2) / 2.0;
    const double r_to_c = (r2 + 1.0 / std::sqrt(5.0)) / 2.0;
    CHECK(std::abs((*sc)[0] - average) < 1e-9);
    CHECK(std::abs((*sc)[1] - extrema) < 1e-9);
    CHECK(std::abs((*sc)[2] - (c_to_r + r_to_c) / 2.0) < 1e-9);
  }
  SUBCASE("extrema ties prefer the positive value") {
    // Extremes of "a e" are (1, 0) on a tie between 1 and -1.
    auto sc = embedding_scores(s("ae"), s("a"), wv);
    REQUIRE(sc);
    CHECK(std::abs((*sc)[1] - 1.0) < 1e-12);
  }
  SUBCASE("unknown words") {
    const TokenSeq unk{Vocabulary::kUnk, Vocabulary::kEos};
    CHECK_FALSE(embedding_scores(unk, s("a"), wv).has_value());
    // Unknown tokens are dropped, not zero-filled.
    auto sc = embedding_scores(TokenSeq{Vocabulary::kUnk, s("a")[0]}, s("a"), wv);
    REQUIRE(sc);
    CHECK(std::abs((*sc)[0] - 1.0) < 1e-12);
    const std::vector<TokenSeq> cand{s("a"), unk, s("b")}, ref{s("a"), s("a"), s("a")};
    auto m = embedding_metrics(cand, ref, wv);
    CHECK(m.pairs == 2);
    CHECK(m.skipped == 1);
    CHECK(std::abs(m.average - 0.5) < 1e-12);
  }
}

TEST_CASE("corpus metrics are permutation invariant") {
  const auto wv = vectors({{1, 0}, {0, 1}, {1, 1}, {-2, 1}, {-1, 0}, {0.5, -3}});
  Rng rng(3);
  std::vector<TokenSeq> c(30), r(30);
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (auto* t : {&c[i], &r[i]}) {
      t->resize(1 + rng.index(5));
      for (auto& w : *t) w = static_cast<TokenId>(12 + rng.index(6));
    }
  }
  std::vector<std::size_t> perm(c.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
  std::vector<TokenSeq> pc, pr;
  for (auto i : perm) {
    pc.push_back(c[i]);
    pr.push_back(r[i]);
  }
  CHECK(std::abs(bleu(c, r, 2) - bleu(pc, pr, 2)) < 1e-12);
  CHECK(std::abs(distinct_n(c, 2) - distinct_n(pc, 2)) < 1e-12);
  auto a = embedding_metrics(c, r, wv), b = embedding_metrics(pc, pr, wv);
  CHECK(std::abs(a.average - b.average) < 1e-12);
  CHECK(std::abs(a.extrema - b.extrema) < 1e-12);
  CHECK(std::abs(a.greedy - b.greedy) < 1e-12);
  for (double v : {a.average, a.extrema, a.greedy}) CHECK((v >= -1.0 && v <= 1.0));
}

TEST_CASE("engagement report") {
  using A = DialogueAct;
  std::vector<Dialogue> ds{dialogue({A::kCmS, A::kCmQ, A::kCmA, A::kCmS}),
                           dialogue({A::kCmS, A::kCsS, A::kCmS, A::kCsQ, A::kCmA, A::kOther})};
  auto rep = engagement_report(ds);
  CHECK(rep.dialogues == 2);
  CHECK(rep.mean_length == 5.0);
  CHECK(rep.switch_fraction == 0.5);
  CHECK(rep.question_fraction == 1.0);
  CHECK(rep.mean_length_with_switch == 6.0);
  CHECK(rep.mean_length_without_switch == 4.0);
  CHECK(rep.act_counts[act_index(A::kCmS)] == 4);
  CHECK(rep.act_counts[act_index(A::kCsQ)] == 1);

  std::vector<Dialogue> all_cs{dialogue({A::kCsS}), dialogue({A::kCmA, A::kCsS})};
  auto r2 = engagement_report(all_cs);
  CHECK(r2.switch_fraction == 1.0);
  CHECK_FALSE(r2.mean_length_without_switch.has_value());
  CHECK(engagement_report({}).dialogues == 0);
}

TEST_CASE("bootstrap mean difference") {
  Rng rng(4);
  const std::vector<double> five(50, 5.0), three(40, 3.0);
  auto b = bootstrap_mean_difference(five, three, 500, rng);
  CHECK(b.estimate == 2.0);
  CHECK(b.lower == 2.0);
  CHECK(b.upper == 2.0);

  std::vector<double> x, y;
  for (int i = 0; i < 200; ++i) {
    x.push_back(6.0 + rng.uniform(-2, 2));
    y.push_back(5.0 + rng.uniform(-2, 2));
  }
  Rng r1(9), r2(9);
  auto i1 = bootstrap_mean_difference(x, y, 2000, r1);
  auto i2 = bootstrap_mean_difference(x, y, 2000, r2);
  CHECK(i1.lower == i2.lower);
  CHECK(i1.lower > 0.0);
  CHECK(i1.lower < i1.estimate);
  CHECK(i1.estimate < i1.upper);
  // Swapping groups mirrors the interval.
  Rng r3(9);
  auto i3 = bootstrap_mean_difference(y, x, 2000, r3);
  CHECK(i3.upper < 0.0);
  CHECK_THROWS_AS(bootstrap_mean_difference({}, y, 10, rng), DataError);
}

TEST_CASE("metric report serialization") {
  const auto wv = vectors({{1, 0}, {0, 1}, {1, 1}});
  ResponseSet set;
  set.contexts = {{s("ab")}, {s("c"), s("a")}};
  set.candidates = {s("ab"), s("cb")};
  set.references = {s("ab"), s("ca")};
  auto rep = evaluate_responses(set, wv);
  CHECK(rep.examples == 2);
  CHECK(std::abs(rep.bleu1 - 3.0 / 4.0) < 1e-9);
  CHECK(std::abs(rep.distinct1 - 3.0 / 4.0) < 1e-12);
  CHECK(std::abs(rep.out_of_context - 0.25) < 1e-12);
  CHECK(rep.mean_response_length == 2.0);
  rep.engagement = engagement_report(std::vector<Dialogue>{dialogue({DialogueAct::kCsS})});

  const std::string js = rep.to_json();
  auto j = nlohmann::json::parse(js);
  CHECK(j["bleu1"].get<double>() == rep.bleu1);
  CHECK(j["engagement"]["switch_fraction"].get<double>() == 1.0);
  CHECK(j["engagement"]["mean_length_without_switch"].is_null());
  CHECK(j["engagement"]["act_counts"]["CS.S"].get<int>() == 1);

  auto again = evaluate_responses(set, wv);
  again.engagement = rep.engagement;
  CHECK(again.to_json() == js);
  const std::string row = rep.csv_row();
  const std::string header = MetricReport::csv_header();
  CHECK(std::count(row.begin(), row.end(), ',') == std::count(header.begin(), header.end(), ','));

  ResponseSet bad = set;
  bad.references.pop_back();
  CHECK_THROWS_AS(evaluate_responses(bad, wv), DataError);
}
