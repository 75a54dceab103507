/*
 * Copyright 2026 The FairRank Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "fairrank/evaluation.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace fairrank {
namespace {

using testing::make_catalog;
using testing::make_dataset;

// Parameters whose score(u, i) is scores[u][i]: identity item factors.
MfParams with_scores(const std::vector<std::vector<double>>& scores) {
  const std::size_t n = scores.size(), m = scores.front().size();
  MfParams p;
  p.user_factors = RowMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  p.item_factors = RowMatrix::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t i = 0; i < m; ++i)
      p.user_factors(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(i)) = scores[u][i];
  return p;
}

RankingResult lists_of(std::vector<std::vector<ItemId>> lists, std::size_t k) {
  RankingResult r;
  r.k = k;
  r.lists = std::move(lists);
  return r;
}

TEST(RankTopk, OrdersByScore) {
  InteractionDataset ds = make_dataset(3, {{}});
  RankingResult r = rank_topk(with_scores({{0.1, 0.9, 0.5}}), ds, 2, Exclusion::kTrain);
  EXPECT_EQ(r.lists[0], (std::vector<ItemId>{1, 2}));
}

TEST(RankTopk, TiesBreakByItemId) {
  InteractionDataset ds = make_dataset(5, {{}});
  RankingResult r = rank_topk(with_scores({{0, 0, 0, 0, 0}}), ds, 3, Exclusion::kTrain);
  EXPECT_EQ(r.lists[0], (std::vector<ItemId>{0, 1, 2}));
}

TEST(RankTopk, ExclusionsAndShortLists) {
  InteractionDataset ds = make_dataset(4, {{1}}, {{3}});
  MfParams p = with_scores({{0.1, 0.9, 0.5, 0.7}});
  EXPECT_EQ(rank_topk(p, ds, 2, Exclusion::kTrain).lists[0], (std::vector<ItemId>{3, 2}));
  RankingResult r = rank_topk(p, ds, 3, Exclusion::kTrainVal);
  EXPECT_EQ(r.lists[0], (std::vector<ItemId>{2, 0}));
  EXPECT_EQ(r.shortened_users, 1u);
  EXPECT_THROW(rank_topk(p, ds, 0, Exclusion::kTrain), Error);
}

TEST(RankTopk, MatchesFullSortOracle) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    auto in = oracle::random_instance(rng);
    for (bool ex_val : {false, true}) {
      RankingResult r = rank_topk(in.params, in.dataset, in.k,
                                  ex_val ? Exclusion::kTrainVal : Exclusion::kTrain);
      EXPECT_EQ(r.lists, oracle::topk(in.params, in.dataset, in.k, ex_val)) << "trial " << t;
    }
  }
}

TEST(ProbRsp, SingleGroupClosedForm) {
  InteractionDataset ds = make_dataset(5, {{0}, {1, 2}, {4}});
  GroupCatalog c = make_catalog(1, {{0}, {0}, {0}, {0}, {0}});
  MfParams p = init_params(3, 5, 2, 1);
  RankingResult r = rank_topk(p, ds, 2, Exclusion::kTrain);
  // N k / sum_u |I \ I+_u| = 6 / (4 + 3 + 4).
  EXPECT_DOUBLE_EQ(prob_rsp(r, ds, c)[0], 6.0 / 11.0);
}

TEST(ProbRsp, HandBuiltTwoUsers) {
  // Groups A = {0, 1, 2}, B = {3, 4, 5}; user 0 trained on 0, user 1 on 3.
  InteractionDataset ds = make_dataset(6, {{0}, {3}});
  GroupCatalog c = make_catalog(2, {{0}, {0}, {0}, {1}, {1}, {1}});
  MfParams p = with_scores({{9, 5, 4, 1, 2, 3}, {0.5, 0, 0, 9, 8, 0}});
  RankingResult r = rank_topk(p, ds, 2, Exclusion::kTrain);
  ASSERT_EQ(r.lists[0], (std::vector<ItemId>{1, 2}));
  ASSERT_EQ(r.lists[1], (std::vector<ItemId>{4, 0}));
  auto probs = prob_rsp(r, ds, c);
  EXPECT_DOUBLE_EQ(probs[0], 3.0 / 5.0);
  EXPECT_DOUBLE_EQ(probs[1], 1.0 / 5.0);
}

TEST(ProbRsp, UnrankedGroupIsZeroAndEmptyGroupIsError) {
  InteractionDataset ds = make_dataset(4, {{}});
  MfParams p = with_scores({{4, 3, 2, 1}});
  RankingResult r = rank_topk(p, ds, 2, Exclusion::kTrain);
  auto probs = prob_rsp(r, ds, make_catalog(2, {{0}, {0}, {1}, {1}}));
  EXPECT_EQ(probs[1], 0.0);
  EXPECT_THROW(prob_rsp(r, ds, make_catalog(3, {{0}, {0}, {1}, {1}})), Error);
}

TEST(ProbRsp, SingleMembershipNumeratorsSumToNk) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    auto in = oracle::random_instance(rng);
    std::vector<std::vector<std::size_t>> single(in.dataset.num_items);
    for (std::size_t i = 0; i < single.size(); ++i) single[i] = {i % 2};
    GroupCatalog c = make_catalog(2, single);
    InteractionDataset ds = in.dataset;
    for (auto& v : ds.train_pos) v.clear();  // every user has >= k candidates
    for (auto& v : ds.val_pos) v.clear();
    RankingResult r = rank_topk(in.params, ds, in.k, Exclusion::kTrain);
    auto probs = prob_rsp(r, ds, c);
    const auto counts = c.group_item_counts();
    double numerators = 0.0;
    for (std::size_t a = 0; a < 2; ++a) numerators += probs[a] * counts[a] * ds.num_users;
    EXPECT_NEAR(numerators, static_cast<double>(ds.num_users * in.k), 1e-9);
  }
}

TEST(ProbReo, AllOrNothing) {
  InteractionDataset ds = make_dataset(4, {{}}, {}, {{0, 2}});
  GroupCatalog c = make_catalog(2, {{0}, {0}, {1}, {1}});
  auto all = prob_reo(lists_of({{2, 0}}, 2), ds, c);
  EXPECT_EQ(all, (std::vector<double>{1.0, 1.0}));
  auto none = prob_reo(lists_of({{1, 3}}, 2), ds, c);
  EXPECT_EQ(none, (std::vector<double>{0.0, 0.0}));
  InteractionDataset no_b = make_dataset(4, {{}}, {}, {{0}});
  EXPECT_THROW(prob_reo(lists_of({{0, 1}}, 2), no_b, c), Error);
}

TEST(ProbReo, HandBuiltThreeUsers) {
  InteractionDataset ds = make_dataset(6, {{}, {}, {}}, {}, {{0, 3}, {1, 4, 5}, {2}});
  GroupCatalog c = make_catalog(2, {{0}, {0}, {0}, {1}, {1}, {1}});
  auto probs = prob_reo(lists_of({{0, 1}, {4, 5}, {3, 4}}, 2), ds, c);
  EXPECT_DOUBLE_EQ(probs[0], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(probs[1], 2.0 / 3.0);
}

TEST(ProbReo, SingleGroupEqualsOverallRecall) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    auto in = oracle::random_instance(rng);
    GroupCatalog c = make_catalog(1, std::vector<std::vector<std::size_t>>(in.dataset.num_items, {0}));
    RankingResult r = rank_topk(in.params, in.dataset, in.k, Exclusion::kTrainVal);
    double hits = 0.0, total = 0.0;
    for (std::size_t u = 0; u < in.dataset.num_users; ++u) {
      for (ItemId i : r.lists[u]) hits += in.dataset.in_test(static_cast<UserId>(u), i);
      total += in.dataset.test_pos[u].size();
    }
    EXPECT_DOUBLE_EQ(prob_reo(r, in.dataset, c)[0], hits / total);
  }
}

TEST(ProbMetrics, MatchBruteForceOracles) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    auto in = oracle::random_instance(rng);
    RankingResult r = rank_topk(in.params, in.dataset, in.k, Exclusion::kTrain);
    auto want_rsp = oracle::rsp(r.lists, in.dataset, in.catalog);
    auto want_reo = oracle::reo(r.lists, in.dataset, in.catalog);
    auto got_rsp = prob_rsp(r, in.dataset, in.catalog);
    auto got_reo = prob_reo(r, in.dataset, in.catalog);
    for (std::size_t a = 0; a < in.catalog.num_groups(); ++a) {
      EXPECT_NEAR(got_rsp[a], want_rsp[a], 1e-12) << "trial " << t;
      EXPECT_NEAR(got_reo[a], want_reo[a], 1e-12) << "trial " << t;
    }
  }
}

TEST(RelativeStd, Basics) {
  std::vector<double> flat{3.0, 3.0, 3.0};
  EXPECT_EQ(relative_std(flat), 0.0);
  std::vector<double> two{10.0, 2.5};
  EXPECT_DOUBLE_EQ(relative_std(two), 0.6);
  std::vector<double> v{0.2, 0.5, 0.9, 1.4};
  std::vector<double> scaled;
  for (double x : v) scaled.push_back(7.3 * x);
  EXPECT_NEAR(relative_std(scaled), relative_std(v), 1e-14);
  std::vector<double> zero{1.0, -1.0};
  EXPECT_THROW(relative_std(zero), Error);
  EXPECT_THROW(relative_std(std::vector<double>{}), Error);
}

TEST(RelativeStd, UsesPopulationStd) {
  std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  // population variance 1.25, mean 2.5
  EXPECT_NEAR(relative_std(v), std::sqrt(1.25) / 2.5, 1e-15);
}

TEST(F1AtK, Examples) {
  std::vector<std::vector<ItemId>> rel{{0, 1}, {2, 3}};
  EXPECT_DOUBLE_EQ(f1_at_k(lists_of({{1, 0}, {3, 2}}, 2), rel, 2), 1.0);
  EXPECT_DOUBLE_EQ(f1_at_k(lists_of({{4, 5}, {0, 1}}, 2), rel, 2), 0.0);
  EXPECT_DOUBLE_EQ(f1_at_k(lists_of({{0, 5}, {0, 1}}, 2), rel, 2), 0.25);
  std::vector<std::vector<ItemId>> one_empty{{0}, {}};
  EXPECT_DOUBLE_EQ(f1_at_k(lists_of({{0, 1}, {0, 1}}, 2), one_empty, 2), 2 * 0.5 / 1.5);
  std::vector<std::vector<ItemId>> none{{}, {}};
  EXPECT_THROW(f1_at_k(lists_of({{0}, {0}}, 1), none, 1), Error);
}

TEST(NdcgAtK, Examples) {
  std::vector<std::vector<ItemId>> rel{{0, 1}};
  EXPECT_DOUBLE_EQ(ndcg_at_k(lists_of({{1, 0}}, 2), rel, 2), 1.0);
  EXPECT_DOUBLE_EQ(ndcg_at_k(lists_of({{2, 3}}, 2), rel, 2), 0.0);
  std::vector<std::vector<ItemId>> single{{7}};
  EXPECT_NEAR(ndcg_at_k(lists_of({{3, 7}}, 2), single, 2), 1.0 / std::log2(3.0), 1e-15);
  EXPECT_NEAR(ndcg_at_k(lists_of({{3, 7}}, 2), single, 2), 0.6309, 1e-4);
}

TEST(QualityMetrics, MatchBruteForceOracles) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    auto in = oracle::random_instance(rng);
    RankingResult r = rank_topk(in.params, in.dataset, in.k, Exclusion::kTrainVal);
    EXPECT_NEAR(f1_at_k(r, in.dataset, in.k), oracle::f1(r.lists, in.dataset.test_pos, in.k), 1e-12);
    EXPECT_NEAR(ndcg_at_k(r, in.dataset, in.k), oracle::ndcg(r.lists, in.dataset.test_pos, in.k),
                1e-12);
  }
}

TEST(JsDivergence, IdenticalDisjointAndDegenerate) {
  std::vector<double> a{0.1, 0.4, 0.4, 0.9};
  EXPECT_NEAR(js_divergence(a, a), 0.0, 1e-15);
  std::vector<double> lo{0.0, 0.1, 0.2}, hi{5.0, 5.5, 6.0};
  EXPECT_NEAR(js_divergence(lo, hi), std::log(2.0), 1e-8);
  std::vector<double> same{2.0, 2.0}, same2{2.0};
  EXPECT_EQ(js_divergence(same, same2), 0.0);
  EXPECT_THROW(js_divergence(std::vector<double>{}, a), Error);
}

TEST(JsDivergence, FourBinHistogramOracle) {
  std::vector<double> p{3, 1, 0, 4}, q{1, 1, 5, 1};
  double ps = 0, qs = 0;
  for (int b = 0; b < 4; ++b) {
    ps += p[b] + 1e-10;
    qs += q[b] + 1e-10;
  }
  double js = 0.0;
  for (int b = 0; b < 4; ++b) {
    const double pp = (p[b] + 1e-10) / ps, qq = (q[b] + 1e-10) / qs, m = 0.5 * (pp + qq);
    js += 0.5 * pp * std::log(pp / m) + 0.5 * qq * std::log(qq / m);
  }
  EXPECT_NEAR(js_divergence_hist(p, q), js, 1e-12);
  // The same histograms built from samples over [0, 4) with 4 bins.
  std::vector<double> sa{0.5, 0.5, 0.5, 1.5, 3.5, 3.5, 3.5, 4.0};
  std::vector<double> sb{0.0, 1.5, 2.5, 2.5, 2.5, 2.5, 2.5, 3.5};
  EXPECT_NEAR(js_divergence(sa, sb, 4), js, 1e-12);
}

TEST(JsDivergence, SymmetricAndBounded) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n01;
  for (int t = 0; t < 20; ++t) {
    std::vector<double> a(30 + t), b(50);
    for (auto& x : a) x = n01(rng);
    for (auto& x : b) x = n01(rng) + 0.2 * t;
    const double ab = js_divergence(a, b), ba = js_divergence(b, a);
    EXPECT_NEAR(ab, ba, 1e-12);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, std::log(2.0));
  }
}

TEST(UserDivergence, SharedEmbeddingIsZero) {
  InteractionDataset ds = make_dataset(6, {{0}, {0}, {0}});
  MfParams p = init_params(3, 6, 3, 1);
  for (int u = 1; u < 3; ++u) p.user_factors.row(u) = p.user_factors.row(0);
  EXPECT_NEAR(user_divergence(p, ds, 50, 1), 0.0, 1e-15);
}

TEST(UserDivergence, TwoUsersEqualsDirectPair) {
  InteractionDataset ds = make_dataset(30, {{0, 1}, {5}});
  MfParams p = init_params(2, 30, 4, 2);
  std::vector<double> s0, s1;
  for (ItemId i = 0; i < 30; ++i) {
    if (!ds.in_train(0, i)) s0.push_back(score(p, 0, i));
    if (!ds.in_train(1, i)) s1.push_back(score(p, 1, i));
  }
  const double direct = js_divergence(s0, s1);
  EXPECT_NEAR(user_divergence(p, ds, 10, 3), direct, 1e-12);
  EXPECT_NEAR(user_divergence(p, ds, 0, 3), direct, 1e-12);
}

TEST(UserDivergence, ReproducibleGivenSeed) {
  RawInteractions raw = load_interactions(testing::fixture("small/interactions.csv"));
  InteractionDataset ds = split(raw, {}, 1);
  MfParams p = init_params(ds.num_users, ds.num_items, 4, 4);
  const double a = user_divergence(p, ds, 200, 9);
  EXPECT_EQ(a, user_divergence(p, ds, 200, 9));
  EXPECT_GT(a, 0.0);
  EXPECT_NE(a, user_divergence(p, ds, 200, 10));
}

TEST(GroupDivergence, IdenticalGroupSamplesGiveZero) {
  // Items 0, 1 in group A and 2, 3 in B carry the same score multiset.
  InteractionDataset ds = make_dataset(4, {{}, {}}, {}, {{0, 2}, {1, 3}});
  GroupCatalog c = make_catalog(2, {{0}, {0}, {1}, {1}});
  MfParams p = with_scores({{0.3, 0.8, 0.3, 0.8}, {0.1, 0.5, 0.1, 0.5}});
  EXPECT_NEAR(group_divergence(p, ds, c, DivergenceMode::kAll), 0.0, 1e-15);
  EXPECT_NEAR(group_divergence(p, ds, c, DivergenceMode::kPositive), 0.0, 1e-15);
}

TEST(GroupDivergence, TwoGroupsIsSinglePair) {
  InteractionDataset ds = make_dataset(4, {{0}, {3}}, {}, {{1, 2}, {0, 2}});
  GroupCatalog c = make_catalog(2, {{0}, {0}, {1}, {1}});
  MfParams p = with_scores({{0.2, 0.4, 0.9, 0.1}, {0.3, 0.7, 0.6, 0.5}});
  // kAll: user 0 excludes item 0, user 1 excludes item 3.
  std::vector<double> a_all{0.4, 0.3, 0.7}, b_all{0.9, 0.1, 0.6};
  EXPECT_NEAR(group_divergence(p, ds, c, DivergenceMode::kAll), js_divergence(a_all, b_all), 1e-15);
  std::vector<double> a_pos{0.4, 0.3}, b_pos{0.9, 0.6};
  EXPECT_NEAR(group_divergence(p, ds, c, DivergenceMode::kPositive), js_divergence(a_pos, b_pos),
              1e-15);
  InteractionDataset no_b = make_dataset(4, {{0}, {3}}, {}, {{1}, {0}});
  EXPECT_THROW(group_divergence(p, no_b, c, DivergenceMode::kPositive), Error);
}

FairnessReport small_report() {
  RawInteractions raw = load_interactions(testing::fixture("small/interactions.csv"));
  GroupCatalog c = load_groups(testing::fixture("small/groups.csv"), raw.item_ids);
  InteractionDataset ds = split(raw, {}, 1);
  MfParams p = init_params(ds.num_users, ds.num_items, 4, 4);
  EvalOptions o;
  o.user_pairs = 100;
  return evaluate(p, ds, c, o);
}

TEST(Evaluate, ReportFieldsAreInRange) {
  FairnessReport r = small_report();
  EXPECT_EQ(r.ks, (std::vector<std::size_t>{5, 10, 15}));
  for (std::size_t k : r.ks) {
    for (double p : r.prob_rsp.at(k)) {
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
    }
    for (double p : r.prob_reo.at(k)) {
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
    }
    EXPECT_GE(r.rsp.at(k), 0.0);
    EXPECT_GE(r.reo.at(k), 0.0);
  }
  EXPECT_EQ(r.group_names.size(), r.feedback_ratio.size());
}

TEST(Evaluate, JsonRoundTripIsLossless) {
  FairnessReport r = small_report();
  r.config_hash = "0123456789abcdef";
  const std::string text = r.to_json().dump();
  FairnessReport back = FairnessReport::from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back.to_json().dump(), text);
  EXPECT_EQ(back.rsp, r.rsp);
  EXPECT_EQ(back.prob_reo, r.prob_reo);
  EXPECT_EQ(back.js_user, r.js_user);
  auto j = r.to_json();
  for (const char* key : {"rsp@5", "reo@15", "f1@10", "ndcg@15", "group_probs", "js_user",
                          "js_group_all", "js_group_pos", "feedback_ratio_rsd"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_THROW(FairnessReport::from_json(nlohmann::json::parse("{\"ks\": [5]}")), Error);
}

TEST(Evaluate, TsvRows) {
  FairnessReport r = small_report();
  std::ostringstream out;
  r.write_tsv(out, "BPR");
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "k\tmetric\tmodel\tvalue");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 12);
  EXPECT_NE(out.str().find("15\treo\tBPR\t"), std::string::npos);
}

}  // namespace
}  // namespace fairrank
