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

#ifndef FAIRRANK_EVALUATION_HPP_
#define FAIRRANK_EVALUATION_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairrank/data.hpp"
#include "fairrank/mf_model.hpp"

namespace fairrank {

// Which known positives are removed from a user's candidate list.
enum class Exclusion { kTrain, kTrainVal };

struct RankingResult {
  std::size_t k = 0;
  Exclusion exclusion = Exclusion::kTrain;
  std::vector<std::vector<ItemId>> lists;  // R_{u,1..k}
  std::size_t shortened_users = 0;         // users with < k candidates
};

// Top-k by (score desc, item id asc) over I minus the exclusion set.
RankingResult rank_topk(const MfParams& params, const InteractionDataset& dataset,
                        std::size_t k, Exclusion exclude);

// P(R@k | g = g_a) for each group. The denominator counts, per user, the group
// items outside `denominator_exclusion` (I \ I+_u for kTrain).
std::vector<double> prob_rsp(const RankingResult& ranking, const InteractionDataset& dataset,
                             const GroupCatalog& catalog,
                             Exclusion denominator_exclusion = Exclusion::kTrain);

// P(R@k | g = g_a, y = 1): group-wise recall@k against the test positives.
std::vector<double> prob_reo(const RankingResult& ranking, const InteractionDataset& dataset,
                             const GroupCatalog& catalog);

// Population standard deviation over mean.
double relative_std(std::span<const double> values);

// Mean per-user F1@k / NDCG@k against `relevant` (users with no relevant
// items are skipped). Uses the first k entries of each ranked list.
double f1_at_k(const RankingResult& ranking, const std::vector<std::vector<ItemId>>& relevant,
               std::size_t k);
double ndcg_at_k(const RankingResult& ranking, const std::vector<std::vector<ItemId>>& relevant,
                 std::size_t k);

inline double f1_at_k(const RankingResult& ranking, const InteractionDataset& dataset,
                      std::size_t k) {
  return f1_at_k(ranking, dataset.test_pos, k);
}
inline double ndcg_at_k(const RankingResult& ranking, const InteractionDataset& dataset,
                        std::size_t k) {
  return ndcg_at_k(ranking, dataset.test_pos, k);
}

inline constexpr std::size_t kDefaultBins = 50;
inline constexpr double kHistogramSmoothing = 1e-10;

// Jensen-Shannon divergence (natural log) between the histograms of two sample
// sets over `bins` equal-width bins spanning their joint range.
double js_divergence(std::span<const double> a, std::span<const double> b,
                     std::size_t bins = kDefaultBins);

// JS divergence between two histograms given as (unnormalised) counts.
double js_divergence_hist(std::span<const double> p_counts, std::span<const double> q_counts);

// Mean JS divergence between score distributions of random user pairs; each
// user is represented by its scores over I \ I+_u. sample_pairs == 0 uses
// every pair.
double user_divergence(const MfParams& params, const InteractionDataset& dataset,
                       std::size_t sample_pairs = 1000, std::uint64_t seed = 0,
                       std::size_t bins = kDefaultBins);

enum class DivergenceMode {
  kAll,       // user-item pairs not in the training set
  kPositive,  // user-item pairs in the test set
};

// Mean pairwise JS divergence between the per-group score distributions.
double group_divergence(const MfParams& params, const InteractionDataset& dataset,
                        const GroupCatalog& catalog, DivergenceMode mode,
                        std::size_t bins = kDefaultBins);

struct EvalOptions {
  std::vector<std::size_t> ks{5, 10, 15};
  std::size_t user_pairs = 1000;
  std::size_t bins = kDefaultBins;
  std::uint64_t seed = 0;
  // Candidate exclusion for the quality and REO ranking.
  Exclusion exclusion = Exclusion::kTrainVal;
};

struct FairnessReport {
  std::vector<std::size_t> ks;
  std::vector<std::string> group_names;
  std::map<std::size_t, std::vector<double>> prob_rsp;  // k -> per-group
  std::map<std::size_t, std::vector<double>> prob_reo;
  std::map<std::size_t, double> rsp;
  std::map<std::size_t, double> reo;
  std::map<std::size_t, double> f1;
  std::map<std::size_t, double> ndcg;
  double js_user = 0.0;
  double js_group_all = 0.0;
  double js_group_pos = 0.0;
  std::vector<std::size_t> group_items;
  std::vector<std::size_t> group_feedback;
  std::vector<double> feedback_ratio;
  double feedback_ratio_rsd = 0.0;
  std::string config_hash;

  nlohmann::ordered_json to_json() const;
  static FairnessReport from_json(const nlohmann::json& j);
  // Plot-ready rows: k, metric, model, value.
  void write_tsv(std::ostream& out, const std::string& model) const;
};

FairnessReport evaluate(const MfParams& params, const InteractionDataset& dataset,
                        const GroupCatalog& catalog, const EvalOptions& options);

}  // namespace fairrank

#endif  // FAIRRANK_EVALUATION_HPP_
