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

#include "fairrank/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>

#include <spdlog/spdlog.h>

#include "fairrank/kernels.hpp"

namespace fairrank {

namespace {

// Neumaier-compensated running sum; report values must not depend on the
// accumulation order of many small terms.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      c_ += (sum_ - t) + x;
    } else {
      c_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

RankingResult truncated(const RankingResult& r, std::size_t k) {
  RankingResult out;
  out.k = k;
  out.exclusion = r.exclusion;
  out.lists.reserve(r.lists.size());
  for (const auto& l : r.lists) {
    out.lists.emplace_back(l.begin(), l.begin() + static_cast<std::ptrdiff_t>(std::min(k, l.size())));
    if (out.lists.back().size() < k) ++out.shortened_users;
  }
  return out;
}

bool contains(const std::vector<ItemId>& sorted, ItemId i) {
  return std::binary_search(sorted.begin(), sorted.end(), i);
}

void check_ranking(const RankingResult& ranking, const InteractionDataset& dataset) {
  if (ranking.lists.size() != dataset.num_users) {
    throw Error("ranking covers " + std::to_string(ranking.lists.size()) +
                " users but the dataset has " + std::to_string(dataset.num_users));
  }
}

}  // namespace

RankingResult rank_topk(const MfParams& params, const InteractionDataset& dataset,
                        std::size_t k, Exclusion exclude) {
  if (k == 0) throw Error("rank_topk: k must be >= 1");
  if (params.num_users() != dataset.num_users || params.num_items() != dataset.num_items) {
    throw Error("rank_topk: model shape does not match the dataset");
  }
  RankingResult r;
  r.k = k;
  r.exclusion = exclude;
  r.lists = kernels::topk_lists(params, dataset, k, exclude == Exclusion::kTrainVal);
  for (const auto& l : r.lists) r.shortened_users += l.size() < k;
  if (r.shortened_users > 0) {
    spdlog::warn("rank_topk: {} users have fewer than {} candidates", r.shortened_users, k);
  }
  return r;
}

std::vector<double> prob_rsp(const RankingResult& ranking, const InteractionDataset& dataset,
                             const GroupCatalog& catalog, Exclusion denominator_exclusion) {
  check_ranking(ranking, dataset);
  const std::size_t a_count = catalog.num_groups();
  const auto group_items = catalog.group_item_counts();
  std::vector<double> num(a_count, 0.0);
  std::vector<double> den(a_count, 0.0);
  for (std::size_t u = 0; u < dataset.num_users; ++u) {
    for (ItemId i : ranking.lists[u]) {
      for (std::size_t a = 0; a < a_count; ++a) num[a] += catalog.member(i, a);
    }
    std::vector<std::size_t> excluded(a_count, 0);
    for (ItemId i : dataset.train_pos[u]) {
      for (std::size_t a = 0; a < a_count; ++a) excluded[a] += catalog.member(i, a);
    }
    if (denominator_exclusion == Exclusion::kTrainVal) {
      for (ItemId i : dataset.val_pos[u]) {
        for (std::size_t a = 0; a < a_count; ++a) excluded[a] += catalog.member(i, a);
      }
    }
    for (std::size_t a = 0; a < a_count; ++a) {
      den[a] += static_cast<double>(group_items[a] - excluded[a]);
    }
  }
  std::vector<double> p(a_count);
  for (std::size_t a = 0; a < a_count; ++a) {
    if (den[a] == 0.0) {
      throw Error("prob_rsp: group '" + catalog.group_names()[a] + "' has no candidate items");
    }
    p[a] = num[a] / den[a];
  }
  return p;
}

std::vector<double> prob_reo(const RankingResult& ranking, const InteractionDataset& dataset,
                             const GroupCatalog& catalog) {
  check_ranking(ranking, dataset);
  const std::size_t a_count = catalog.num_groups();
  std::vector<double> num(a_count, 0.0);
  std::vector<double> den(a_count, 0.0);
  for (std::size_t u = 0; u < dataset.num_users; ++u) {
    const auto& test = dataset.test_pos[u];
    for (ItemId i : ranking.lists[u]) {
      if (!contains(test, i)) continue;
      for (std::size_t a = 0; a < a_count; ++a) num[a] += catalog.member(i, a);
    }
    for (ItemId i : test) {
      for (std::size_t a = 0; a < a_count; ++a) den[a] += catalog.member(i, a);
    }
  }
  std::vector<double> p(a_count);
  for (std::size_t a = 0; a < a_count; ++a) {
    if (den[a] == 0.0) {
      throw Error("prob_reo: group '" + catalog.group_names()[a] + "' has no test positives");
    }
    p[a] = num[a] / den[a];
  }
  return p;
}

double relative_std(std::span<const double> values) {
  if (values.empty()) throw Error("relative_std: empty input");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (mean == 0.0) throw Error("relative_std: zero mean");
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / n) / mean;
}

double f1_at_k(const RankingResult& ranking, const std::vector<std::vector<ItemId>>& relevant,
               std::size_t k) {
  if (k == 0) throw Error("f1_at_k: k must be >= 1");
  CompensatedSum total;
  std::size_t users = 0;
  for (std::size_t u = 0; u < ranking.lists.size(); ++u) {
    const auto& rel = relevant[u];
    if (rel.empty()) continue;
    ++users;
    const auto& list = ranking.lists[u];
    std::size_t hits = 0;
    for (std::size_t r = 0; r < std::min(k, list.size()); ++r) hits += contains(rel, list[r]);
    const double p = static_cast<double>(hits) / static_cast<double>(k);
    const double rc = static_cast<double>(hits) / static_cast<double>(rel.size());
    total.add(p + rc > 0.0 ? 2.0 * p * rc / (p + rc) : 0.0);
  }
  if (users == 0) throw Error("f1_at_k: no user has relevant items");
  return total.value() / static_cast<double>(users);
}

double ndcg_at_k(const RankingResult& ranking, const std::vector<std::vector<ItemId>>& relevant,
                 std::size_t k) {
  if (k == 0) throw Error("ndcg_at_k: k must be >= 1");
  CompensatedSum total;
  std::size_t users = 0;
  for (std::size_t u = 0; u < ranking.lists.size(); ++u) {
    const auto& rel = relevant[u];
    if (rel.empty()) continue;
    ++users;
    const auto& list = ranking.lists[u];
    double dcg = 0.0;
    for (std::size_t r = 0; r < std::min(k, list.size()); ++r) {
      if (contains(rel, list[r])) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
    double idcg = 0.0;
    for (std::size_t r = 0; r < std::min(k, rel.size()); ++r) {
      idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
    total.add(dcg / idcg);
  }
  if (users == 0) throw Error("ndcg_at_k: no user has relevant items");
  return total.value() / static_cast<double>(users);
}

double js_divergence_hist(std::span<const double> p_counts, std::span<const double> q_counts) {
  if (p_counts.size() != q_counts.size() || p_counts.empty()) {
    throw Error("js_divergence: histograms must have the same non-zero length");
  }
  const std::size_t n = p_counts.size();
  double ps = 0.0;
  double qs = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    ps += p_counts[b] + kHistogramSmoothing;
    qs += q_counts[b] + kHistogramSmoothing;
  }
  double js = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    const double p = (p_counts[b] + kHistogramSmoothing) / ps;
    const double q = (q_counts[b] + kHistogramSmoothing) / qs;
    const double m = 0.5 * (p + q);
    js += 0.5 * p * std::log(p / m) + 0.5 * q * std::log(q / m);
  }
  return std::max(js, 0.0);
}

double js_divergence(std::span<const double> a, std::span<const double> b, std::size_t bins) {
  if (a.empty() || b.empty()) throw Error("js_divergence: empty sample set");
  if (bins == 0) throw Error("js_divergence: bins must be >= 1");
  auto [amin, amax] = std::minmax_element(a.begin(), a.end());
  auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
  const double lo = std::min(*amin, *bmin);
  const double hi = std::max(*amax, *bmax);
  if (!(hi > lo)) return 0.0;
  const double width = (hi - lo) / static_cast<double>(bins);
  auto fill = [&](std::span<const double> xs) {
    std::vector<double> h(bins, 0.0);
    for (double x : xs) {
      auto idx = static_cast<std::size_t>((x - lo) / width);
      h[std::min(idx, bins - 1)] += 1.0;
    }
    return h;
  };
  const auto ha = fill(a);
  const auto hb = fill(b);
  return js_divergence_hist(ha, hb);
}

namespace {

std::vector<double> candidate_scores(const MfParams& params, const InteractionDataset& dataset,
                                     UserId u, std::vector<double>& buf) {
  score_all(params, u, buf);
  std::vector<double> out;
  out.reserve(dataset.num_items);
  const auto& tr = dataset.train_pos[u];
  for (std::size_t i = 0; i < dataset.num_items; ++i) {
    if (!contains(tr, static_cast<ItemId>(i))) out.push_back(buf[i]);
  }
  return out;
}

}  // namespace

double user_divergence(const MfParams& params, const InteractionDataset& dataset,
                       std::size_t sample_pairs, std::uint64_t seed, std::size_t bins) {
  if (dataset.num_users < 2) throw Error("user_divergence: need at least two users");
  std::vector<std::pair<UserId, UserId>> pairs;
  if (sample_pairs == 0) {
    for (std::size_t u = 0; u < dataset.num_users; ++u) {
      for (std::size_t v = u + 1; v < dataset.num_users; ++v) {
        pairs.emplace_back(static_cast<UserId>(u), static_cast<UserId>(v));
      }
    }
  } else {
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> first(0, dataset.num_users - 1);
    std::uniform_int_distribution<std::size_t> other(0, dataset.num_users - 2);
    for (std::size_t n = 0; n < sample_pairs; ++n) {
      const auto u = first(rng);
      auto v = other(rng);
      if (v >= u) ++v;
      pairs.emplace_back(static_cast<UserId>(u), static_cast<UserId>(v));
    }
  }
  std::vector<double> js(pairs.size());
  const auto n_pairs = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel
  {
    std::vector<double> buf(dataset.num_items);
#pragma omp for schedule(static)
    for (std::ptrdiff_t p = 0; p < n_pairs; ++p) {
      const auto [u, v] = pairs[static_cast<std::size_t>(p)];
      const auto su = candidate_scores(params, dataset, u, buf);
      const auto sv = candidate_scores(params, dataset, v, buf);
      js[static_cast<std::size_t>(p)] = js_divergence(su, sv, bins);
    }
  }
  CompensatedSum total;
  for (double x : js) total.add(x);
  return total.value() / static_cast<double>(js.size());
}

double group_divergence(const MfParams& params, const InteractionDataset& dataset,
                        const GroupCatalog& catalog, DivergenceMode mode, std::size_t bins) {
  const std::size_t a_count = catalog.num_groups();
  if (a_count < 2) throw Error("group_divergence: need at least two groups");
  std::vector<std::vector<double>> samples(a_count);
  std::vector<double> buf(dataset.num_items);
  for (std::size_t u = 0; u < dataset.num_users; ++u) {
    const auto uid = static_cast<UserId>(u);
    if (mode == DivergenceMode::kAll) {
      score_all(params, uid, buf);
      const auto& tr = dataset.train_pos[u];
      for (std::size_t i = 0; i < dataset.num_items; ++i) {
        const auto item = static_cast<ItemId>(i);
        if (contains(tr, item)) continue;
        for (std::size_t a = 0; a < a_count; ++a) {
          if (catalog.member(item, a)) samples[a].push_back(buf[i]);
        }
      }
    } else {
      for (ItemId item : dataset.test_pos[u]) {
        const double s = score(params, uid, item);
        for (std::size_t a = 0; a < a_count; ++a) {
          if (catalog.member(item, a)) samples[a].push_back(s);
        }
      }
    }
  }
  for (std::size_t a = 0; a < a_count; ++a) {
    if (samples[a].empty()) {
      throw Error("group_divergence: group '" + catalog.group_names()[a] + "' has no samples");
    }
  }
  CompensatedSum total;
  std::size_t n = 0;
  for (std::size_t a = 0; a < a_count; ++a) {
    for (std::size_t b = a + 1; b < a_count; ++b) {
      total.add(js_divergence(samples[a], samples[b], bins));
      ++n;
    }
  }
  return total.value() / static_cast<double>(n);
}

FairnessReport evaluate(const MfParams& params, const InteractionDataset& dataset,
                        const GroupCatalog& catalog, const EvalOptions& options) {
  if (options.ks.empty()) throw ConfigError("evaluation: no k values");
  FairnessReport rep;
  rep.ks = options.ks;
  rep.group_names = catalog.group_names();
  const std::size_t max_k = *std::max_element(options.ks.begin(), options.ks.end());
  const RankingResult full = rank_topk(params, dataset, max_k, options.exclusion);
  for (std::size_t k : options.ks) {
    const RankingResult r = truncated(full, k);
    rep.prob_rsp[k] = prob_rsp(r, dataset, catalog, Exclusion::kTrain);
    rep.prob_reo[k] = prob_reo(r, dataset, catalog);
    rep.rsp[k] = relative_std(rep.prob_rsp[k]);
    rep.reo[k] = relative_std(rep.prob_reo[k]);
    rep.f1[k] = f1_at_k(r, dataset.test_pos, k);
    rep.ndcg[k] = ndcg_at_k(r, dataset.test_pos, k);
  }
  rep.js_user = user_divergence(params, dataset, options.user_pairs, options.seed, options.bins);
  if (catalog.num_groups() >= 2) {
    rep.js_group_all = group_divergence(params, dataset, catalog, DivergenceMode::kAll, options.bins);
    rep.js_group_pos =
        group_divergence(params, dataset, catalog, DivergenceMode::kPositive, options.bins);
  }
  std::vector<Interaction> all_pairs;
  for (std::size_t u = 0; u < dataset.num_users; ++u) {
    for (const auto* split : {&dataset.train_pos[u], &dataset.val_pos[u], &dataset.test_pos[u]}) {
      for (ItemId i : *split) all_pairs.push_back({static_cast<UserId>(u), i});
    }
  }
  const auto gf = group_feedback(all_pairs, catalog);
  rep.group_items = gf.items;
  rep.group_feedback = gf.feedback;
  rep.feedback_ratio = gf.ratio;
  rep.feedback_ratio_rsd = relative_std(gf.ratio);
  return rep;
}

namespace {
std::string at(const char* metric, std::size_t k) { return std::string(metric) + "@" + std::to_string(k); }
}  // namespace

nlohmann::ordered_json FairnessReport::to_json() const {
  nlohmann::ordered_json j;
  j["ks"] = ks;
  j["groups"] = group_names;
  for (std::size_t k : ks) {
    j[at("rsp", k)] = rsp.at(k);
    j[at("reo", k)] = reo.at(k);
    j[at("f1", k)] = f1.at(k);
    j[at("ndcg", k)] = ndcg.at(k);
  }
  nlohmann::ordered_json probs;
  for (std::size_t k : ks) {
    probs[at("rsp", k)] = prob_rsp.at(k);
    probs[at("reo", k)] = prob_reo.at(k);
  }
  j["group_probs"] = probs;
  j["js_user"] = js_user;
  j["js_group_all"] = js_group_all;
  j["js_group_pos"] = js_group_pos;
  j["group_items"] = group_items;
  j["group_feedback"] = group_feedback;
  j["feedback_ratio"] = feedback_ratio;
  j["feedback_ratio_rsd"] = feedback_ratio_rsd;
  j["config_hash"] = config_hash;
  return j;
}

FairnessReport FairnessReport::from_json(const nlohmann::json& j) {
  FairnessReport r;
  try {
    r.ks = j.at("ks").get<std::vector<std::size_t>>();
    r.group_names = j.at("groups").get<std::vector<std::string>>();
    for (std::size_t k : r.ks) {
      r.rsp[k] = j.at(at("rsp", k)).get<double>();
      r.reo[k] = j.at(at("reo", k)).get<double>();
      r.f1[k] = j.at(at("f1", k)).get<double>();
      r.ndcg[k] = j.at(at("ndcg", k)).get<double>();
      r.prob_rsp[k] = j.at("group_probs").at(at("rsp", k)).get<std::vector<double>>();
      r.prob_reo[k] = j.at("group_probs").at(at("reo", k)).get<std::vector<double>>();
    }
    r.js_user = j.at("js_user").get<double>();
    r.js_group_all = j.at("js_group_all").get<double>();
    r.js_group_pos = j.at("js_group_pos").get<double>();
    r.group_items = j.at("group_items").get<std::vector<std::size_t>>();
    r.group_feedback = j.at("group_feedback").get<std::vector<std::size_t>>();
    r.feedback_ratio = j.at("feedback_ratio").get<std::vector<double>>();
    r.feedback_ratio_rsd = j.at("feedback_ratio_rsd").get<double>();
    r.config_hash = j.at("config_hash").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed report: ") + e.what());
  }
  return r;
}

void FairnessReport::write_tsv(std::ostream& out, const std::string& model) const {
  out << "k\tmetric\tmodel\tvalue\n";
  const auto old_precision = out.precision(10);
  for (std::size_t k : ks) {
    out << k << "\trsp\t" << model << '\t' << rsp.at(k) << '\n';
    out << k << "\treo\t" << model << '\t' << reo.at(k) << '\n';
    out << k << "\tf1\t" << model << '\t' << f1.at(k) << '\n';
    out << k << "\tndcg\t" << model << '\t' << ndcg.at(k) << '\n';
  }
  out.precision(old_precision);
}

}  // namespace fairrank
