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

#include "fairrank/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include <boost/algorithm/string.hpp>
#include <spdlog/spdlog.h>

namespace fairrank {
namespace {

struct PairHash {
  std::size_t operator()(const Interaction& p) const noexcept {
    return (static_cast<std::size_t>(p.user) << 32) ^ p.item;
  }
};

// Reads a two-column CSV with the given header. Calls `row` for each record.
template <typename RowFn>
void read_two_column_csv(const std::filesystem::path& path,
                         const std::string& expected_header, RowFn&& row) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(path.string() + ": empty dataset");
  boost::trim(line);
  if (line != expected_header) {
    throw Error(path.string() + ": expected header '" + expected_header +
                "', got '" + line + "'");
  }
  std::size_t line_no = 1;
  std::vector<std::string> fields;
  while (std::getline(in, line)) {
    ++line_no;
    boost::trim(line);
    if (line.empty()) continue;
    boost::split(fields, line, boost::is_any_of(","));
    if (fields.size() != 2) {
      throw Error(path.string() + ":" + std::to_string(line_no) +
                  ": malformed row (expected 2 columns, got " +
                  std::to_string(fields.size()) + ")");
    }
    boost::trim(fields[0]);
    boost::trim(fields[1]);
    if (fields[0].empty() || fields[1].empty()) {
      throw Error(path.string() + ":" + std::to_string(line_no) +
                  ": malformed row (empty field)");
    }
    row(fields[0], fields[1]);
  }
}

bool sorted_contains(const std::vector<ItemId>& v, ItemId i) {
  return std::binary_search(v.begin(), v.end(), i);
}

}  // namespace

RawInteractions load_interactions(const std::filesystem::path& path) {
  RawInteractions raw;
  std::unordered_map<std::string, UserId> users;
  std::unordered_map<std::string, ItemId> items;
  std::unordered_set<Interaction, PairHash> seen;
  read_two_column_csv(path, "user_id,item_id",
                      [&](const std::string& u, const std::string& i) {
                        auto [uit, unew] = users.try_emplace(
                            u, static_cast<UserId>(raw.user_ids.size()));
                        if (unew) raw.user_ids.push_back(u);
                        auto [iit, inew] = items.try_emplace(
                            i, static_cast<ItemId>(raw.item_ids.size()));
                        if (inew) raw.item_ids.push_back(i);
                        Interaction p{uit->second, iit->second};
                        if (seen.insert(p).second) raw.pairs.push_back(p);
                      });
  if (raw.pairs.empty()) throw Error(path.string() + ": empty dataset");
  return raw;
}

void write_interactions(const std::filesystem::path& path,
                        const RawInteractions& raw) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "user_id,item_id\n";
  for (const auto& p : raw.pairs) {
    out << raw.user_ids[p.user] << ',' << raw.item_ids[p.item] << '\n';
  }
}

GroupCatalog::GroupCatalog(std::vector<std::string> group_names,
                           std::size_t num_items)
    : group_names_(std::move(group_names)),
      num_items_(num_items),
      membership_(num_items_ * group_names_.size(), 0) {}

std::vector<std::size_t> GroupCatalog::group_item_counts() const {
  std::vector<std::size_t> counts(num_groups(), 0);
  for (std::size_t i = 0; i < num_items_; ++i) {
    for (std::size_t a = 0; a < num_groups(); ++a) {
      counts[a] += member(static_cast<ItemId>(i), a);
    }
  }
  return counts;
}

void GroupCatalog::check_complete() const {
  for (std::size_t i = 0; i < num_items_; ++i) {
    auto g = groups_of(static_cast<ItemId>(i));
    if (std::none_of(g.begin(), g.end(), [](auto b) { return b != 0; })) {
      throw Error("item " + std::to_string(i) + " has no group");
    }
  }
}

GroupCatalog load_groups(const std::filesystem::path& path,
                         const std::vector<std::string>& item_ids) {
  std::unordered_map<std::string, ItemId> item_index;
  for (std::size_t i = 0; i < item_ids.size(); ++i) {
    item_index.emplace(item_ids[i], static_cast<ItemId>(i));
  }
  std::vector<std::string> names;
  std::unordered_map<std::string, std::size_t> group_index;
  std::vector<std::pair<ItemId, std::size_t>> rows;
  read_two_column_csv(path, "item_id,group",
                      [&](const std::string& item, const std::string& group) {
                        auto it = item_index.find(item);
                        if (it == item_index.end()) {
                          throw Error(path.string() + ": item '" + item +
                                      "' is not present in the interactions");
                        }
                        auto [git, gnew] = group_index.try_emplace(group, names.size());
                        if (gnew) names.push_back(group);
                        rows.emplace_back(it->second, git->second);
                      });
  GroupCatalog catalog(std::move(names), item_ids.size());
  for (const auto& [item, group] : rows) catalog.set_member(item, group);
  for (std::size_t i = 0; i < item_ids.size(); ++i) {
    auto g = catalog.groups_of(static_cast<ItemId>(i));
    if (std::none_of(g.begin(), g.end(), [](auto b) { return b != 0; })) {
      throw Error(path.string() + ": item '" + item_ids[i] + "' has no group");
    }
  }
  return catalog;
}

void write_groups(const std::filesystem::path& path, const GroupCatalog& catalog,
                  const std::vector<std::string>& item_ids) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "item_id,group\n";
  for (std::size_t i = 0; i < catalog.num_items(); ++i) {
    for (std::size_t a = 0; a < catalog.num_groups(); ++a) {
      if (catalog.member(static_cast<ItemId>(i), a)) {
        out << item_ids[i] << ',' << catalog.group_names()[a] << '\n';
      }
    }
  }
}

bool InteractionDataset::in_train(UserId u, ItemId i) const {
  return sorted_contains(train_pos[u], i);
}
bool InteractionDataset::in_val(UserId u, ItemId i) const {
  return sorted_contains(val_pos[u], i);
}
bool InteractionDataset::in_test(UserId u, ItemId i) const {
  return sorted_contains(test_pos[u], i);
}

std::size_t InteractionDataset::num_train_pairs() const {
  std::size_t n = 0;
  for (const auto& v : train_pos) n += v.size();
  return n;
}

std::size_t InteractionDataset::num_test_pairs() const {
  std::size_t n = 0;
  for (const auto& v : test_pos) n += v.size();
  return n;
}

std::vector<Interaction> InteractionDataset::train_pairs() const {
  std::vector<Interaction> pairs;
  pairs.reserve(num_train_pairs());
  for (std::size_t u = 0; u < num_users; ++u) {
    for (ItemId i : train_pos[u]) pairs.push_back({static_cast<UserId>(u), i});
  }
  return pairs;
}

InteractionDataset split(const RawInteractions& raw, const SplitRatios& ratios,
                         std::uint64_t seed) {
  const double total = ratios.train + ratios.val + ratios.test;
  if (std::abs(total - 1.0) > 1e-9 || ratios.train < 0 || ratios.val < 0 ||
      ratios.test < 0) {
    throw ConfigError("split ratios must be non-negative and sum to 1");
  }
  std::vector<std::vector<ItemId>> by_user(raw.num_users());
  for (const auto& p : raw.pairs) by_user[p.user].push_back(p.item);

  InteractionDataset ds;
  ds.num_items = raw.num_items();
  ds.item_ids = raw.item_ids;
  Rng rng(seed);
  for (std::size_t u = 0; u < by_user.size(); ++u) {
    auto& items = by_user[u];
    if (items.empty()) {
      throw Error("user '" + raw.user_ids[u] + "' has no interactions");
    }
    std::shuffle(items.begin(), items.end(), rng);
    const auto n = static_cast<double>(items.size());
    // The epsilon keeps exact products such as 10 * 0.2 from flooring to 1.
    const auto n_val = static_cast<std::size_t>(std::floor(n * ratios.val + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(n * ratios.test + 1e-9));
    const std::size_t n_train = items.size() - n_val - n_test;
    if (n_train == 0) {
      ++ds.dropped_users;
      continue;
    }
    std::vector<ItemId> tr(items.begin(), items.begin() + n_train);
    std::vector<ItemId> va(items.begin() + n_train, items.begin() + n_train + n_val);
    std::vector<ItemId> te(items.begin() + n_train + n_val, items.end());
    std::sort(tr.begin(), tr.end());
    std::sort(va.begin(), va.end());
    std::sort(te.begin(), te.end());
    ds.train_pos.push_back(std::move(tr));
    ds.val_pos.push_back(std::move(va));
    ds.test_pos.push_back(std::move(te));
    ds.user_ids.push_back(raw.user_ids[u]);
  }
  ds.num_users = ds.train_pos.size();
  if (ds.dropped_users > 0) {
    spdlog::warn("split: dropped {} users with no training interactions",
                 ds.dropped_users);
  }
  return ds;
}

ItemId sample_negative(const InteractionDataset& dataset, UserId user, Rng& rng) {
  const auto& pos = dataset.train_pos[user];
  if (pos.size() >= dataset.num_items) {
    throw Error("user " + std::to_string(user) +
                " has no negative candidates (all items are training positives)");
  }
  std::uniform_int_distribution<std::size_t> dist(
      0, dataset.num_items - pos.size() - 1);
  // Map the r-th non-positive onto its item id by skipping sorted positives.
  auto item = static_cast<ItemId>(dist(rng));
  for (ItemId p : pos) {
    if (p <= item) {
      ++item;
    } else {
      break;
    }
  }
  return item;
}

std::vector<ItemId> sample_negatives(const InteractionDataset& dataset,
                                     UserId user, std::size_t count, Rng& rng) {
  if (count == 0) throw Error("negative sample count must be >= 1");
  std::vector<ItemId> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) out.push_back(sample_negative(dataset, user, rng));
  return out;
}

std::size_t SyntheticSpec::min_user_interactions() const {
  const auto n = static_cast<double>(interactions_per_user);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n * (1.0 - activity_spread))));
}

std::size_t SyntheticSpec::max_user_interactions() const {
  const auto n = static_cast<double>(interactions_per_user);
  return static_cast<std::size_t>(std::llround(n * (1.0 + activity_spread)));
}

void SyntheticSpec::validate() const {
  if (num_users == 0 || num_items == 0) {
    throw ConfigError("synthetic: num_users and num_items must be >= 1");
  }
  if (group_item_shares.empty()) throw ConfigError("synthetic: no groups");
  if (group_popularity.size() != group_item_shares.size()) {
    throw ConfigError("synthetic: group_popularity and group_item_shares differ in length");
  }
  const double share_sum =
      std::accumulate(group_item_shares.begin(), group_item_shares.end(), 0.0);
  if (std::abs(share_sum - 1.0) > 1e-9) {
    throw ConfigError("synthetic: group_item_shares must sum to 1");
  }
  for (double s : group_item_shares) {
    if (s < 0) throw ConfigError("synthetic: negative group share");
  }
  for (double p : group_popularity) {
    if (!(p > 0.0 && p <= 1.0)) {
      throw ConfigError("synthetic: group_popularity values must lie in (0, 1]");
    }
  }
  if (interactions_per_user == 0) {
    throw ConfigError("synthetic: interactions_per_user must be >= 1");
  }
  if (interactions_per_user > num_items) {
    throw ConfigError("synthetic: infeasible spec, interactions_per_user (" +
                      std::to_string(interactions_per_user) + ") exceeds num_items (" +
                      std::to_string(num_items) + ")");
  }
  if (num_topics == 0) throw ConfigError("synthetic: num_topics must be >= 1");
  if (activity_spread < 0.0 || activity_spread >= 1.0) {
    throw ConfigError("synthetic: activity_spread must lie in [0, 1)");
  }
  if (max_user_interactions() > num_items) {
    throw ConfigError("synthetic: infeasible spec, up to " +
                      std::to_string(max_user_interactions()) +
                      " interactions per user exceed num_items (" + std::to_string(num_items) + ")");
  }
  if (personal_fraction < 0.0 || personal_fraction > 1.0) {
    throw ConfigError("synthetic: personal_fraction must lie in [0, 1]");
  }
}

namespace {

// Weighted sampling of `count` distinct candidates (Efraimidis-Spirakis keys).
void draw_weighted(const std::vector<ItemId>& candidates,
                   const std::vector<double>& weights, std::size_t count,
                   std::vector<std::uint8_t>& taken, std::vector<ItemId>& out,
                   Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::pair<double, ItemId>> keys;
  keys.reserve(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const double r = unit(rng);
    if (taken[candidates[c]]) continue;
    // log(r) / w orders like r^(1/w) without underflow.
    keys.emplace_back(std::log(std::max(r, 1e-300)) / weights[c], candidates[c]);
  }
  count = std::min(count, keys.size());
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(count),
                    keys.end(), [](const auto& a, const auto& b) {
                      return a.first > b.first || (a.first == b.first && a.second < b.second);
                    });
  for (std::size_t n = 0; n < count; ++n) {
    taken[keys[n].second] = 1;
    out.push_back(keys[n].second);
  }
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t a_count = spec.num_groups();
  std::vector<std::string> names;
  for (std::size_t a = 0; a < a_count; ++a) names.push_back("g" + std::to_string(a));
  GroupCatalog catalog(std::move(names), spec.num_items);

  // Contiguous item blocks per group; the last group absorbs rounding.
  std::vector<std::size_t> item_group(spec.num_items);
  std::vector<std::size_t> item_topic(spec.num_items);
  std::size_t begin = 0;
  for (std::size_t a = 0; a < a_count; ++a) {
    std::size_t n = a + 1 == a_count
                        ? spec.num_items - begin
                        : static_cast<std::size_t>(std::llround(
                              spec.group_item_shares[a] * static_cast<double>(spec.num_items)));
    n = std::min(n, spec.num_items - begin);
    for (std::size_t k = 0; k < n; ++k) {
      item_group[begin + k] = a;
      item_topic[begin + k] = k % spec.num_topics;
      catalog.set_member(static_cast<ItemId>(begin + k), a);
    }
    begin += n;
  }
  catalog.check_complete();

  std::vector<ItemId> all_items(spec.num_items);
  std::iota(all_items.begin(), all_items.end(), ItemId{0});
  std::vector<double> all_weights(spec.num_items);
  for (std::size_t i = 0; i < spec.num_items; ++i) {
    all_weights[i] = spec.group_popularity[item_group[i]];
  }
  std::vector<std::vector<ItemId>> topic_items(spec.num_topics);
  std::vector<std::vector<double>> topic_weights(spec.num_topics);
  for (std::size_t i = 0; i < spec.num_items; ++i) {
    topic_items[item_topic[i]].push_back(static_cast<ItemId>(i));
    topic_weights[item_topic[i]].push_back(all_weights[i]);
  }

  SyntheticData out;
  auto& raw = out.interactions;
  for (std::size_t i = 0; i < spec.num_items; ++i) raw.item_ids.push_back("i" + std::to_string(i));
  for (std::size_t u = 0; u < spec.num_users; ++u) raw.user_ids.push_back("u" + std::to_string(u));

  Rng rng(spec.seed);
  std::uniform_int_distribution<std::size_t> topic_dist(0, spec.num_topics - 1);
  std::vector<std::uint8_t> taken(spec.num_items);
  std::vector<ItemId> chosen;
  const bool personal = spec.num_topics > 1 && spec.personal_fraction > 0.0;
  std::uniform_int_distribution<std::size_t> count_dist(spec.min_user_interactions(),
                                                        spec.max_user_interactions());
  for (std::size_t u = 0; u < spec.num_users; ++u) {
    std::fill(taken.begin(), taken.end(), 0);
    chosen.clear();
    const std::size_t count =
        spec.activity_spread > 0.0 ? count_dist(rng) : spec.interactions_per_user;
    if (personal) {
      const std::size_t t = topic_dist(rng);
      const auto n_personal = std::min(
          topic_items[t].size(),
          static_cast<std::size_t>(std::llround(spec.personal_fraction * static_cast<double>(count))));
      draw_weighted(topic_items[t], topic_weights[t], n_personal, taken, chosen, rng);
    }
    draw_weighted(all_items, all_weights, count - chosen.size(), taken, chosen, rng);
    for (ItemId i : chosen) raw.pairs.push_back({static_cast<UserId>(u), i});
  }
  out.catalog = std::move(catalog);
  return out;
}

GroupFeedback group_feedback(std::span<const Interaction> pairs,
                             const GroupCatalog& catalog) {
  GroupFeedback gf;
  gf.items = catalog.group_item_counts();
  gf.feedback.assign(catalog.num_groups(), 0);
  for (const auto& p : pairs) {
    for (std::size_t a = 0; a < catalog.num_groups(); ++a) {
      gf.feedback[a] += catalog.member(p.item, a);
    }
  }
  gf.ratio.resize(catalog.num_groups());
  for (std::size_t a = 0; a < catalog.num_groups(); ++a) {
    gf.ratio[a] = gf.items[a] == 0 ? 0.0
                                   : static_cast<double>(gf.feedback[a]) /
                                         static_cast<double>(gf.items[a]);
  }
  return gf;
}

}  // namespace fairrank
