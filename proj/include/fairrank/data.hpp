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

#ifndef FAIRRANK_DATA_HPP_
#define FAIRRANK_DATA_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fairrank/error.hpp"

namespace fairrank {

using Rng = std::mt19937_64;

struct Interaction {
  UserId user;
  ItemId item;
  bool operator==(const Interaction&) const = default;
};

// Deduplicated positive interactions with dense ids in first-seen order.
struct RawInteractions {
  std::vector<Interaction> pairs;
  std::vector<std::string> user_ids;  // dense index -> external id
  std::vector<std::string> item_ids;

  std::size_t num_users() const { return user_ids.size(); }
  std::size_t num_items() const { return item_ids.size(); }
};

// Reads a `user_id,item_id` CSV. Duplicate rows are collapsed.
RawInteractions load_interactions(const std::filesystem::path& path);

void write_interactions(const std::filesystem::path& path,
                        const RawInteractions& raw);

// Item -> group memberships. Every item belongs to at least one group.
class GroupCatalog {
 public:
  GroupCatalog() = default;
  GroupCatalog(std::vector<std::string> group_names, std::size_t num_items);

  std::size_t num_groups() const { return group_names_.size(); }
  std::size_t num_items() const { return num_items_; }
  const std::vector<std::string>& group_names() const { return group_names_; }

  // G_a(i) in {0, 1}.
  bool member(ItemId item, std::size_t group) const {
    return membership_[static_cast<std::size_t>(item) * num_groups() + group] != 0;
  }
  // Binary group vector g_i of length A.
  std::span<const std::uint8_t> groups_of(ItemId item) const {
    return {membership_.data() + static_cast<std::size_t>(item) * num_groups(),
            num_groups()};
  }
  void set_member(ItemId item, std::size_t group) {
    membership_[static_cast<std::size_t>(item) * num_groups() + group] = 1;
  }

  std::vector<std::size_t> group_item_counts() const;

  // Throws if some item has no group.
  void check_complete() const;

 private:
  std::vector<std::string> group_names_;
  std::size_t num_items_ = 0;
  std::vector<std::uint8_t> membership_;  // num_items x num_groups
};

// Reads an `item_id,group` CSV. Item ids are resolved against `item_ids`
// (the dense -> external table of the interaction file). Items may repeat to
// carry several groups; group indices follow first-seen label order.
GroupCatalog load_groups(const std::filesystem::path& path,
                         const std::vector<std::string>& item_ids);

void write_groups(const std::filesystem::path& path, const GroupCatalog& catalog,
                  const std::vector<std::string>& item_ids);

struct SplitRatios {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

// Per-user train/validation/test partition of the positive interactions.
struct InteractionDataset {
  std::size_t num_users = 0;
  std::size_t num_items = 0;
  std::vector<std::vector<ItemId>> train_pos;  // sorted, per user
  std::vector<std::vector<ItemId>> val_pos;
  std::vector<std::vector<ItemId>> test_pos;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::size_t dropped_users = 0;

  bool in_train(UserId u, ItemId i) const;
  bool in_val(UserId u, ItemId i) const;
  // Y(u, i): ground truth used for evaluation.
  bool in_test(UserId u, ItemId i) const;

  std::size_t num_train_pairs() const;
  std::size_t num_test_pairs() const;
  // Flattened training positives in user-major order.
  std::vector<Interaction> train_pairs() const;
};

// Partitions each user's pairs by `ratios` after a seeded shuffle. Validation
// and test sizes are floor(ratio * n); training takes the remainder. Users
// left with no training items are dropped and user indices re-densified.
InteractionDataset split(const RawInteractions& raw, const SplitRatios& ratios,
                         std::uint64_t seed);

// One item drawn uniformly from I \ I+_u (training positives excluded).
ItemId sample_negative(const InteractionDataset& dataset, UserId user, Rng& rng);

// `count` draws with replacement from I \ I+_u.
std::vector<ItemId> sample_negatives(const InteractionDataset& dataset,
                                     UserId user, std::size_t count, Rng& rng);

// Synthetic implicit-feedback data with a controlled per-group popularity
// skew. Each user draws `interactions_per_user` distinct items with weight
// group_popularity[g(i)]. With `num_topics` > 1, a `personal_fraction` of the
// draws is restricted to the user's own topic (topics are spread evenly over
// groups), which gives the data learnable per-user structure. A positive
// `activity_spread` s draws each user's count uniformly from
// [round(n (1 - s)), round(n (1 + s))] with n = interactions_per_user.
struct SyntheticSpec {
  std::size_t num_users = 2000;
  std::size_t num_items = 200;
  std::vector<double> group_item_shares{0.5, 0.5};
  std::vector<double> group_popularity{0.9, 0.3};
  std::size_t interactions_per_user = 20;
  std::size_t num_topics = 1;
  double personal_fraction = 0.0;
  double activity_spread = 0.0;
  std::uint64_t seed = 1;

  std::size_t num_groups() const { return group_item_shares.size(); }
  std::size_t min_user_interactions() const;
  std::size_t max_user_interactions() const;
  void validate() const;
};

struct SyntheticData {
  RawInteractions interactions;
  GroupCatalog catalog;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

// Per-group #item, #feedback and #feedback/#item over a set of pairs.
struct GroupFeedback {
  std::vector<std::size_t> items;
  std::vector<std::size_t> feedback;
  std::vector<double> ratio;
};

GroupFeedback group_feedback(std::span<const Interaction> pairs,
                             const GroupCatalog& catalog);

}  // namespace fairrank

#endif  // FAIRRANK_DATA_HPP_
