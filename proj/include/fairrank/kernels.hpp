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

// Data-parallel hot loops. Each kernel has an OpenMP implementation used by
// the trainer and evaluator, and a plain serial reference in
// `kernels::serial` that the tests and benchmarks compare against.
//
// Results of the OpenMP kernels do not depend on the thread count: work is cut
// into fixed-size chunks and partial sums are reduced in chunk order.

#ifndef FAIRRANK_KERNELS_HPP_
#define FAIRRANK_KERNELS_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "fairrank/adversary.hpp"
#include "fairrank/data.hpp"
#include "fairrank/mf_model.hpp"

namespace fairrank::kernels {

inline constexpr std::size_t kChunk = 256;

// Mean adversary log-likelihood over (score, item) samples. `grad` receives
// the mean gradient w.r.t. the adversary parameters (same shape as `psi`).
double adversary_batch_gradient(const AdversaryParams& psi, std::span<const double> scores,
                                std::span<const ItemId> items, const GroupCatalog& catalog,
                                AdversaryParams& grad);

// Per-sample log-likelihood and its derivative w.r.t. the input score, with
// the adversary frozen.
void adversary_input_gradient(const AdversaryParams& psi, std::span<const double> scores,
                              std::span<const ItemId> items, const GroupCatalog& catalog,
                              std::span<double> loss, std::span<double> d_input);

// Per-user top-k item lists ordered by (score desc, item id asc), skipping
// training positives and, when `exclude_val`, validation positives. Users with
// fewer than k candidates get shorter lists.
std::vector<std::vector<ItemId>> topk_lists(const MfParams& params,
                                            const InteractionDataset& dataset,
                                            std::size_t k, bool exclude_val);

namespace serial {

double adversary_batch_gradient(const AdversaryParams& psi, std::span<const double> scores,
                                std::span<const ItemId> items, const GroupCatalog& catalog,
                                AdversaryParams& grad);

void adversary_input_gradient(const AdversaryParams& psi, std::span<const double> scores,
                              std::span<const ItemId> items, const GroupCatalog& catalog,
                              std::span<double> loss, std::span<double> d_input);

std::vector<std::vector<ItemId>> topk_lists(const MfParams& params,
                                            const InteractionDataset& dataset,
                                            std::size_t k, bool exclude_val);

}  // namespace serial
}  // namespace fairrank::kernels

#endif  // FAIRRANK_KERNELS_HPP_
