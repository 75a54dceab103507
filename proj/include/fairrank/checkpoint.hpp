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

#ifndef FAIRRANK_CHECKPOINT_HPP_
#define FAIRRANK_CHECKPOINT_HPP_

#include <filesystem>
#include <optional>
#include <string>

#include "fairrank/adversary.hpp"
#include "fairrank/mf_model.hpp"

namespace fairrank {

// Binary layout (native little-endian): magic "FRCKPT", u32 version, model
// name, config hash, u64 N, M, d, frozen dims, both matrices row-major, then
// an optional adversary (u8 flag, u64 layer count, per layer rows, cols,
// weights, bias). Doubles are stored bit-exact.
struct Checkpoint {
  std::string model;
  std::string config_hash;
  MfParams params;
  std::optional<AdversaryParams> adversary;

  bool operator==(const Checkpoint&) const = default;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fairrank

#endif  // FAIRRANK_CHECKPOINT_HPP_
