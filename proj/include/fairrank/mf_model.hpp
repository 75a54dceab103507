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

#ifndef FAIRRANK_MF_MODEL_HPP_
#define FAIRRANK_MF_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "fairrank/data.hpp"

namespace fairrank {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Matrix-factorization parameters: scores are P_u . Q_i with no bias terms.
//
// FATR models reuse this type: the trailing `frozen_item_dims` columns of
// `item_factors` hold the group-indicator block Q'' and are never updated, so
// each item row is the concatenation [Q'_i ; Q''_i].
struct MfParams {
  RowMatrix user_factors;  // N x d
  RowMatrix item_factors;  // M x d
  std::size_t frozen_item_dims = 0;

  std::size_t num_users() const { return static_cast<std::size_t>(user_factors.rows()); }
  std::size_t num_items() const { return static_cast<std::size_t>(item_factors.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(user_factors.cols()); }
  std::size_t free_item_dims() const { return dim() - frozen_item_dims; }

  bool operator==(const MfParams& other) const;
};

// Entries i.i.d. N(0, 0.01^2).
MfParams init_params(std::size_t num_users, std::size_t num_items, std::size_t dim,
                     std::uint64_t seed);

// FATR layout: free block initialised like init_params, last A item columns
// set to the catalog's group indicators. Requires A < dim.
MfParams init_fatr_params(std::size_t num_users, const GroupCatalog& catalog,
                          std::size_t dim, std::uint64_t seed);

// Sequential dot product. Every scoring path goes through it so
// per-item and full-row scores agree bit for bit.
inline double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

double score(const MfParams& params, UserId u, ItemId i);

std::vector<double> score_all(const MfParams& params, UserId u);
void score_all(const MfParams& params, UserId u, std::span<double> out);

// Gradient rows for a subset of matrix rows, accumulated in place.
class RowGradient {
 public:
  RowGradient(std::size_t rows, std::size_t cols);

  std::size_t cols() const { return cols_; }
  // Gradient row for `row`, zero-initialised on first access.
  std::span<double> row(std::size_t row);
  const std::vector<std::size_t>& touched() const { return touched_; }
  std::span<const double> values(std::size_t slot) const {
    return {values_.data() + slot * cols_, cols_};
  }
  void clear();

 private:
  std::size_t cols_;
  std::vector<std::int64_t> slot_of_row_;
  std::vector<std::size_t> touched_;
  std::vector<double> values_;
};

struct AdamConstants {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with per-row moments for a row-major parameter matrix.
//
// step_sparse() only touches rows present in the gradient. Rows skipped by
// earlier steps still owe the zero-gradient updates a dense optimizer would
// have applied (moment decay keeps moving them); those are replayed lazily
// when the row is next touched or on sync(). The result equals step_dense()
// with zero gradient rows.
class AdamState {
 public:
  AdamState() = default;
  AdamState(std::size_t rows, std::size_t cols, AdamConstants constants = {});

  // Columns [update_cols, cols) are left untouched (FATR's frozen block).
  void set_update_cols(std::size_t update_cols) { update_cols_ = update_cols; }

  void step_sparse(RowMatrix& param, const RowGradient& grad, double lr,
                   const char* block_name);
  void step_dense(RowMatrix& param, const RowMatrix& grad, double lr,
                  const char* block_name);
  // Brings every row up to the current step.
  void sync(RowMatrix& param);

  std::uint64_t step_count() const { return step_; }
  const RowMatrix& first_moment() const { return m_; }
  const RowMatrix& second_moment() const { return v_; }

 private:
  void apply_row(RowMatrix& param, std::size_t row, const double* g,
                 std::uint64_t step, double lr);
  void catch_up(RowMatrix& param, std::size_t row);

  AdamConstants c_;
  std::size_t update_cols_ = 0;
  RowMatrix m_;
  RowMatrix v_;
  std::vector<std::uint64_t> row_step_;  // last step applied to each row
  std::vector<double> lr_history_;        // lr used at step s (1-based)
  std::uint64_t step_ = 0;
};

// Throws Error naming `block_name` if any value is NaN or infinite.
void check_finite(std::span<const double> values, const char* block_name);

}  // namespace fairrank

#endif  // FAIRRANK_MF_MODEL_HPP_
