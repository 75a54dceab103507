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

#include "fairrank/mf_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fairrank {

namespace {
constexpr double kInitStd = 0.01;

void fill_normal(RowMatrix& m, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, kInitStd);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) m(r, static_cast<Eigen::Index>(c)) = normal(rng);
  }
}
}  // namespace

bool MfParams::operator==(const MfParams& other) const {
  return frozen_item_dims == other.frozen_item_dims &&
         user_factors.rows() == other.user_factors.rows() &&
         user_factors.cols() == other.user_factors.cols() &&
         item_factors.rows() == other.item_factors.rows() &&
         item_factors.cols() == other.item_factors.cols() &&
         user_factors == other.user_factors && item_factors == other.item_factors;
}

MfParams init_params(std::size_t num_users, std::size_t num_items, std::size_t dim,
                     std::uint64_t seed) {
  if (num_users == 0 || num_items == 0 || dim == 0) {
    throw ConfigError("init_params: num_users, num_items and dim must be >= 1");
  }
  MfParams p;
  p.user_factors.resize(static_cast<Eigen::Index>(num_users), static_cast<Eigen::Index>(dim));
  p.item_factors.resize(static_cast<Eigen::Index>(num_items), static_cast<Eigen::Index>(dim));
  Rng rng(seed);
  fill_normal(p.user_factors, dim, rng);
  fill_normal(p.item_factors, dim, rng);
  return p;
}

MfParams init_fatr_params(std::size_t num_users, const GroupCatalog& catalog,
                          std::size_t dim, std::uint64_t seed) {
  const std::size_t a_count = catalog.num_groups();
  if (a_count >= dim) {
    throw ConfigError("FATR requires num_groups (" + std::to_string(a_count) +
                      ") < dim (" + std::to_string(dim) + ")");
  }
  MfParams p = init_params(num_users, catalog.num_items(), dim, seed);
  p.frozen_item_dims = a_count;
  const std::size_t free = dim - a_count;
  for (std::size_t i = 0; i < catalog.num_items(); ++i) {
    for (std::size_t a = 0; a < a_count; ++a) {
      p.item_factors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(free + a)) =
          catalog.member(static_cast<ItemId>(i), a) ? 1.0 : 0.0;
    }
  }
  return p;
}

double score(const MfParams& params, UserId u, ItemId i) {
  if (u >= params.num_users() || i >= params.num_items()) {
    throw Error("score: index out of range (user " + std::to_string(u) + ", item " +
                std::to_string(i) + ")");
  }
  return dot(params.user_factors.row(u).data(), params.item_factors.row(i).data(),
             params.dim());
}

void score_all(const MfParams& params, UserId u, std::span<double> out) {
  if (u >= params.num_users()) throw Error("score_all: user index out of range");
  const std::size_t d = params.dim();
  const double* pu = params.user_factors.row(u).data();
  const double* q = params.item_factors.data();
  for (std::size_t i = 0; i < params.num_items(); ++i) out[i] = dot(pu, q + i * d, d);
}

std::vector<double> score_all(const MfParams& params, UserId u) {
  std::vector<double> out(params.num_items());
  score_all(params, u, out);
  return out;
}

RowGradient::RowGradient(std::size_t rows, std::size_t cols)
    : cols_(cols), slot_of_row_(rows, -1) {}

std::span<double> RowGradient::row(std::size_t row) {
  auto& slot = slot_of_row_[row];
  if (slot < 0) {
    slot = static_cast<std::int64_t>(touched_.size());
    touched_.push_back(row);
    values_.resize(values_.size() + cols_, 0.0);
  }
  return {values_.data() + static_cast<std::size_t>(slot) * cols_, cols_};
}

void RowGradient::clear() {
  for (std::size_t r : touched_) slot_of_row_[r] = -1;
  touched_.clear();
  values_.clear();
}

void check_finite(std::span<const double> values, const char* block_name) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(std::string("non-finite gradient in ") + block_name);
    }
  }
}

AdamState::AdamState(std::size_t rows, std::size_t cols, AdamConstants constants)
    : c_(constants),
      update_cols_(cols),
      m_(RowMatrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols))),
      v_(RowMatrix::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols))),
      row_step_(rows, 0) {}

void AdamState::apply_row(RowMatrix& param, std::size_t row, const double* g,
                          std::uint64_t step, double lr) {
  const double bc1 = 1.0 - std::pow(c_.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(c_.beta2, static_cast<double>(step));
  double* p = param.row(static_cast<Eigen::Index>(row)).data();
  double* m = m_.row(static_cast<Eigen::Index>(row)).data();
  double* v = v_.row(static_cast<Eigen::Index>(row)).data();
  for (std::size_t c = 0; c < update_cols_; ++c) {
    const double gc = g ? g[c] : 0.0;
    m[c] = c_.beta1 * m[c] + (1.0 - c_.beta1) * gc;
    v[c] = c_.beta2 * v[c] + (1.0 - c_.beta2) * gc * gc;
    const double m_hat = m[c] / bc1;
    const double v_hat = v[c] / bc2;
    p[c] -= lr * m_hat / (std::sqrt(v_hat) + c_.epsilon);
  }
}

void AdamState::catch_up(RowMatrix& param, std::size_t row) {
  auto& last = row_step_[row];
  if (last == 0) {
    // Moments are still zero, so skipped zero-gradient steps were no-ops.
    last = step_;
    return;
  }
  while (last < step_) {
    ++last;
    apply_row(param, row, nullptr, last, lr_history_[last - 1]);
  }
}

void AdamState::step_sparse(RowMatrix& param, const RowGradient& grad, double lr,
                            const char* block_name) {
  for (std::size_t slot = 0; slot < grad.touched().size(); ++slot) {
    check_finite(grad.values(slot), block_name);
  }
  const std::uint64_t prev = step_;
  for (std::size_t slot = 0; slot < grad.touched().size(); ++slot) {
    const std::size_t row = grad.touched()[slot];
    step_ = prev;
    catch_up(param, row);
    apply_row(param, row, grad.values(slot).data(), prev + 1, lr);
    row_step_[row] = prev + 1;
  }
  step_ = prev + 1;
  lr_history_.push_back(lr);
}

void AdamState::step_dense(RowMatrix& param, const RowMatrix& grad, double lr,
                           const char* block_name) {
  check_finite({grad.data(), static_cast<std::size_t>(grad.size())}, block_name);
  sync(param);
  ++step_;
  lr_history_.push_back(lr);
  for (Eigen::Index r = 0; r < param.rows(); ++r) {
    apply_row(param, static_cast<std::size_t>(r), grad.row(r).data(), step_, lr);
    row_step_[static_cast<std::size_t>(r)] = step_;
  }
}

void AdamState::sync(RowMatrix& param) {
  for (std::size_t r = 0; r < row_step_.size(); ++r) catch_up(param, r);
}

}  // namespace fairrank
