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

#include "fairrank/objectives.hpp"

#include <cmath>

namespace fairrank {

PairLoss bpr_pair_loss(double y_ui, double y_uj) {
  const double x = y_ui - y_uj;
  // softplus(-x) = max(-x, 0) + log1p(exp(-|x|))
  const double loss = std::max(-x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  // 1 - sigmoid(x) = sigmoid(-x)
  const double s = x >= 0 ? std::exp(-x) / (1.0 + std::exp(-x)) : 1.0 / (1.0 + std::exp(x));
  return {loss, -s, s};
}

ScoresLoss kl_loss_user(std::span<const double> scores) {
  ScoresLoss out;
  out.grad.assign(scores.size(), 0.0);
  const std::size_t n = scores.size();
  if (n < 2) return out;
  const double inv_n = 1.0 / static_cast<double>(n);
  double mu = 0.0;
  for (double s : scores) mu += s;
  mu *= inv_n;
  double var = 0.0;
  for (double s : scores) var += (s - mu) * (s - mu);
  var *= inv_n;
  const bool floored = var < kVarianceFloor;
  if (floored) var = kVarianceFloor;
  out.loss = 0.5 * (mu * mu + var - 1.0) - 0.5 * std::log(var);
  // d/ds_k: mu/n from the mean term, (1/2 - 1/(2 var)) * 2 (s_k - mu)/n from
  // the variance terms (zero when the floor is active).
  const double var_coeff = floored ? 0.0 : (1.0 - 1.0 / var);
  for (std::size_t k = 0; k < n; ++k) {
    out.grad[k] = mu * inv_n + var_coeff * (scores[k] - mu) * inv_n;
  }
  return out;
}

MatrixLoss fatr_reg(const RowMatrix& free_block, const RowMatrix& sensitive_block) {
  if (free_block.rows() != sensitive_block.rows()) {
    throw Error("fatr_reg: free and sensitive blocks must cover the same items (" +
                std::to_string(free_block.rows()) + " vs " +
                std::to_string(sensitive_block.rows()) + ")");
  }
  // C = Q' Q''^T in the (d-A) x A orientation; items are rows here.
  const Eigen::MatrixXd corr = free_block.transpose() * sensitive_block;
  MatrixLoss out;
  out.loss = 0.5 * corr.squaredNorm();
  out.grad = sensitive_block * corr.transpose();
  return out;
}

MeanGapLoss mean_gap_penalty(std::span<const double> first, std::span<const double> second) {
  MeanGapLoss out;
  out.grad_first.assign(first.size(), 0.0);
  out.grad_second.assign(second.size(), 0.0);
  if (first.empty() || second.empty()) {
    out.degenerate = true;
    return out;
  }
  double m1 = 0.0;
  for (double s : first) m1 += s;
  m1 /= static_cast<double>(first.size());
  double m2 = 0.0;
  for (double s : second) m2 += s;
  m2 /= static_cast<double>(second.size());
  const double gap = m1 - m2;
  out.loss = 0.5 * gap * gap;
  const double g1 = gap / static_cast<double>(first.size());
  const double g2 = -gap / static_cast<double>(second.size());
  for (auto& g : out.grad_first) g = g1;
  for (auto& g : out.grad_second) g = g2;
  return out;
}

}  // namespace fairrank
