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

#ifndef FAIRRANK_OBJECTIVES_HPP_
#define FAIRRANK_OBJECTIVES_HPP_

#include <span>
#include <vector>

#include "fairrank/mf_model.hpp"

namespace fairrank {

// Trade-off weights of the training objectives.
struct ObjectiveWeights {
  double lambda_theta = 0.1;  // L2 on embeddings
  double alpha = 0.0;         // adversary
  double beta = 0.0;          // KL-loss
  double lambda_model = 0.0;  // FATR decoupling / Reg mean-gap weight
  double gamma = -1.0;        // baselines' L2; negative means "use lambda_theta"

  double baseline_l2() const { return gamma < 0.0 ? lambda_theta : gamma; }
};

struct PairLoss {
  double loss;
  double d_pos;  // d loss / d y_ui
  double d_neg;  // d loss / d y_uj
};

// -ln sigmoid(y_ui - y_uj), evaluated as softplus(-(y_ui - y_uj)).
PairLoss bpr_pair_loss(double y_ui, double y_uj);

struct ScoresLoss {
  double loss = 0.0;
  std::vector<double> grad;  // one entry per input score
};

inline constexpr double kVarianceFloor = 1e-8;

// KL(N(mu, var) || N(0, 1)) with mu and population variance var estimated
// from the given scores of one user: (mu^2 + var - 1) / 2 - ln(var) / 2.
// Fewer than two scores contribute nothing.
ScoresLoss kl_loss_user(std::span<const double> scores);

struct MatrixLoss {
  double loss = 0.0;
  RowMatrix grad;
};

// 1/2 ||Q' Q''^T||_F^2 for the item-major blocks free (M x (d-A)) and
// sensitive (M x A): the squared correlation between every free latent
// dimension and every group-indicator dimension across items.
MatrixLoss fatr_reg(const RowMatrix& free_block, const RowMatrix& sensitive_block);

struct MeanGapLoss {
  double loss = 0.0;
  std::vector<double> grad_first;
  std::vector<double> grad_second;
  bool degenerate = false;  // one side empty; loss and gradients are zero
};

// 1/2 (mean(first) - mean(second))^2. Reg-RSP feeds all scored pairs of each
// group, Reg-REO only the positive pairs; the caller applies lambda.
MeanGapLoss mean_gap_penalty(std::span<const double> first, std::span<const double> second);

inline MeanGapLoss reg_rsp_penalty(std::span<const double> scores_g1,
                                   std::span<const double> scores_g2) {
  return mean_gap_penalty(scores_g1, scores_g2);
}

inline MeanGapLoss reg_reo_penalty(std::span<const double> pos_scores_g1,
                                   std::span<const double> pos_scores_g2) {
  return mean_gap_penalty(pos_scores_g1, pos_scores_g2);
}

}  // namespace fairrank

#endif  // FAIRRANK_OBJECTIVES_HPP_
