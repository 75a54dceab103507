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

#ifndef FAIRRANK_ADVERSARY_HPP_
#define FAIRRANK_ADVERSARY_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fairrank/data.hpp"
#include "fairrank/mf_model.hpp"

namespace fairrank {

struct DenseLayer {
  RowMatrix weight;      // out x in
  Eigen::VectorXd bias;  // out
};

// MLP adversary mapping a scalar predicted score to per-group membership
// probabilities: `hidden_layers` ReLU layers of width `hidden_width`, then a
// sigmoid output layer of width A. Zero hidden layers is a direct 1 -> A
// affine classifier.
struct AdversaryParams {
  std::vector<DenseLayer> layers;

  std::size_t num_groups() const {
    return static_cast<std::size_t>(layers.back().weight.rows());
  }
  std::size_t hidden_layers() const { return layers.size() - 1; }
  std::size_t parameter_count() const;

  // Same architecture, all parameters zero.
  AdversaryParams zeros_like() const;
  // Flat views for optimizers and gradient checks, layer by layer
  // (weights row-major, then biases).
  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> values);

  bool operator==(const AdversaryParams& other) const;
};

// Glorot-uniform weights, zero biases.
AdversaryParams init_adversary(std::size_t hidden_layers, std::size_t hidden_width,
                               std::size_t num_groups, Rng& rng);

std::vector<double> adv_forward(const AdversaryParams& psi, double yhat);

// Probability clamp applied before taking logs.
inline constexpr double kProbClamp = 1e-12;

// Log-likelihood sum_a g_a log p_a + (1 - g_a) log(1 - p_a). Always <= 0.
double adv_loss(std::span<const double> probs, std::span<const std::uint8_t> groups);

struct AdversaryBackward {
  double loss = 0.0;
  AdversaryParams grad;   // d loss / d psi
  double d_input = 0.0;   // d loss / d yhat
};

// Exact gradients of adv_loss(adv_forward(psi, yhat), g). The ReLU
// subgradient at 0 is taken as 0.
AdversaryBackward adv_backward(const AdversaryParams& psi, double yhat,
                               std::span<const std::uint8_t> groups);

// Dense Adam over the flattened adversary parameters. Ascent on the
// log-likelihood is a descent step on the negated gradient.
class AdversaryOptimizer {
 public:
  AdversaryOptimizer() = default;
  explicit AdversaryOptimizer(const AdversaryParams& shape, AdamConstants c = {});

  void ascend(AdversaryParams& psi, const AdversaryParams& grad, double lr);
  std::uint64_t step_count() const { return step_; }

 private:
  AdamConstants c_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t step_ = 0;
};

}  // namespace fairrank

#endif  // FAIRRANK_ADVERSARY_HPP_
