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

#include "fairrank/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fairrank {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

std::size_t AdversaryParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

AdversaryParams AdversaryParams::zeros_like() const {
  AdversaryParams z;
  z.layers.reserve(layers.size());
  for (const auto& l : layers) {
    z.layers.push_back({RowMatrix::Zero(l.weight.rows(), l.weight.cols()),
                        Eigen::VectorXd::Zero(l.bias.size())});
  }
  return z;
}

std::vector<double> AdversaryParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers) {
    out.insert(out.end(), l.weight.data(), l.weight.data() + l.weight.size());
    out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return out;
}

void AdversaryParams::assign_flat(std::span<const double> values) {
  if (values.size() != parameter_count()) {
    throw Error("adversary: flat parameter size mismatch");
  }
  std::size_t off = 0;
  for (auto& l : layers) {
    std::copy_n(values.data() + off, l.weight.size(), l.weight.data());
    off += static_cast<std::size_t>(l.weight.size());
    std::copy_n(values.data() + off, l.bias.size(), l.bias.data());
    off += static_cast<std::size_t>(l.bias.size());
  }
}

bool AdversaryParams::operator==(const AdversaryParams& other) const {
  if (layers.size() != other.layers.size()) return false;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& a = layers[k];
    const auto& b = other.layers[k];
    if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
        a.bias.size() != b.bias.size() || a.weight != b.weight || a.bias != b.bias) {
      return false;
    }
  }
  return true;
}

AdversaryParams init_adversary(std::size_t hidden_layers, std::size_t hidden_width,
                               std::size_t num_groups, Rng& rng) {
  if (num_groups == 0) throw ConfigError("adversary: num_groups must be >= 1");
  if (hidden_layers > 0 && hidden_width == 0) {
    throw ConfigError("adversary: hidden width must be >= 1");
  }
  AdversaryParams psi;
  std::size_t fan_in = 1;
  for (std::size_t k = 0; k <= hidden_layers; ++k) {
    const std::size_t fan_out = k == hidden_layers ? num_groups : hidden_width;
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    DenseLayer layer{RowMatrix(static_cast<Eigen::Index>(fan_out), static_cast<Eigen::Index>(fan_in)),
                     Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fan_out))};
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = dist(rng);
    psi.layers.push_back(std::move(layer));
    fan_in = fan_out;
  }
  return psi;
}

namespace {

// Pre-activations per layer for one input; the reference path for the
// batched kernels.
std::vector<std::vector<double>> forward_pre(const AdversaryParams& psi, double yhat) {
  std::vector<std::vector<double>> pre;
  pre.reserve(psi.layers.size());
  std::vector<double> act{yhat};
  for (std::size_t k = 0; k < psi.layers.size(); ++k) {
    const auto& l = psi.layers[k];
    std::vector<double> z(static_cast<std::size_t>(l.weight.rows()));
    for (Eigen::Index o = 0; o < l.weight.rows(); ++o) {
      double s = l.bias(o);
      for (Eigen::Index i = 0; i < l.weight.cols(); ++i) s += l.weight(o, i) * act[static_cast<std::size_t>(i)];
      z[static_cast<std::size_t>(o)] = s;
    }
    pre.push_back(z);
    if (k + 1 < psi.layers.size()) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
      act = std::move(z);
    }
  }
  return pre;
}

}  // namespace

std::vector<double> adv_forward(const AdversaryParams& psi, double yhat) {
  auto pre = forward_pre(psi, yhat);
  std::vector<double> out = pre.back();
  for (double& v : out) v = sigmoid(v);
  return out;
}

double adv_loss(std::span<const double> probs, std::span<const std::uint8_t> groups) {
  double ll = 0.0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    const double p = std::clamp(probs[a], kProbClamp, 1.0 - kProbClamp);
    ll += groups[a] ? std::log(p) : std::log(1.0 - p);
  }
  return ll;
}

AdversaryBackward adv_backward(const AdversaryParams& psi, double yhat,
                               std::span<const std::uint8_t> groups) {
  const auto pre = forward_pre(psi, yhat);
  const std::size_t depth = psi.layers.size();
  AdversaryBackward out;
  out.grad = psi.zeros_like();

  std::vector<double> probs = pre.back();
  for (double& v : probs) v = sigmoid(v);
  out.loss = adv_loss(probs, groups);

  // d ll / d z_out = g - p for the sigmoid/log-likelihood pair.
  std::vector<double> delta(probs.size());
  for (std::size_t a = 0; a < probs.size(); ++a) delta[a] = (groups[a] ? 1.0 : 0.0) - probs[a];

  for (std::size_t k = depth; k-- > 0;) {
    const auto& l = psi.layers[k];
    auto& gl = out.grad.layers[k];
    // Input activation of layer k.
    std::vector<double> act;
    if (k == 0) {
      act = {yhat};
    } else {
      act = pre[k - 1];
      for (double& v : act) v = v > 0.0 ? v : 0.0;
    }
    for (Eigen::Index o = 0; o < l.weight.rows(); ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      gl.bias(o) = d;
      for (Eigen::Index i = 0; i < l.weight.cols(); ++i) gl.weight(o, i) = d * act[static_cast<std::size_t>(i)];
    }
    std::vector<double> prev(static_cast<std::size_t>(l.weight.cols()), 0.0);
    for (Eigen::Index i = 0; i < l.weight.cols(); ++i) {
      double s = 0.0;
      for (Eigen::Index o = 0; o < l.weight.rows(); ++o) s += l.weight(o, i) * delta[static_cast<std::size_t>(o)];
      prev[static_cast<std::size_t>(i)] = s;
    }
    if (k == 0) {
      out.d_input = prev[0];
    } else {
      for (std::size_t i = 0; i < prev.size(); ++i) {
        if (!(pre[k - 1][i] > 0.0)) prev[i] = 0.0;
      }
      delta = std::move(prev);
    }
  }
  return out;
}

AdversaryOptimizer::AdversaryOptimizer(const AdversaryParams& shape, AdamConstants c)
    : c_(c), m_(shape.parameter_count(), 0.0), v_(shape.parameter_count(), 0.0) {}

void AdversaryOptimizer::ascend(AdversaryParams& psi, const AdversaryParams& grad,
                                double lr) {
  auto g = grad.flatten();
  check_finite(g, "adversary");
  auto p = psi.flatten();
  ++step_;
  const double bc1 = 1.0 - std::pow(c_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(c_.beta2, static_cast<double>(step_));
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double gk = -g[k];
    m_[k] = c_.beta1 * m_[k] + (1.0 - c_.beta1) * gk;
    v_[k] = c_.beta2 * v_[k] + (1.0 - c_.beta2) * gk * gk;
    p[k] -= lr * (m_[k] / bc1) / (std::sqrt(v_[k] / bc2) + c_.epsilon);
  }
  psi.assign_flat(p);
}

}  // namespace fairrank
