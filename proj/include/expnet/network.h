/*
 * Copyright 2026 The ExpNet Kit Authors.
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

// The attention explainer network: a one-hidden-layer perceptron scoring
// each token's attention features,
//
//   h = ReLU(W1 f + b1),  p = sigmoid(w2 . h + b2),
//
// trained with focal loss and Adam. The math is templated on the scalar
// type; models are trained and stored in float, and the gradient checks run
// the same code in double.

#ifndef EXPNET_NETWORK_H_
#define EXPNET_NETWORK_H_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "expnet/baseline.h"
#include "expnet/features.h"
#include "expnet/trace.h"

namespace expnet {

template <typename Scalar>
struct Network {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix w1;  // hidden x input
  Vector b1;  // hidden
  Vector w2;  // hidden
  Scalar b2 = 0;

  static Network Zero(int input_dim, int hidden_dim) {
    Network net;
    net.w1 = Matrix::Zero(hidden_dim, input_dim);
    net.b1 = Vector::Zero(hidden_dim);
    net.w2 = Vector::Zero(hidden_dim);
    net.b2 = 0;
    return net;
  }

  int input_dim() const { return static_cast<int>(w1.cols()); }
  int hidden_dim() const { return static_cast<int>(w1.rows()); }

  template <typename Other>
  Network<Other> cast() const {
    Network<Other> out;
    out.w1 = w1.template cast<Other>();
    out.b1 = b1.template cast<Other>();
    out.w2 = w2.template cast<Other>();
    out.b2 = static_cast<Other>(b2);
    return out;
  }

  bool AllFinite() const {
    return w1.allFinite() && b1.allFinite() && w2.allFinite() &&
           std::isfinite(b2);
  }

  Network& operator+=(const Network& other) {
    w1 += other.w1;
    b1 += other.b1;
    w2 += other.w2;
    b2 += other.b2;
    return *this;
  }
};

template <typename Scalar>
Scalar Sigmoid(Scalar x) {
  // Two branches keep exp() from overflowing for large |x|.
  if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

// Importance probabilities for a batch of feature columns (input x n).
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, 1, Eigen::Dynamic> Forward(
    const Network<Scalar>& net, const Eigen::MatrixBase<Derived>& features) {
  if (features.rows() != net.input_dim()) {
    throw DimensionError("feature dimension " +
                         std::to_string(features.rows()) +
                         " does not match network input " +
                         std::to_string(net.input_dim()));
  }
  const auto hidden =
      ((net.w1 * features).colwise() + net.b1).cwiseMax(Scalar(0)).eval();
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> logits =
      (net.w2.transpose() * hidden).array() + net.b2;
  return logits.unaryExpr([](Scalar z) { return Sigmoid(z); });
}

// Single-token convenience overload.
template <typename Scalar>
Scalar Forward(const Network<Scalar>& net,
               const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& f) {
  return Forward(net, f.replicate(1, 1))(0);
}

inline constexpr double kProbabilityClamp = 1e-7;

template <typename Scalar>
struct FocalLossValue {
  Scalar loss;
  Scalar dloss_dprob;
};

// Focal loss -alpha_t (1 - p_t)^gamma log(p_t) with p_t = prob for a
// positive target and 1 - prob otherwise, alpha_t = alpha or 1 - alpha
// likewise. p_t is clamped to [1e-7, 1 - 1e-7] before the log; the
// derivative is taken at the clamped point.
template <typename Scalar>
FocalLossValue<Scalar> FocalLoss(Scalar prob, bool positive, Scalar alpha,
                                 Scalar gamma) {
  const Scalar eps = static_cast<Scalar>(kProbabilityClamp);
  Scalar pt = positive ? prob : Scalar(1) - prob;
  pt = std::clamp(pt, eps, Scalar(1) - eps);
  const Scalar alpha_t = positive ? alpha : Scalar(1) - alpha;
  const Scalar q = Scalar(1) - pt;
  const Scalar log_pt = std::log(pt);
  const Scalar modulator = std::pow(q, gamma);
  const Scalar loss = -alpha_t * modulator * log_pt;
  // d/dpt [-(1-pt)^g log pt] = g (1-pt)^(g-1) log pt - (1-pt)^g / pt
  Scalar dloss_dpt = -alpha_t * modulator / pt;
  if (gamma != Scalar(0)) {
    dloss_dpt += alpha_t * gamma * std::pow(q, gamma - Scalar(1)) * log_pt;
  }
  return {loss, positive ? dloss_dpt : -dloss_dpt};
}

// Mean focal loss over a batch of feature columns, with its gradient with
// respect to every network parameter written to `grad`.
template <typename Scalar, typename Derived>
Scalar BatchLossAndGradient(const Network<Scalar>& net,
                            const Eigen::MatrixBase<Derived>& features,
                            std::span<const std::uint8_t> targets,
                            Scalar alpha, Scalar gamma,
                            Network<Scalar>& grad) {
  using Matrix = typename Network<Scalar>::Matrix;
  using Row = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
  const Eigen::Index n = features.cols();
  if (static_cast<Eigen::Index>(targets.size()) != n || n == 0) {
    throw DimensionError("batch needs one target per feature column");
  }
  if (features.rows() != net.input_dim()) {
    throw DimensionError("feature dimension does not match network input");
  }
  const Matrix pre = (net.w1 * features).colwise() + net.b1;
  const Matrix hidden = pre.cwiseMax(Scalar(0));
  Row dlogit(n);
  Scalar total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar logit = net.w2.dot(hidden.col(i)) + net.b2;
    const Scalar prob = Sigmoid(logit);
    const auto value = FocalLoss(prob, targets[i] != 0, alpha, gamma);
    total += value.loss;
    dlogit(i) = value.dloss_dprob * prob * (Scalar(1) - prob);
  }
  const Scalar scale = Scalar(1) / static_cast<Scalar>(n);
  dlogit *= scale;

  grad.w2 = hidden * dlogit.transpose();
  grad.b2 = dlogit.sum();
  const Matrix dpre =
      ((net.w2 * dlogit).array() * (pre.array() > Scalar(0)).template cast<Scalar>())
          .matrix();
  grad.w1 = dpre * features.transpose();
  grad.b1 = dpre.rowwise().sum();
  return total * scale;
}

struct TrainingConfig {
  int epochs = 50;
  double learning_rate = 0.001;
  int batch_size = 32;
  double alpha = 0.6;
  double gamma = 2.0;
  double threshold = 0.5;
  int hidden_dim = 16;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  // Throws Error naming the first out-of-range field.
  void Validate() const;
};

Json TrainingConfigToJson(const TrainingConfig& config);
// Missing keys keep their defaults.
TrainingConfig TrainingConfigFromJson(const Json& object);

template <typename Scalar>
struct AdamState {
  Network<Scalar> first_moment;
  Network<Scalar> second_moment;
  std::int64_t step = 0;

  explicit AdamState(const Network<Scalar>& shape)
      : first_moment(Network<Scalar>::Zero(shape.input_dim(),
                                           shape.hidden_dim())),
        second_moment(first_moment) {}
};

// One bias-corrected Adam step.
template <typename Scalar>
void AdamUpdate(const TrainingConfig& config, const Network<Scalar>& grad,
                AdamState<Scalar>& state, Network<Scalar>& net) {
  const Scalar beta1 = static_cast<Scalar>(config.adam_beta1);
  const Scalar beta2 = static_cast<Scalar>(config.adam_beta2);
  const Scalar eps = static_cast<Scalar>(config.adam_epsilon);
  const Scalar lr = static_cast<Scalar>(config.learning_rate);
  ++state.step;
  const Scalar correction1 =
      Scalar(1) - std::pow(beta1, static_cast<Scalar>(state.step));
  const Scalar correction2 =
      Scalar(1) - std::pow(beta2, static_cast<Scalar>(state.step));

  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = beta1 * m + (Scalar(1) - beta1) * g;
    v = beta2 * v + (Scalar(1) - beta2) * g.cwiseProduct(g);
    const auto m_hat = (m / correction1).array();
    const auto v_hat = (v / correction2).array();
    param.array() -= lr * m_hat / (v_hat.sqrt() + eps);
  };
  update(net.w1, grad.w1, state.first_moment.w1, state.second_moment.w1);
  update(net.b1, grad.b1, state.first_moment.b1, state.second_moment.b1);
  update(net.w2, grad.w2, state.first_moment.w2, state.second_moment.w2);

  Scalar& m = state.first_moment.b2;
  Scalar& v = state.second_moment.b2;
  m = beta1 * m + (Scalar(1) - beta1) * grad.b2;
  v = beta2 * v + (Scalar(1) - beta2) * grad.b2 * grad.b2;
  net.b2 -= lr * (m / correction1) / (std::sqrt(v / correction2) + eps);
}

// Provenance and hyperparameters of a trained model. The fixed strings
// record choices the training procedure makes beyond the numeric config.
struct TrainMeta {
  int epochs = 0;
  double learning_rate = 0;
  int batch_size = 0;
  double alpha = 0;
  double gamma = 0;
  double threshold = 0.5;
  double adam_beta1 = 0;
  double adam_beta2 = 0;
  double adam_epsilon = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> source_dataset_ids;
  std::int64_t num_training_tokens = 0;
  std::string init = "glorot_uniform";
  std::string loss_reduction = "mean";
  std::string batching = "token";

  bool operator==(const TrainMeta&) const = default;
};

struct ExpNetModel {
  Network<float> net;
  int num_heads = 0;
  FeatureMask mask = FeatureMask::kFull;
  TrainMeta meta;

  int input_dim() const { return net.input_dim(); }
  int hidden_dim() const { return net.hidden_dim(); }

  // Throws ValidationError on non-finite parameters or an input dimension
  // that disagrees with the mask.
  void Validate() const;

  // Bitwise equality of parameters plus metadata.
  bool operator==(const ExpNetModel& other) const;
};

struct TrainOptions {
  FeatureMask mask = FeatureMask::kFull;
  std::vector<std::string> source_dataset_ids;
  // Called after every epoch with the mean training loss.
  std::function<void(int epoch, double mean_loss, const ExpNetModel&)>
      on_epoch;
};

// Glorot-uniform weights and zero biases drawn from `seed`.
Network<float> InitializeNetwork(int input_dim, int hidden_dim,
                                 std::uint64_t seed);

// Mini-batch Adam over tokens shuffled once per epoch. Returns the model
// after the final epoch. Throws Error on empty input or a non-finite loss.
ExpNetModel Train(std::span<const LabeledToken> labeled,
                  const TrainingConfig& config, std::uint64_t seed,
                  const TrainOptions& options = {});

// Scores every candidate token, thresholds, and falls back to the single
// highest-scoring token (earliest on ties) when nothing passes.
Explanation Predict(const ExpNetModel& model, const AttentionTrace& trace,
                    double threshold);

// Threshold with fallback on raw probabilities. Exposed for testing.
std::vector<std::uint8_t> ThresholdWithFallback(std::span<const float> scores,
                                                double threshold);

std::string SerializeModel(const ExpNetModel& model);
ExpNetModel DeserializeModel(const std::string& text);
void SaveModel(const ExpNetModel& model, const std::filesystem::path& path);
ExpNetModel LoadModel(const std::filesystem::path& path);

}  // namespace expnet

#endif  // EXPNET_NETWORK_H_
