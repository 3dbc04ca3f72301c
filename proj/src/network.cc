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

#include "expnet/network.h"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <random>

namespace expnet {
namespace {

template <typename Derived>
bool BitwiseEqual(const Eigen::DenseBase<Derived>& a,
                  const Eigen::DenseBase<Derived>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      const float x = a(i, j);
      const float y = b(i, j);
      if (std::memcmp(&x, &y, sizeof(float)) != 0) return false;
    }
  }
  return true;
}

FloatJson FlatRowMajor(const Eigen::MatrixXf& m) {
  FloatJson out = FloatJson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  }
  return out;
}

std::vector<float> FloatArray(const FloatJson& object, const char* key,
                              std::size_t expected) {
  const auto& array = object.at(key);
  if (!array.is_array() || array.size() != expected) {
    throw ValidationError("model-dims", "model",
                          std::string("\"") + key + "\" must hold " +
                              std::to_string(expected) + " values");
  }
  std::vector<float> out;
  out.reserve(expected);
  for (const auto& v : array) {
    if (!v.is_number()) {
      throw ValidationError("model-finite", "model",
                            std::string("\"") + key + "\" holds a non-number");
    }
    out.push_back(v.get<float>());
  }
  return out;
}

Json MetaToJson(const TrainMeta& meta) {
  Json j;
  j["epochs"] = meta.epochs;
  j["learning_rate"] = meta.learning_rate;
  j["batch_size"] = meta.batch_size;
  j["alpha"] = meta.alpha;
  j["gamma"] = meta.gamma;
  j["threshold"] = meta.threshold;
  j["adam_beta1"] = meta.adam_beta1;
  j["adam_beta2"] = meta.adam_beta2;
  j["adam_epsilon"] = meta.adam_epsilon;
  j["seed"] = meta.seed;
  j["source_dataset_ids"] = meta.source_dataset_ids;
  j["num_training_tokens"] = meta.num_training_tokens;
  j["init"] = meta.init;
  j["loss_reduction"] = meta.loss_reduction;
  j["batching"] = meta.batching;
  return j;
}

TrainMeta MetaFromJson(const Json& j) {
  TrainMeta meta;
  meta.epochs = Field<int>(j, "epochs");
  meta.learning_rate = Field<double>(j, "learning_rate");
  meta.batch_size = Field<int>(j, "batch_size");
  meta.alpha = Field<double>(j, "alpha");
  meta.gamma = Field<double>(j, "gamma");
  meta.threshold = Field<double>(j, "threshold");
  meta.adam_beta1 = Field<double>(j, "adam_beta1");
  meta.adam_beta2 = Field<double>(j, "adam_beta2");
  meta.adam_epsilon = Field<double>(j, "adam_epsilon");
  meta.seed = Field<std::uint64_t>(j, "seed");
  meta.source_dataset_ids =
      Field<std::vector<std::string>>(j, "source_dataset_ids");
  meta.num_training_tokens = Field<std::int64_t>(j, "num_training_tokens");
  meta.init = Field<std::string>(j, "init");
  meta.loss_reduction = Field<std::string>(j, "loss_reduction");
  meta.batching = Field<std::string>(j, "batching");
  return meta;
}

}  // namespace

void TrainingConfig::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error("invalid training config: " + what);
  };
  if (epochs < 1) fail("epochs must be >= 1");
  if (!(learning_rate > 0)) fail("learning_rate must be > 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(alpha > 0 && alpha < 1)) fail("alpha must lie in (0, 1)");
  if (!(gamma >= 0)) fail("gamma must be >= 0");
  if (!(threshold > 0 && threshold < 1)) fail("threshold must lie in (0, 1)");
  if (hidden_dim < 1) fail("hidden_dim must be >= 1");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1)) fail("adam_beta1 out of range");
  if (!(adam_beta2 >= 0 && adam_beta2 < 1)) fail("adam_beta2 out of range");
  if (!(adam_epsilon > 0)) fail("adam_epsilon must be > 0");
}

Json TrainingConfigToJson(const TrainingConfig& config) {
  return {{"epochs", config.epochs},
          {"learning_rate", config.learning_rate},
          {"batch_size", config.batch_size},
          {"alpha", config.alpha},
          {"gamma", config.gamma},
          {"threshold", config.threshold},
          {"hidden_dim", config.hidden_dim},
          {"adam_beta1", config.adam_beta1},
          {"adam_beta2", config.adam_beta2},
          {"adam_epsilon", config.adam_epsilon}};
}

TrainingConfig TrainingConfigFromJson(const Json& object) {
  TrainingConfig config;
  auto read = [&](const char* key, auto& field) {
    if (auto it = object.find(key); it != object.end()) {
      field = it->get<std::remove_reference_t<decltype(field)>>();
    }
  };
  read("epochs", config.epochs);
  read("learning_rate", config.learning_rate);
  read("batch_size", config.batch_size);
  read("alpha", config.alpha);
  read("gamma", config.gamma);
  read("threshold", config.threshold);
  read("hidden_dim", config.hidden_dim);
  read("adam_beta1", config.adam_beta1);
  read("adam_beta2", config.adam_beta2);
  read("adam_epsilon", config.adam_epsilon);
  config.Validate();
  return config;
}

void ExpNetModel::Validate() const {
  if (!net.AllFinite()) {
    throw ValidationError("model-finite", "model",
                          "parameters must be finite");
  }
  if (num_heads < 1 || input_dim() != FeatureDim(mask, num_heads)) {
    throw ValidationError(
        "model-dims", "model",
        "input_dim " + std::to_string(input_dim()) + " does not match mask \"" +
            FeatureMaskName(mask) + "\" with " + std::to_string(num_heads) +
            " heads");
  }
  if (net.b1.size() != net.hidden_dim() || net.w2.size() != net.hidden_dim()) {
    throw ValidationError("model-dims", "model",
                          "bias and output sizes must equal hidden_dim");
  }
}

bool ExpNetModel::operator==(const ExpNetModel& other) const {
  const float b2a = net.b2;
  const float b2b = other.net.b2;
  return num_heads == other.num_heads && mask == other.mask &&
         meta == other.meta && BitwiseEqual(net.w1, other.net.w1) &&
         BitwiseEqual(net.b1, other.net.b1) &&
         BitwiseEqual(net.w2, other.net.w2) &&
         std::memcmp(&b2a, &b2b, sizeof(float)) == 0;
}

Network<float> InitializeNetwork(int input_dim, int hidden_dim,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Network<float> net = Network<float>::Zero(input_dim, hidden_dim);
  const float limit1 = std::sqrt(6.0f / static_cast<float>(input_dim + hidden_dim));
  std::uniform_real_distribution<float> layer1(-limit1, limit1);
  for (int i = 0; i < hidden_dim; ++i) {
    for (int j = 0; j < input_dim; ++j) net.w1(i, j) = layer1(rng);
  }
  const float limit2 = std::sqrt(6.0f / static_cast<float>(hidden_dim + 1));
  std::uniform_real_distribution<float> layer2(-limit2, limit2);
  for (int i = 0; i < hidden_dim; ++i) net.w2(i) = layer2(rng);
  return net;
}

ExpNetModel Train(std::span<const LabeledToken> labeled,
                  const TrainingConfig& config, std::uint64_t seed,
                  const TrainOptions& options) {
  config.Validate();
  if (labeled.empty()) throw Error("cannot train on an empty token set");
  const auto dim = labeled.front().feature.values.size();
  const auto n = static_cast<Eigen::Index>(labeled.size());

  Eigen::MatrixXf features(dim, n);
  std::vector<std::uint8_t> targets(labeled.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& values = labeled[i].feature.values;
    if (values.size() != dim) {
      throw DimensionError("token " + std::to_string(i) + " of example \"" +
                           labeled[i].feature.example_id +
                           "\" has a different feature length");
    }
    features.col(i) = values;
    targets[i] = labeled[i].target;
  }

  ExpNetModel model;
  model.mask = options.mask;
  model.num_heads = options.mask == FeatureMask::kFull
                        ? static_cast<int>(dim) / 2
                        : static_cast<int>(dim);
  model.meta.epochs = config.epochs;
  model.meta.learning_rate = config.learning_rate;
  model.meta.batch_size = config.batch_size;
  model.meta.alpha = config.alpha;
  model.meta.gamma = config.gamma;
  model.meta.threshold = config.threshold;
  model.meta.adam_beta1 = config.adam_beta1;
  model.meta.adam_beta2 = config.adam_beta2;
  model.meta.adam_epsilon = config.adam_epsilon;
  model.meta.seed = seed;
  model.meta.source_dataset_ids = options.source_dataset_ids;
  model.meta.num_training_tokens = n;
  if (FeatureDim(model.mask, model.num_heads) != static_cast<int>(dim)) {
    throw DimensionError("feature length " + std::to_string(dim) +
                         " is incompatible with mask \"" +
                         FeatureMaskName(model.mask) + "\"");
  }

  std::mt19937_64 rng(seed);
  model.net = InitializeNetwork(static_cast<int>(dim), config.hidden_dim,
                                rng());
  AdamState<float> adam(model.net);
  Network<float> grad = Network<float>::Zero(model.input_dim(),
                                             model.hidden_dim());

  const auto alpha = static_cast<float>(config.alpha);
  const auto gamma = static_cast<float>(config.gamma);
  std::vector<Eigen::Index> order(labeled.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Eigen::MatrixXf batch(dim, config.batch_size);
  std::vector<std::uint8_t> batch_targets(config.batch_size);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0;
    int batch_index = 0;
    for (Eigen::Index start = 0; start < n;
         start += config.batch_size, ++batch_index) {
      const Eigen::Index size =
          std::min<Eigen::Index>(config.batch_size, n - start);
      for (Eigen::Index i = 0; i < size; ++i) {
        batch.col(i) = features.col(order[start + i]);
        batch_targets[i] = targets[order[start + i]];
      }
      const float loss = BatchLossAndGradient(
          model.net, batch.leftCols(size),
          std::span<const std::uint8_t>(batch_targets.data(), size), alpha,
          gamma, grad);
      if (!std::isfinite(loss) || !grad.AllFinite()) {
        throw Error("training diverged: non-finite loss at epoch " +
                    std::to_string(epoch) + ", batch " +
                    std::to_string(batch_index));
      }
      epoch_loss += static_cast<double>(loss) * static_cast<double>(size);
      AdamUpdate(config, grad, adam, model.net);
    }
    if (options.on_epoch) {
      options.on_epoch(epoch, epoch_loss / static_cast<double>(n), model);
    }
  }
  return model;
}

std::vector<std::uint8_t> ThresholdWithFallback(std::span<const float> scores,
                                                double threshold) {
  std::vector<std::uint8_t> mask(scores.size(), 0);
  bool any = false;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] >= threshold) {
      mask[i] = 1;
      any = true;
    }
  }
  if (!any && !scores.empty()) {
    // max_element returns the first maximum.
    const auto best = std::max_element(scores.begin(), scores.end());
    mask[static_cast<std::size_t>(best - scores.begin())] = 1;
  }
  return mask;
}

Explanation Predict(const ExpNetModel& model, const AttentionTrace& trace,
                    double threshold) {
  if (trace.num_heads() != model.num_heads) {
    throw DimensionError("example \"" + trace.example_id + "\" has " +
                         std::to_string(trace.num_heads()) +
                         " heads; the model expects " +
                         std::to_string(model.num_heads));
  }
  const std::vector<int> candidates = CandidateTokens(trace);
  const Eigen::RowVectorXf probs =
      Forward(model.net, FeatureMatrix(trace, model.mask));
  const std::vector<float> candidate_scores(probs.data(),
                                            probs.data() + probs.size());
  const auto token_mask = ThresholdWithFallback(candidate_scores, threshold);

  Explanation out;
  out.example_id = trace.example_id;
  out.method_id = "expnet";
  std::vector<float> token_scores(trace.num_tokens(), 0.0f);
  out.word_mask.assign(trace.num_words(), 0);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    token_scores[candidates[c]] = candidate_scores[c];
    if (token_mask[c]) out.word_mask[*trace.word_ids[candidates[c]]] = 1;
  }
  out.word_scores = AggregateToWords(trace, token_scores);
  out.token_scores = std::move(token_scores);
  return out;
}

std::string SerializeModel(const ExpNetModel& model) {
  model.Validate();
  FloatJson params;
  params["format_version"] = kFormatVersion;
  params["kind"] = "expnet_model";
  params["num_heads"] = model.num_heads;
  params["input_dim"] = model.input_dim();
  params["hidden_dim"] = model.hidden_dim();
  params["mask"] = FeatureMaskName(model.mask);
  params["w1"] = FlatRowMajor(model.net.w1);
  params["b1"] = FlatRowMajor(model.net.b1);
  params["w2"] = FlatRowMajor(model.net.w2);
  params["b2"] = model.net.b2;
  // Parameters are float32 and train_meta holds doubles, so the two halves
  // are dumped by different JSON types and spliced into one object.
  std::string text = params.dump();
  text.pop_back();
  text += ",\"train_meta\":";
  text += MetaToJson(model.meta).dump();
  text += "}\n";
  return text;
}

ExpNetModel DeserializeModel(const std::string& text) {
  FloatJson params;
  Json meta_doc;
  try {
    params = FloatJson::parse(text);
    meta_doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("model", 0, e.what());
  }
  CheckFormatVersion(params);
  if (params.value("kind", std::string()) != "expnet_model") {
    throw ParseError("model", 0, "not an expnet_model document");
  }
  ExpNetModel model;
  try {
    model.num_heads = Field<int>(params, "num_heads");
    model.mask = ParseFeatureMask(Field<std::string>(params, "mask"));
    const int input_dim = Field<int>(params, "input_dim");
    const int hidden_dim = Field<int>(params, "hidden_dim");
    if (input_dim < 1 || hidden_dim < 1) {
      throw ValidationError("model-dims", "model",
                            "dimensions must be positive");
    }
    if (input_dim != FeatureDim(model.mask, model.num_heads)) {
      throw ValidationError(
          "model-dims", "model",
          "input_dim " + std::to_string(input_dim) + " does not match mask \"" +
              FeatureMaskName(model.mask) + "\" with " +
              std::to_string(model.num_heads) + " heads");
    }
    model.net = Network<float>::Zero(input_dim, hidden_dim);
    const auto w1 = FloatArray(params, "w1",
                               static_cast<std::size_t>(input_dim) * hidden_dim);
    for (int i = 0; i < hidden_dim; ++i) {
      for (int j = 0; j < input_dim; ++j) {
        model.net.w1(i, j) = w1[static_cast<std::size_t>(i) * input_dim + j];
      }
    }
    const auto b1 = FloatArray(params, "b1", hidden_dim);
    const auto w2 = FloatArray(params, "w2", hidden_dim);
    for (int i = 0; i < hidden_dim; ++i) {
      model.net.b1(i) = b1[i];
      model.net.w2(i) = w2[i];
    }
    model.net.b2 = Field<float>(params, "b2");
    model.meta = MetaFromJson(meta_doc.at("train_meta"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("model", 0, e.what());
  }
  model.Validate();
  return model;
}

void SaveModel(const ExpNetModel& model, const std::filesystem::path& path) {
  WriteFile(path, SerializeModel(model));
}

ExpNetModel LoadModel(const std::filesystem::path& path) {
  return DeserializeModel(ReadFile(path));
}

}  // namespace expnet
