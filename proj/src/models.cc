// Copyright 2026 The miaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "miaudit/models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "miaudit/defenses.hpp"
#include "miaudit/rng.hpp"

namespace miaudit {

std::vector<double> softmax(const std::vector<double>& logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty input");
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> probs(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - top);
    total += probs[i];
  }
  for (double& p : probs) p /= total;
  return probs;
}

int argmax(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("argmax: empty input");
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

namespace {

void check_dim(const std::vector<double>& features, int expected,
               const char* who) {
  if (static_cast<int>(features.size()) != expected) {
    throw std::invalid_argument(std::string(who) + ": feature dimension mismatch");
  }
}

}  // namespace

LinearSoftmaxModel::LinearSoftmaxModel(int dim, int num_classes,
                                       std::uint64_t seed)
    : weights(static_cast<std::size_t>(num_classes) * dim, 0.0),
      bias(num_classes, 0.0),
      dim_(dim),
      num_classes_(num_classes),
      seed_(seed) {
  if (dim < 1 || num_classes < 2) {
    throw std::invalid_argument("LinearSoftmaxModel: need dim >= 1, classes >= 2");
  }
}

std::vector<double> LinearSoftmaxModel::predict(
    const std::vector<double>& features, std::uint64_t /*stream_seed*/) const {
  return softmax(logits(features));
}

std::vector<double> LinearSoftmaxModel::logits(
    const std::vector<double>& features) const {
  check_dim(features, dim_, "LinearSoftmaxModel::logits");
  std::vector<double> z(num_classes_);
  for (int k = 0; k < num_classes_; ++k) {
    double acc = bias[k];
    const double* row = weights.data() + static_cast<std::size_t>(k) * dim_;
    for (int i = 0; i < dim_; ++i) acc += row[i] * features[i];
    z[k] = acc;
  }
  return z;
}

MlpModel::MlpModel(int dim, int num_classes, int hidden, std::uint64_t seed,
                   ModelKind tag)
    : w1(static_cast<std::size_t>(hidden) * dim, 0.0),
      b1(hidden, 0.0),
      w2(static_cast<std::size_t>(num_classes) * hidden, 0.0),
      b2(num_classes, 0.0),
      dim_(dim),
      num_classes_(num_classes),
      hidden_(hidden),
      seed_(seed),
      tag_(tag) {
  if (dim < 1 || num_classes < 1 || hidden < 1) {
    throw std::invalid_argument("MlpModel: need positive dims");
  }
  if (tag != ModelKind::kMlp1Hidden && tag != ModelKind::kDistilledStudent) {
    throw std::invalid_argument("MlpModel: tag must be mlp-1hidden or distilled-student");
  }
}

std::vector<double> MlpModel::hidden_activations(
    const std::vector<double>& features) const {
  check_dim(features, dim_, "MlpModel::hidden_activations");
  std::vector<double> h(hidden_);
  for (int j = 0; j < hidden_; ++j) {
    double acc = b1[j];
    const double* row = w1.data() + static_cast<std::size_t>(j) * dim_;
    for (int i = 0; i < dim_; ++i) acc += row[i] * features[i];
    h[j] = std::tanh(acc);
  }
  return h;
}

std::vector<double> MlpModel::logits(const std::vector<double>& features) const {
  const std::vector<double> h = hidden_activations(features);
  std::vector<double> z(num_classes_);
  for (int k = 0; k < num_classes_; ++k) {
    double acc = b2[k];
    const double* row = w2.data() + static_cast<std::size_t>(k) * hidden_;
    for (int j = 0; j < hidden_; ++j) acc += row[j] * h[j];
    z[k] = acc;
  }
  return z;
}

std::vector<double> MlpModel::predict(const std::vector<double>& features,
                                      std::uint64_t /*stream_seed*/) const {
  return softmax(logits(features));
}

MaskedModel::MaskedModel(ModelPtr inner, std::uint64_t mask_seed)
    : inner_(std::move(inner)), mask_seed_(mask_seed) {
  if (!inner_) throw std::invalid_argument("MaskedModel: null inner model");
}

std::vector<double> MaskedModel::predict(const std::vector<double>& features,
                                         std::uint64_t stream_seed) const {
  const std::vector<double> probs = inner_->predict(features, stream_seed);
  return hamp_mask(probs, derive_seed(mask_seed_, "mask-query", stream_seed));
}

std::vector<double> MaskedModel::logits(
    const std::vector<double>& /*features*/) const {
  throw std::logic_error(
      "masked-wrapper exposes no logits: the defended surface is the label "
      "and masked confidences only");
}

SelenaModel::SelenaModel(
    std::vector<ModelPtr> teachers,
    std::unordered_map<std::uint64_t, std::vector<int>> exclusions,
    ModelPtr student, std::uint64_t seed)
    : teachers_(std::move(teachers)),
      exclusions_(std::move(exclusions)),
      student_(std::move(student)),
      seed_(seed) {
  if (teachers_.empty()) throw std::invalid_argument("SelenaModel: no teachers");
  if (!student_) throw std::invalid_argument("SelenaModel: null student");
}

std::vector<double> SelenaModel::predict(const std::vector<double>& features,
                                         std::uint64_t stream_seed) const {
  return student_->predict(features, stream_seed);
}

std::vector<double> SelenaModel::logits(
    const std::vector<double>& features) const {
  return student_->logits(features);
}

ContrastiveModel::ContrastiveModel(MlpModel encoder, int num_classes,
                                   std::uint64_t seed)
    : head_w(static_cast<std::size_t>(num_classes) * encoder.num_classes(), 0.0),
      head_b(num_classes, 0.0),
      encoder_(std::move(encoder)),
      num_classes_(num_classes),
      seed_(seed) {
  if (num_classes < 2) {
    throw std::invalid_argument("ContrastiveModel: need >= 2 classes");
  }
}

std::vector<double> ContrastiveModel::embed(
    const std::vector<double>& features) const {
  // The encoder reuses the MLP forward pass; its "class" outputs are the
  // embedding coordinates (linear output layer, tanh hidden).
  return encoder_.logits(features);
}

std::vector<double> ContrastiveModel::logits(
    const std::vector<double>& features) const {
  const std::vector<double> z = embed(features);
  const int e = embedding_dim();
  std::vector<double> out(num_classes_);
  for (int k = 0; k < num_classes_; ++k) {
    double acc = head_b[k];
    const double* row = head_w.data() + static_cast<std::size_t>(k) * e;
    for (int i = 0; i < e; ++i) acc += row[i] * z[i];
    out[k] = acc;
  }
  return out;
}

std::vector<double> ContrastiveModel::predict(
    const std::vector<double>& features, std::uint64_t /*stream_seed*/) const {
  return softmax(logits(features));
}

namespace {

nlohmann::json mlp_params(const MlpModel& mlp) {
  return nlohmann::json{{"dim", mlp.input_dim()},
                        {"classes", mlp.num_classes()},
                        {"hidden", mlp.hidden_width()},
                        {"w1", mlp.w1},
                        {"b1", mlp.b1},
                        {"w2", mlp.w2},
                        {"b2", mlp.b2}};
}

MlpModel mlp_from_params(const nlohmann::json& blob, std::uint64_t seed,
                         ModelKind tag) {
  MlpModel mlp(blob.at("dim").get<int>(), blob.at("classes").get<int>(),
               blob.at("hidden").get<int>(), seed, tag);
  mlp.w1 = blob.at("w1").get<std::vector<double>>();
  mlp.b1 = blob.at("b1").get<std::vector<double>>();
  mlp.w2 = blob.at("w2").get<std::vector<double>>();
  mlp.b2 = blob.at("b2").get<std::vector<double>>();
  return mlp;
}

}  // namespace

nlohmann::json model_to_json(const Model& model) {
  nlohmann::json blob;
  blob["kind"] = to_string(model.kind());
  blob["seed"] = model.seed();
  switch (model.kind()) {
    case ModelKind::kLinearSoftmax: {
      const auto& linear = dynamic_cast<const LinearSoftmaxModel&>(model);
      blob["dim"] = linear.input_dim();
      blob["classes"] = linear.num_classes();
      blob["weights"] = linear.weights;
      blob["bias"] = linear.bias;
      break;
    }
    case ModelKind::kMlp1Hidden:
    case ModelKind::kDistilledStudent: {
      const auto& mlp = dynamic_cast<const MlpModel&>(model);
      blob["params"] = mlp_params(mlp);
      break;
    }
    case ModelKind::kMaskedWrapper: {
      const auto& masked = dynamic_cast<const MaskedModel&>(model);
      blob["inner"] = model_to_json(masked.inner());
      break;
    }
    case ModelKind::kSplitAiEnsemble: {
      const auto& selena = dynamic_cast<const SelenaModel&>(model);
      nlohmann::json teachers = nlohmann::json::array();
      for (const ModelPtr& t : selena.teachers()) {
        teachers.push_back(model_to_json(*t));
      }
      blob["teachers"] = std::move(teachers);
      // Sorted by id so serialization is byte-stable.
      std::vector<std::pair<std::uint64_t, std::vector<int>>> rows(
          selena.exclusions().begin(), selena.exclusions().end());
      std::sort(rows.begin(), rows.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      nlohmann::json exclusions = nlohmann::json::array();
      for (const auto& [id, teachers_for_id] : rows) {
        exclusions.push_back(nlohmann::json{{"id", id}, {"teachers", teachers_for_id}});
      }
      blob["exclusions"] = std::move(exclusions);
      blob["student"] = model_to_json(selena.student());
      break;
    }
    case ModelKind::kContrastiveEncoderHead: {
      const auto& contrastive = dynamic_cast<const ContrastiveModel&>(model);
      blob["classes"] = contrastive.num_classes();
      blob["encoder"] = mlp_params(contrastive.encoder());
      blob["head_w"] = contrastive.head_w;
      blob["head_b"] = contrastive.head_b;
      break;
    }
  }
  return blob;
}

ModelPtr model_from_json(const nlohmann::json& blob) {
  const ModelKind kind = model_kind_from_string(blob.at("kind").get<std::string>());
  const std::uint64_t seed = blob.at("seed").get<std::uint64_t>();
  switch (kind) {
    case ModelKind::kLinearSoftmax: {
      auto linear = std::make_unique<LinearSoftmaxModel>(
          blob.at("dim").get<int>(), blob.at("classes").get<int>(), seed);
      linear->weights = blob.at("weights").get<std::vector<double>>();
      linear->bias = blob.at("bias").get<std::vector<double>>();
      return linear;
    }
    case ModelKind::kMlp1Hidden:
    case ModelKind::kDistilledStudent: {
      return std::make_unique<MlpModel>(
          mlp_from_params(blob.at("params"), seed, kind));
    }
    case ModelKind::kMaskedWrapper: {
      return std::make_unique<MaskedModel>(model_from_json(blob.at("inner")),
                                           seed);
    }
    case ModelKind::kSplitAiEnsemble: {
      std::vector<ModelPtr> teachers;
      for (const nlohmann::json& t : blob.at("teachers")) {
        teachers.push_back(model_from_json(t));
      }
      std::unordered_map<std::uint64_t, std::vector<int>> exclusions;
      for (const nlohmann::json& row : blob.at("exclusions")) {
        exclusions[row.at("id").get<std::uint64_t>()] =
            row.at("teachers").get<std::vector<int>>();
      }
      return std::make_unique<SelenaModel>(std::move(teachers),
                                           std::move(exclusions),
                                           model_from_json(blob.at("student")),
                                           seed);
    }
    case ModelKind::kContrastiveEncoderHead: {
      auto contrastive = std::make_unique<ContrastiveModel>(
          mlp_from_params(blob.at("encoder"), seed, ModelKind::kMlp1Hidden),
          blob.at("classes").get<int>(), seed);
      contrastive->head_w = blob.at("head_w").get<std::vector<double>>();
      contrastive->head_b = blob.at("head_b").get<std::vector<double>>();
      return contrastive;
    }
  }
  throw std::logic_error("model_from_json: unhandled kind");
}

}  // namespace miaudit
