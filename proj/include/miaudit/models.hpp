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
#ifndef MIAUDIT_MODELS_HPP_
#define MIAUDIT_MODELS_HPP_

// Concrete model families: plain trainable nets (linear softmax, one-hidden
// MLP), the confidence-masking wrapper, the teacher-ensemble-plus-student
// composite, and the contrastive encoder with a linear head.  Serialization
// round-trips every family exactly.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "miaudit/core.hpp"

namespace miaudit {

// Numerically stable softmax (max-subtracted); output sums to 1.
std::vector<double> softmax(const std::vector<double>& logits);

// Index of the largest entry; ties resolved to the lowest index.
int argmax(const std::vector<double>& values);

class LinearSoftmaxModel final : public Model {
 public:
  LinearSoftmaxModel(int dim, int num_classes, std::uint64_t seed);

  ModelKind kind() const override { return ModelKind::kLinearSoftmax; }
  int num_classes() const override { return num_classes_; }
  int input_dim() const override { return dim_; }
  std::uint64_t seed() const override { return seed_; }
  std::vector<double> predict(const std::vector<double>& features,
                              std::uint64_t stream_seed) const override;
  std::vector<double> logits(const std::vector<double>& features) const override;

  std::vector<double> weights;  // num_classes x dim, row-major
  std::vector<double> bias;     // num_classes

 private:
  int dim_;
  int num_classes_;
  std::uint64_t seed_;
};

// One hidden tanh layer.  The kind tag distinguishes a directly trained net
// from a student distilled out of a teacher ensemble; both share parameters
// and forward pass.
class MlpModel final : public Model {
 public:
  MlpModel(int dim, int num_classes, int hidden, std::uint64_t seed,
           ModelKind tag = ModelKind::kMlp1Hidden);

  ModelKind kind() const override { return tag_; }
  int num_classes() const override { return num_classes_; }
  int input_dim() const override { return dim_; }
  int hidden_width() const { return hidden_; }
  std::uint64_t seed() const override { return seed_; }
  std::vector<double> predict(const std::vector<double>& features,
                              std::uint64_t stream_seed) const override;
  std::vector<double> logits(const std::vector<double>& features) const override;

  // Hidden activations tanh(w1 x + b1); exposed for encoder reuse.
  std::vector<double> hidden_activations(const std::vector<double>& features) const;

  std::vector<double> w1;  // hidden x dim
  std::vector<double> b1;  // hidden
  std::vector<double> w2;  // num_classes x hidden
  std::vector<double> b2;  // num_classes

 private:
  int dim_;
  int num_classes_;
  int hidden_;
  std::uint64_t seed_;
  ModelKind tag_;
};

// Confidence-masking wrapper: predictions are re-randomized probability
// vectors that keep only the inner model's class ranking; logits are
// deliberately unavailable (the defended surface is label + masked scores).
class MaskedModel final : public Model {
 public:
  MaskedModel(ModelPtr inner, std::uint64_t mask_seed);

  ModelKind kind() const override { return ModelKind::kMaskedWrapper; }
  int num_classes() const override { return inner_->num_classes(); }
  int input_dim() const override { return inner_->input_dim(); }
  std::uint64_t seed() const override { return mask_seed_; }
  std::vector<double> predict(const std::vector<double>& features,
                              std::uint64_t stream_seed) const override;
  bool has_logits() const override { return false; }
  std::vector<double> logits(const std::vector<double>& features) const override;

  const Model& inner() const { return *inner_; }

 private:
  ModelPtr inner_;
  std::uint64_t mask_seed_;
};

// Teacher ensemble with per-example exclusion sets plus the distilled
// student.  The attacker-visible surface (predict/logits) is the student;
// the ensemble answer path is split_ai_predict in the defense layer.
class SelenaModel final : public Model {
 public:
  SelenaModel(std::vector<ModelPtr> teachers,
              std::unordered_map<std::uint64_t, std::vector<int>> exclusions,
              ModelPtr student, std::uint64_t seed);

  ModelKind kind() const override { return ModelKind::kSplitAiEnsemble; }
  int num_classes() const override { return student_->num_classes(); }
  int input_dim() const override { return student_->input_dim(); }
  std::uint64_t seed() const override { return seed_; }
  std::vector<double> predict(const std::vector<double>& features,
                              std::uint64_t stream_seed) const override;
  std::vector<double> logits(const std::vector<double>& features) const override;

  const std::vector<ModelPtr>& teachers() const { return teachers_; }
  const std::unordered_map<std::uint64_t, std::vector<int>>& exclusions() const {
    return exclusions_;
  }
  const Model& student() const { return *student_; }

 private:
  std::vector<ModelPtr> teachers_;
  std::unordered_map<std::uint64_t, std::vector<int>> exclusions_;
  ModelPtr student_;
  std::uint64_t seed_;
};

// Feature encoder (one hidden tanh layer, linear output = embedding) plus a
// linear classification head trained on frozen embeddings.
class ContrastiveModel final : public Model {
 public:
  ContrastiveModel(MlpModel encoder, int num_classes, std::uint64_t seed);

  ModelKind kind() const override { return ModelKind::kContrastiveEncoderHead; }
  int num_classes() const override { return num_classes_; }
  int input_dim() const override { return encoder_.input_dim(); }
  int embedding_dim() const { return encoder_.num_classes(); }
  std::uint64_t seed() const override { return seed_; }
  std::vector<double> predict(const std::vector<double>& features,
                              std::uint64_t stream_seed) const override;
  std::vector<double> logits(const std::vector<double>& features) const override;
  bool has_embedding() const override { return true; }
  std::vector<double> embed(const std::vector<double>& features) const override;

  MlpModel& encoder() { return encoder_; }
  const MlpModel& encoder() const { return encoder_; }

  std::vector<double> head_w;  // num_classes x embedding_dim
  std::vector<double> head_b;  // num_classes

 private:
  MlpModel encoder_;
  int num_classes_;
  std::uint64_t seed_;
};

// Exact parameter serialization for caching and artifact storage.  The JSON
// values hold full-precision doubles; pair with CBOR encoding on disk for
// bit-exact round trips.
nlohmann::json model_to_json(const Model& model);
ModelPtr model_from_json(const nlohmann::json& blob);

}  // namespace miaudit

#endif  // MIAUDIT_MODELS_HPP_
