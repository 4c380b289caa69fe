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
#ifndef MIAUDIT_CORE_HPP_
#define MIAUDIT_CORE_HPP_

// Domain types shared across the auditing engine: examples and datasets,
// balanced membership assignment for shadow-model fleets, score tensors,
// per-sample Gaussian fits, and the polymorphic model interface.

#include <atomic>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace miaudit {

struct Example {
  std::vector<double> features;
  int label = 0;
  // Stable identifier, unique within a dataset (canary copies get fresh ids
  // so a duplicate's membership is independent of its twin's).
  std::uint64_t id = 0;
};

// A dataset split into a fixed part (always trained on) and C audit slots
// whose membership is varied across models.
struct Dataset {
  std::vector<Example> fixed;
  std::vector<Example> audit;
  int num_classes = 0;
  int dim = 0;
};

// Throws std::invalid_argument if dimensions, labels, finiteness, or id
// uniqueness are violated.
void validate_dataset(const Dataset& dataset);

// S×C binary matrix; bit (s, j) says model s trained on audit sample j.
// Every column sums to exactly S/2.
class MembershipMatrix {
 public:
  MembershipMatrix(int num_models, int num_audit)
      : num_models_(num_models),
        num_audit_(num_audit),
        bits_(static_cast<std::size_t>(num_models) * num_audit, 0) {}

  int num_models() const { return num_models_; }
  int num_audit() const { return num_audit_; }

  bool is_member(int model, int sample) const {
    return bits_[index(model, sample)] != 0;
  }
  void set(int model, int sample, bool value) {
    bits_[index(model, sample)] = value ? 1 : 0;
  }
  int column_sum(int sample) const {
    int total = 0;
    for (int s = 0; s < num_models_; ++s) total += bits_[index(s, sample)];
    return total;
  }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

 private:
  std::size_t index(int model, int sample) const {
    return static_cast<std::size_t>(model) * num_audit_ + sample;
  }
  int num_models_;
  int num_audit_;
  std::vector<std::uint8_t> bits_;
};

// S×C×A tensor of attack scores; variant a is one query view of a sample
// (e.g. one fixed augmentation).
struct ScoreTensor {
  int num_models = 0;
  int num_audit = 0;
  int num_variants = 0;
  std::vector<double> values;  // row-major: ((s * C) + j) * A + a
  std::vector<std::string> variant_names;

  ScoreTensor() = default;
  ScoreTensor(int s, int c, int a)
      : num_models(s),
        num_audit(c),
        num_variants(a),
        values(static_cast<std::size_t>(s) * c * a, 0.0) {}

  double& at(int s, int j, int a) {
    return values[(static_cast<std::size_t>(s) * num_audit + j) * num_variants + a];
  }
  double at(int s, int j, int a) const {
    return values[(static_cast<std::size_t>(s) * num_audit + j) * num_variants + a];
  }
};

// In/out score distributions for one audit sample, fit over shadow models.
// Stored as means plus covariances; dim() == 1 is the scalar case and the
// sigma_* accessors then return standard deviations.
struct GaussianPair {
  std::vector<double> mu_in;
  std::vector<double> mu_out;
  std::vector<double> cov_in;   // dim×dim, row-major
  std::vector<double> cov_out;  // dim×dim, row-major

  int dim() const { return static_cast<int>(mu_in.size()); }
  double sigma_in() const;
  double sigma_out() const;

  static GaussianPair univariate(double mu_in, double sigma_in, double mu_out,
                                 double sigma_out);
};

enum class ModelKind {
  kLinearSoftmax,
  kMlp1Hidden,
  kSplitAiEnsemble,
  kDistilledStudent,
  kContrastiveEncoderHead,
  kMaskedWrapper,
};

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

// A trained scoring function.  predict() returns class probabilities summing
// to 1 ± 1e-9; logits() is the pre-softmax surface when the kind exposes one;
// embed() exists only for the contrastive kind.
class Model {
 public:
  Model() = default;
  // The per-instance query counter starts fresh in copies.
  Model(const Model&) noexcept {}
  Model& operator=(const Model&) noexcept { return *this; }
  virtual ~Model() = default;

  virtual ModelKind kind() const = 0;
  virtual int num_classes() const = 0;
  virtual int input_dim() const = 0;
  virtual std::uint64_t seed() const = 0;

  // `stream_seed` drives any randomized output transform; deterministic
  // models ignore it.  Callers that need reproducible queries must pass an
  // explicit stream seed.
  virtual std::vector<double> predict(const std::vector<double>& features,
                                      std::uint64_t stream_seed) const = 0;

  // Convenience overload drawing a fresh stream per call.
  std::vector<double> predict(const std::vector<double>& features) const;

  virtual bool has_logits() const { return true; }
  virtual std::vector<double> logits(const std::vector<double>& features) const = 0;

  virtual bool has_embedding() const { return false; }
  virtual std::vector<double> embed(const std::vector<double>& features) const;

 private:
  mutable std::atomic<std::uint64_t> predict_calls_{0};
};

using ModelPtr = std::unique_ptr<Model>;

// Balanced membership: each column is an independent uniform S/2-subset of
// the S rows.  Throws on odd S, S < 2, or C < 1.
MembershipMatrix assign_memberships(int num_models, int num_audit,
                                    std::uint64_t seed);

// Training set of a fleet member: all fixed examples first, then member audit
// examples in slot order.
std::vector<Example> training_set_for(const Dataset& dataset,
                                      const MembershipMatrix& membership,
                                      int model_index);

}  // namespace miaudit

#endif  // MIAUDIT_CORE_HPP_
