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
#include "miaudit/core.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "miaudit/rng.hpp"

namespace miaudit {

void validate_dataset(const Dataset& dataset) {
  if (dataset.num_classes < 1) {
    throw std::invalid_argument("dataset: num_classes must be >= 1");
  }
  if (dataset.dim < 1) {
    throw std::invalid_argument("dataset: dim must be >= 1");
  }
  if (dataset.audit.empty()) {
    throw std::invalid_argument("dataset: need at least one audit sample");
  }
  std::unordered_set<std::uint64_t> ids;
  auto check = [&](const Example& e) {
    if (static_cast<int>(e.features.size()) != dataset.dim) {
      throw std::invalid_argument("dataset: example dimension mismatch");
    }
    if (e.label < 0 || e.label >= dataset.num_classes) {
      throw std::invalid_argument("dataset: label out of range");
    }
    for (double x : e.features) {
      if (!std::isfinite(x)) {
        throw std::invalid_argument("dataset: non-finite feature");
      }
    }
    if (!ids.insert(e.id).second) {
      throw std::invalid_argument("dataset: duplicate example id");
    }
  };
  for (const Example& e : dataset.fixed) check(e);
  for (const Example& e : dataset.audit) check(e);
}

double GaussianPair::sigma_in() const {
  if (dim() != 1) {
    throw std::logic_error("GaussianPair::sigma_in: pair is multivariate");
  }
  return std::sqrt(cov_in[0]);
}

double GaussianPair::sigma_out() const {
  if (dim() != 1) {
    throw std::logic_error("GaussianPair::sigma_out: pair is multivariate");
  }
  return std::sqrt(cov_out[0]);
}

GaussianPair GaussianPair::univariate(double mu_in, double sigma_in,
                                      double mu_out, double sigma_out) {
  if (sigma_in <= 0.0 || sigma_out <= 0.0) {
    throw std::invalid_argument("GaussianPair: sigma must be positive");
  }
  GaussianPair pair;
  pair.mu_in = {mu_in};
  pair.mu_out = {mu_out};
  pair.cov_in = {sigma_in * sigma_in};
  pair.cov_out = {sigma_out * sigma_out};
  return pair;
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kLinearSoftmax: return "linear-softmax";
    case ModelKind::kMlp1Hidden: return "mlp-1hidden";
    case ModelKind::kSplitAiEnsemble: return "split-ai-ensemble";
    case ModelKind::kDistilledStudent: return "distilled-student";
    case ModelKind::kContrastiveEncoderHead: return "contrastive-encoder+head";
    case ModelKind::kMaskedWrapper: return "masked-wrapper";
  }
  throw std::logic_error("to_string: unknown ModelKind");
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "linear-softmax") return ModelKind::kLinearSoftmax;
  if (name == "mlp-1hidden") return ModelKind::kMlp1Hidden;
  if (name == "split-ai-ensemble") return ModelKind::kSplitAiEnsemble;
  if (name == "distilled-student") return ModelKind::kDistilledStudent;
  if (name == "contrastive-encoder+head") return ModelKind::kContrastiveEncoderHead;
  if (name == "masked-wrapper") return ModelKind::kMaskedWrapper;
  throw std::invalid_argument("unknown model kind: " + name);
}

std::vector<double> Model::predict(const std::vector<double>& features) const {
  const std::uint64_t call = predict_calls_.fetch_add(1);
  return predict(features, derive_seed(seed(), "predict-call", call));
}

std::vector<double> Model::embed(const std::vector<double>& /*features*/) const {
  throw std::logic_error("embed: model kind " + to_string(kind()) +
                         " has no embedding surface");
}

MembershipMatrix assign_memberships(int num_models, int num_audit,
                                    std::uint64_t seed) {
  if (num_models < 2) {
    throw std::invalid_argument("assign_memberships: need at least 2 models");
  }
  if (num_models % 2 != 0) {
    throw std::invalid_argument(
        "assign_memberships: odd model count cannot include each sample in "
        "exactly half of the models");
  }
  if (num_audit < 1) {
    throw std::invalid_argument("assign_memberships: need at least 1 audit sample");
  }
  MembershipMatrix membership(num_models, num_audit);
  const int half = num_models / 2;
  for (int j = 0; j < num_audit; ++j) {
    Rng rng(derive_seed(seed, "membership-column", j));
    for (int s : rng.sample_without_replacement(num_models, half)) {
      membership.set(s, j, true);
    }
  }
  return membership;
}

std::vector<Example> training_set_for(const Dataset& dataset,
                                      const MembershipMatrix& membership,
                                      int model_index) {
  if (model_index < 0 || model_index >= membership.num_models()) {
    throw std::out_of_range("training_set_for: model index out of range");
  }
  if (static_cast<int>(dataset.audit.size()) != membership.num_audit()) {
    throw std::invalid_argument(
        "training_set_for: membership width != audit size");
  }
  std::vector<Example> train = dataset.fixed;
  for (int j = 0; j < membership.num_audit(); ++j) {
    if (membership.is_member(model_index, j)) train.push_back(dataset.audit[j]);
  }
  return train;
}

}  // namespace miaudit
