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
#ifndef MIAUDIT_DEFENSES_HPP_
#define MIAUDIT_DEFENSES_HPP_

// Desk-scale trainers for the audited defenses: plain SGD, per-example
// clipped-and-noised SGD, loss-thresholded ascent training, label smoothing
// with confidence masking, teacher-ensemble distillation with per-example
// exclusion, and two-stage contrastive pretraining with a linear head.
//
// Every trainer is bitwise deterministic given (config, data, seed) and
// single-threaded internally; fleets parallelize across trainer calls.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "miaudit/core.hpp"
#include "miaudit/models.hpp"

namespace miaudit {

// Vector augmentations: per-coordinate sign flips plus additive Gaussian
// noise, the flat-vector stand-in for image flips and shifts.
struct AugmentationPolicy {
  double noise_std = 0.1;
  double flip_prob = 0.05;
};

struct TrainConfig {
  int epochs = 40;
  int batch_size = 32;
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  int hidden_width = 64;  // MLP kinds only
  bool augment = false;   // fresh augmentation per visit when set
  AugmentationPolicy augmentation;
  std::uint64_t seed = 0;
};

struct DpSgdConfig {
  TrainConfig base;
  double clip_norm = 1.0;
  double noise_multiplier = 0.0;
};

struct RelaxLossConfig {
  TrainConfig base;
  double loss_threshold = 0.0;
};

struct HampConfig {
  TrainConfig base;
  double entropy_smoothing = 0.0;  // label-smoothing weight toward uniform
  bool mask_outputs = true;
};

struct SelenaConfig {
  TrainConfig base;
  int num_teachers = 5;
  int queries_per_sample = 2;  // teachers NOT trained on each example
  int distill_epochs = 40;
};

struct ContrastiveConfig {
  TrainConfig base;
  int embedding_dim = 16;
  double temperature = 0.5;
  int pretrain_epochs = 60;
  int head_epochs = 40;
};

// Mechanism audit hooks, invoked synchronously inside training steps.
struct TrainHooks {
  // Per-example gradient contribution norm after clipping, every step.
  std::function<void(long step, int example_index, double clipped_norm)>
      on_clipped_contribution;
  // Every loss-thresholded (modified) step: batch loss and the inner product
  // between the correct-example component of the realized update direction
  // and the cross-entropy gradient over the correctly classified examples.
  std::function<void(long step, double batch_loss, double ascent_inner_product)>
      on_relaxed_step;
};

ModelPtr train_undefended(const std::vector<Example>& train,
                          const TrainConfig& cfg, ModelKind kind);

ModelPtr train_dpsgd(const std::vector<Example>& train, const DpSgdConfig& cfg,
                     ModelKind kind, const TrainHooks* hooks = nullptr);

ModelPtr train_relaxloss(const std::vector<Example>& train,
                         const RelaxLossConfig& cfg, ModelKind kind,
                         const TrainHooks* hooks = nullptr);

// Fresh random probability vector (sorted flat-Dirichlet spacings) permuted
// so that argsort(output) == argsort(input), ties broken by index.
std::vector<double> hamp_mask(const std::vector<double>& probabilities,
                              std::uint64_t seed);

ModelPtr train_hamp(const std::vector<Example>& train, const HampConfig& cfg,
                    ModelKind kind);

ModelPtr train_selena(const std::vector<Example>& train,
                      const SelenaConfig& cfg, ModelKind kind);

// Ensemble answer path: mean prediction of the teachers NOT trained on x for
// known members, or of a deterministically hashed teacher subset otherwise.
std::vector<double> split_ai_predict(const SelenaModel& ensemble,
                                     const Example& x);

ModelPtr train_contrastive(const std::vector<Example>& train,
                           const ContrastiveConfig& cfg);

// Tagged defense configuration consumed by the orchestration layer; fields
// outside the chosen id are ignored.
struct DefenseConfig {
  std::string id = "undefended";
  ModelKind kind = ModelKind::kMlp1Hidden;
  TrainConfig train;
  // dpsgd
  double clip_norm = 1.0;
  double noise_multiplier = 0.0;
  // relaxloss
  double loss_threshold = 0.0;
  // hamp
  double entropy_smoothing = 0.0;
  bool mask_outputs = true;
  // selena
  int num_teachers = 5;
  int queries_per_sample = 2;
  int distill_epochs = 40;
  // contrastive
  int embedding_dim = 16;
  double temperature = 0.5;
  int pretrain_epochs = 60;
  int head_epochs = 40;
};

// Known defense ids, in canonical order.
const std::vector<std::string>& defense_ids();

// Trains one fleet member; `seed` overrides cfg.train.seed.  Throws
// std::invalid_argument naming defense.id for unknown ids.
ModelPtr train_defense(const DefenseConfig& cfg,
                       const std::vector<Example>& train, std::uint64_t seed,
                       const TrainHooks* hooks = nullptr);

// Mechanism parameters worth echoing into audit reports.
std::map<std::string, double> mechanism_params(const DefenseConfig& cfg);

}  // namespace miaudit

#endif  // MIAUDIT_DEFENSES_HPP_
