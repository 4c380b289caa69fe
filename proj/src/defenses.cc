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
#include "miaudit/defenses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "miaudit/rng.hpp"

namespace miaudit {
namespace {

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (cfg.learning_rate < 0.0) {
    throw std::invalid_argument("train: learning_rate must be >= 0");
  }
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) {
    throw std::invalid_argument("train: momentum must be in [0, 1)");
  }
  if (cfg.weight_decay < 0.0) {
    throw std::invalid_argument("train: weight_decay must be >= 0");
  }
  if (cfg.hidden_width < 1) {
    throw std::invalid_argument("train: hidden_width must be >= 1");
  }
}

int infer_num_classes(const std::vector<Example>& train) {
  int top = 0;
  for (const Example& e : train) top = std::max(top, e.label);
  return top + 1;
}

// Fresh augmented view: per-coordinate sign flip, then additive noise.
std::vector<double> augment_visit(const std::vector<double>& features,
                                  const AugmentationPolicy& policy, Rng& rng) {
  std::vector<double> out(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double sign = rng.uniform() < policy.flip_prob ? -1.0 : 1.0;
    out[i] = sign * features[i];
  }
  for (double& x : out) x += policy.noise_std * rng.gaussian();
  return out;
}

// Flat-parameter view of the two trainable architectures, with exact
// cross-entropy gradients.  The layout is [w, b] for linear softmax and
// [w1, b1, w2, b2] for the one-hidden tanh MLP.
class ParamNet {
 public:
  ParamNet(ModelKind kind, int dim, int classes, int hidden,
           std::uint64_t init_seed)
      : kind_(kind), dim_(dim), classes_(classes), hidden_(hidden) {
    if (kind == ModelKind::kLinearSoftmax) {
      hidden_ = 0;
      w_size_ = static_cast<std::size_t>(classes_) * dim_;
      params_.assign(w_size_ + classes_, 0.0);
    } else if (kind == ModelKind::kMlp1Hidden) {
      w1_size_ = static_cast<std::size_t>(hidden_) * dim_;
      w2_off_ = w1_size_ + hidden_;
      b2_off_ = w2_off_ + static_cast<std::size_t>(classes_) * hidden_;
      params_.assign(b2_off_ + classes_, 0.0);
    } else {
      throw std::invalid_argument(
          "trainable kinds are linear-softmax and mlp-1hidden");
    }
    Rng rng(init_seed);
    if (kind_ == ModelKind::kLinearSoftmax) {
      const double scale = 1.0 / std::sqrt(static_cast<double>(dim_));
      for (std::size_t i = 0; i < w_size_; ++i) params_[i] = scale * rng.gaussian();
    } else {
      const double scale1 = 1.0 / std::sqrt(static_cast<double>(dim_));
      for (std::size_t i = 0; i < w1_size_; ++i) params_[i] = scale1 * rng.gaussian();
      const double scale2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
      for (std::size_t i = w2_off_; i < b2_off_; ++i) params_[i] = scale2 * rng.gaussian();
    }
  }

  std::size_t size() const { return params_.size(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  int classes() const { return classes_; }

  // Logits plus (for the MLP) hidden activations needed by backward.
  void forward(const std::vector<double>& x, std::vector<double>& z,
               std::vector<double>& h) const {
    z.assign(classes_, 0.0);
    if (kind_ == ModelKind::kLinearSoftmax) {
      for (int k = 0; k < classes_; ++k) {
        double acc = params_[w_size_ + k];
        const double* row = params_.data() + static_cast<std::size_t>(k) * dim_;
        for (int i = 0; i < dim_; ++i) acc += row[i] * x[i];
        z[k] = acc;
      }
      return;
    }
    h.assign(hidden_, 0.0);
    for (int j = 0; j < hidden_; ++j) {
      double acc = params_[w1_size_ + j];
      const double* row = params_.data() + static_cast<std::size_t>(j) * dim_;
      for (int i = 0; i < dim_; ++i) acc += row[i] * x[i];
      h[j] = std::tanh(acc);
    }
    for (int k = 0; k < classes_; ++k) {
      double acc = params_[b2_off_ + k];
      const double* row =
          params_.data() + w2_off_ + static_cast<std::size_t>(k) * hidden_;
      for (int j = 0; j < hidden_; ++j) acc += row[j] * h[j];
      z[k] = acc;
    }
  }

  // Parameter gradient from an output-layer gradient dz (pre-softmax space).
  void backward_from_dz(const std::vector<double>& x,
                        const std::vector<double>& h,
                        const std::vector<double>& dz,
                        std::vector<double>& grad) const {
    grad.assign(params_.size(), 0.0);
    if (kind_ == ModelKind::kLinearSoftmax) {
      for (int k = 0; k < classes_; ++k) {
        double* row = grad.data() + static_cast<std::size_t>(k) * dim_;
        for (int i = 0; i < dim_; ++i) row[i] = dz[k] * x[i];
        grad[w_size_ + k] = dz[k];
      }
      return;
    }
    std::vector<double> da(hidden_, 0.0);
    for (int k = 0; k < classes_; ++k) {
      double* row = grad.data() + w2_off_ + static_cast<std::size_t>(k) * hidden_;
      for (int j = 0; j < hidden_; ++j) row[j] = dz[k] * h[j];
      grad[b2_off_ + k] = dz[k];
    }
    for (int j = 0; j < hidden_; ++j) {
      double acc = 0.0;
      for (int k = 0; k < classes_; ++k) {
        acc += dz[k] * params_[w2_off_ + static_cast<std::size_t>(k) * hidden_ + j];
      }
      da[j] = acc * (1.0 - h[j] * h[j]);
    }
    for (int j = 0; j < hidden_; ++j) {
      double* row = grad.data() + static_cast<std::size_t>(j) * dim_;
      for (int i = 0; i < dim_; ++i) row[i] = da[j] * x[i];
      grad[w1_size_ + j] = da[j];
    }
  }

  // Per-example cross-entropy gradient against a soft target; returns the
  // class probabilities and writes -sum target*ln(prob) to loss_out.
  std::vector<double> grad_ce(const std::vector<double>& x,
                              const std::vector<double>& target,
                              std::vector<double>& grad,
                              double* loss_out) const {
    std::vector<double> z, h;
    forward(x, z, h);
    std::vector<double> p = softmax(z);
    if (loss_out != nullptr) {
      double loss = 0.0;
      for (int k = 0; k < classes_; ++k) {
        if (target[k] != 0.0) loss -= target[k] * std::log(std::max(p[k], 1e-300));
      }
      *loss_out = loss;
    }
    std::vector<double> dz(classes_);
    for (int k = 0; k < classes_; ++k) dz[k] = p[k] - target[k];
    backward_from_dz(x, h, dz, grad);
    return p;
  }

  // Gradient from a raw output-space gradient (no softmax); used by the
  // contrastive loss where the output layer is the embedding itself.
  void grad_output(const std::vector<double>& x, const std::vector<double>& dout,
                   std::vector<double>& grad) const {
    std::vector<double> z, h;
    forward(x, z, h);
    backward_from_dz(x, h, dout, grad);
  }

  ModelPtr to_model(std::uint64_t seed, ModelKind tag) const {
    if (kind_ == ModelKind::kLinearSoftmax) {
      auto model = std::make_unique<LinearSoftmaxModel>(dim_, classes_, seed);
      std::copy(params_.begin(), params_.begin() + w_size_, model->weights.begin());
      std::copy(params_.begin() + w_size_, params_.end(), model->bias.begin());
      return model;
    }
    auto model = std::make_unique<MlpModel>(dim_, classes_, hidden_, seed, tag);
    std::copy(params_.begin(), params_.begin() + w1_size_, model->w1.begin());
    std::copy(params_.begin() + w1_size_, params_.begin() + w2_off_, model->b1.begin());
    std::copy(params_.begin() + w2_off_, params_.begin() + b2_off_, model->w2.begin());
    std::copy(params_.begin() + b2_off_, params_.end(), model->b2.begin());
    return model;
  }

 private:
  ModelKind kind_;
  int dim_;
  int classes_;
  int hidden_;
  std::size_t w_size_ = 0;   // linear only
  std::size_t w1_size_ = 0;  // mlp only
  std::size_t w2_off_ = 0;
  std::size_t b2_off_ = 0;
  std::vector<double> params_;
};

double l2_norm(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

enum class Mechanism { kPlain, kDpSgd, kRelaxLoss };

struct MechanismParams {
  Mechanism mechanism = Mechanism::kPlain;
  double clip_norm = 0.0;
  double noise_multiplier = 0.0;
  double loss_threshold = 0.0;
  const TrainHooks* hooks = nullptr;
};

// Soft target for one training example, written into `target`.
using TargetFn =
    std::function<void(int example_index, const Example&, std::vector<double>&)>;

void one_hot_target(int label, int classes, std::vector<double>& target) {
  target.assign(classes, 0.0);
  target[label] = 1.0;
}

// The shared minibatch SGD engine.  All defense trainers route through this
// loop so the mechanism-off configurations (sigma=0, loss_threshold=0,
// smoothing=0) replay the undefended arithmetic bit for bit.
std::vector<double> run_sgd_params(ParamNet& net,
                                   const std::vector<Example>& train,
                                   const TrainConfig& cfg,
                                   const MechanismParams& mech,
                                   const TargetFn& target_fn) {
  const int n = static_cast<int>(train.size());
  const int classes = net.classes();
  std::vector<double> velocity(net.size(), 0.0);
  std::vector<double> grad_batch(net.size(), 0.0);
  std::vector<double> grad_example;
  std::vector<double> grad_correct_sum(net.size(), 0.0);
  std::vector<double> target(classes, 0.0);
  std::vector<double>& params = net.params();

  struct View {
    int index;                   // position in `train`
    std::vector<double> features;  // possibly augmented
  };
  std::vector<View> batch;
  batch.reserve(cfg.batch_size);

  long step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, "shuffle", epoch));
    const std::vector<int> order = shuffle_rng.permutation(n);
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int end = std::min(start + cfg.batch_size, n);
      const int batch_n = end - start;

      batch.clear();
      for (int pos = start; pos < end; ++pos) {
        const int idx = order[pos];
        View view;
        view.index = idx;
        if (cfg.augment) {
          Rng aug_rng(derive_seed(cfg.seed, "train-aug", epoch, pos));
          view.features = augment_visit(train[idx].features, cfg.augmentation, aug_rng);
        } else {
          view.features = train[idx].features;
        }
        batch.push_back(std::move(view));
      }

      std::fill(grad_batch.begin(), grad_batch.end(), 0.0);

      bool relaxed_step = false;
      double batch_loss = 0.0;
      if (mech.mechanism == Mechanism::kRelaxLoss) {
        // First pass: hard-label batch loss decides the step type.
        std::vector<double> z, h;
        for (const View& view : batch) {
          net.forward(view.features, z, h);
          const std::vector<double> p = softmax(z);
          batch_loss -=
              std::log(std::max(p[train[view.index].label], 1e-300));
        }
        batch_loss /= batch_n;
        relaxed_step = batch_loss <= mech.loss_threshold;
      }

      if (relaxed_step) {
        std::fill(grad_correct_sum.begin(), grad_correct_sum.end(), 0.0);
        for (const View& view : batch) {
          const Example& example = train[view.index];
          one_hot_target(example.label, classes, target);
          double loss = 0.0;
          const std::vector<double> p =
              net.grad_ce(view.features, target, grad_example, &loss);
          if (argmax(p) == example.label) {
            // Correctly classified: ascend on cross-entropy.
            for (std::size_t i = 0; i < grad_batch.size(); ++i) {
              grad_batch[i] -= grad_example[i];
              grad_correct_sum[i] += grad_example[i];
            }
          } else {
            // Misclassified: descend toward the flattened posterior that
            // keeps the true-class probability and spreads the rest.
            const double rest = (1.0 - p[example.label]) / (classes - 1);
            for (int k = 0; k < classes; ++k) target[k] = rest;
            target[example.label] = p[example.label];
            net.grad_ce(view.features, target, grad_example, nullptr);
            for (std::size_t i = 0; i < grad_batch.size(); ++i) {
              grad_batch[i] += grad_example[i];
            }
          }
        }
        if (mech.hooks != nullptr && mech.hooks->on_relaxed_step) {
          // Correct-example component of the realized (pre-rate) update is
          // +grad_correct_sum / batch_n; its inner product with the CE
          // gradient over the correct examples certifies the ascent sign.
          double inner = 0.0;
          for (std::size_t i = 0; i < grad_correct_sum.size(); ++i) {
            inner += (grad_correct_sum[i] / batch_n) * grad_correct_sum[i];
          }
          mech.hooks->on_relaxed_step(step, batch_loss, inner);
        }
      } else {
        for (const View& view : batch) {
          const Example& example = train[view.index];
          target_fn(view.index, example, target);
          net.grad_ce(view.features, target, grad_example, nullptr);
          if (mech.mechanism == Mechanism::kDpSgd) {
            double norm = l2_norm(grad_example);
            if (norm > mech.clip_norm) {
              const double scale = mech.clip_norm / norm;
              for (double& g : grad_example) g *= scale;
              norm = l2_norm(grad_example);
            }
            if (mech.hooks != nullptr && mech.hooks->on_clipped_contribution) {
              mech.hooks->on_clipped_contribution(step, view.index, norm);
            }
          }
          for (std::size_t i = 0; i < grad_batch.size(); ++i) {
            grad_batch[i] += grad_example[i];
          }
        }
      }

      for (double& g : grad_batch) g /= batch_n;
      if (mech.mechanism == Mechanism::kDpSgd && mech.noise_multiplier > 0.0) {
        Rng noise_rng(derive_seed(cfg.seed, "dpsgd-noise", step));
        const double noise_std =
            mech.noise_multiplier * mech.clip_norm / batch_n;
        for (double& g : grad_batch) g += noise_std * noise_rng.gaussian();
      }

      for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad_batch[i] + cfg.weight_decay * params[i];
        velocity[i] = cfg.momentum * velocity[i] + g;
        params[i] -= cfg.learning_rate * velocity[i];
      }
      ++step;
    }
  }
  return params;
}

ModelPtr run_sgd(const std::vector<Example>& train, const TrainConfig& cfg,
                 ModelKind kind, const MechanismParams& mech,
                 const TargetFn& target_fn,
                 ModelKind result_tag = ModelKind::kMlp1Hidden) {
  if (train.empty()) throw std::invalid_argument("train: empty training set");
  validate_train_config(cfg);
  const int dim = static_cast<int>(train[0].features.size());
  const int classes = std::max(2, infer_num_classes(train));
  ParamNet net(kind, dim, classes, cfg.hidden_width, derive_seed(cfg.seed, "init"));
  run_sgd_params(net, train, cfg, mech, target_fn);
  const ModelKind tag =
      kind == ModelKind::kMlp1Hidden ? result_tag : ModelKind::kLinearSoftmax;
  return net.to_model(cfg.seed, tag);
}

TargetFn hard_targets() {
  return [](int, const Example& example, std::vector<double>& target) {
    one_hot_target(example.label, static_cast<int>(target.size()), target);
  };
}

}  // namespace

ModelPtr train_undefended(const std::vector<Example>& train,
                          const TrainConfig& cfg, ModelKind kind) {
  return run_sgd(train, cfg, kind, MechanismParams{}, hard_targets());
}

ModelPtr train_dpsgd(const std::vector<Example>& train, const DpSgdConfig& cfg,
                     ModelKind kind, const TrainHooks* hooks) {
  if (cfg.clip_norm <= 0.0) {
    throw std::invalid_argument("dpsgd: clip_norm must be > 0");
  }
  if (cfg.noise_multiplier < 0.0) {
    throw std::invalid_argument("dpsgd: noise_multiplier must be >= 0");
  }
  MechanismParams mech;
  mech.mechanism = Mechanism::kDpSgd;
  mech.clip_norm = cfg.clip_norm;
  mech.noise_multiplier = cfg.noise_multiplier;
  mech.hooks = hooks;
  return run_sgd(train, cfg.base, kind, mech, hard_targets());
}

ModelPtr train_relaxloss(const std::vector<Example>& train,
                         const RelaxLossConfig& cfg, ModelKind kind,
                         const TrainHooks* hooks) {
  if (cfg.loss_threshold < 0.0) {
    throw std::invalid_argument("relaxloss: loss_threshold must be >= 0");
  }
  MechanismParams mech;
  mech.mechanism = Mechanism::kRelaxLoss;
  mech.loss_threshold = cfg.loss_threshold;
  mech.hooks = hooks;
  return run_sgd(train, cfg.base, kind, mech, hard_targets());
}

std::vector<double> hamp_mask(const std::vector<double>& probabilities,
                              std::uint64_t seed) {
  const int k = static_cast<int>(probabilities.size());
  if (k < 1) throw std::invalid_argument("hamp_mask: empty input");
  double total = 0.0;
  for (double p : probabilities) total += p;
  if (std::abs(total - 1.0) > 1e-6) {
    throw std::invalid_argument("hamp_mask: input is not a probability vector");
  }
  if (k == 1) return {1.0};

  // Flat-Dirichlet draw via sorted uniform spacings.
  Rng rng(seed);
  std::vector<double> cuts(k - 1);
  for (double& c : cuts) c = rng.uniform();
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> spacings(k);
  spacings[0] = cuts[0];
  for (int i = 1; i < k - 1; ++i) spacings[i] = cuts[i] - cuts[i - 1];
  spacings[k - 1] = 1.0 - cuts[k - 2];
  std::sort(spacings.begin(), spacings.end(), std::greater<double>());

  // Input ranking, descending with ties broken by index.
  std::vector<int> ranking(k);
  std::iota(ranking.begin(), ranking.end(), 0);
  std::stable_sort(ranking.begin(), ranking.end(), [&](int a, int b) {
    return probabilities[a] > probabilities[b];
  });

  std::vector<double> out(k, 0.0);
  for (int r = 0; r < k; ++r) out[ranking[r]] = spacings[r];
  return out;
}

ModelPtr train_hamp(const std::vector<Example>& train, const HampConfig& cfg,
                    ModelKind kind) {
  if (cfg.entropy_smoothing < 0.0 || cfg.entropy_smoothing >= 1.0) {
    throw std::invalid_argument("hamp: entropy_smoothing must be in [0, 1)");
  }
  const double smoothing = cfg.entropy_smoothing;
  TargetFn smoothed = [smoothing](int, const Example& example,
                                  std::vector<double>& target) {
    const int classes = static_cast<int>(target.size());
    const double uniform = smoothing / classes;
    for (double& t : target) t = uniform;
    target[example.label] += 1.0 - smoothing;
  };
  ModelPtr inner = run_sgd(train, cfg.base, kind, MechanismParams{}, smoothed);
  if (!cfg.mask_outputs) return inner;
  return std::make_unique<MaskedModel>(
      std::move(inner), derive_seed(cfg.base.seed, "hamp-mask-stream"));
}

ModelPtr train_selena(const std::vector<Example>& train,
                      const SelenaConfig& cfg, ModelKind kind) {
  if (train.empty()) throw std::invalid_argument("selena: empty training set");
  if (cfg.num_teachers < 2) {
    throw std::invalid_argument("selena: need at least 2 teachers");
  }
  if (cfg.queries_per_sample < 1 || cfg.queries_per_sample >= cfg.num_teachers) {
    throw std::invalid_argument(
        "selena: queries_per_sample must satisfy 1 <= L < num_teachers");
  }
  if (cfg.distill_epochs < 1) {
    throw std::invalid_argument("selena: distill_epochs must be >= 1");
  }
  const int n = static_cast<int>(train.size());
  const std::uint64_t seed = cfg.base.seed;

  // Exclusion sampling: each example draws the L teachers that must not see
  // it, which realizes "not trained on x" with exact multiplicity.
  std::vector<std::vector<int>> excluded(n);
  std::unordered_map<std::uint64_t, std::vector<int>> exclusions_by_id;
  exclusions_by_id.reserve(n);
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, "selena-exclusion", i));
    std::vector<int> picks =
        rng.sample_without_replacement(cfg.num_teachers, cfg.queries_per_sample);
    std::sort(picks.begin(), picks.end());
    excluded[i] = picks;
    if (!exclusions_by_id.emplace(train[i].id, picks).second) {
      throw std::invalid_argument("selena: duplicate example id in training set");
    }
  }

  std::vector<ModelPtr> teachers;
  teachers.reserve(cfg.num_teachers);
  for (int t = 0; t < cfg.num_teachers; ++t) {
    std::vector<Example> chunk;
    for (int i = 0; i < n; ++i) {
      if (std::find(excluded[i].begin(), excluded[i].end(), t) ==
          excluded[i].end()) {
        chunk.push_back(train[i]);
      }
    }
    if (chunk.empty()) {
      throw std::runtime_error("selena: teacher received an empty chunk");
    }
    TrainConfig teacher_cfg = cfg.base;
    teacher_cfg.seed = derive_seed(seed, "selena-teacher", t);
    teachers.push_back(run_sgd(chunk, teacher_cfg, kind, MechanismParams{},
                               hard_targets()));
  }

  // Distillation targets: mean soft prediction of each example's excluding
  // teachers (the ensemble answer an attacker would see for a member).
  const int classes = teachers[0]->num_classes();
  std::vector<std::vector<double>> soft_targets(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> mean(classes, 0.0);
    for (int t : excluded[i]) {
      const std::vector<double> p = teachers[t]->predict(
          train[i].features, derive_seed(seed, "selena-distill-query", i, t));
      for (int c = 0; c < classes; ++c) mean[c] += p[c];
    }
    for (double& m : mean) m /= static_cast<double>(excluded[i].size());
    soft_targets[i] = std::move(mean);
  }

  TrainConfig student_cfg = cfg.base;
  student_cfg.seed = derive_seed(seed, "selena-student");
  student_cfg.epochs = cfg.distill_epochs;
  TargetFn distill_targets = [&soft_targets](int index, const Example&,
                                             std::vector<double>& target) {
    target = soft_targets[index];
  };
  ModelPtr student = run_sgd(train, student_cfg, kind, MechanismParams{},
                             distill_targets, ModelKind::kDistilledStudent);

  return std::make_unique<SelenaModel>(std::move(teachers),
                                       std::move(exclusions_by_id),
                                       std::move(student), seed);
}

std::vector<double> split_ai_predict(const SelenaModel& ensemble,
                                     const Example& x) {
  const auto& exclusions = ensemble.exclusions();
  if (exclusions.empty()) {
    throw std::logic_error("split_ai_predict: ensemble has no exclusion table");
  }
  const int num_teachers = static_cast<int>(ensemble.teachers().size());
  std::vector<int> picks;
  if (auto it = exclusions.find(x.id); it != exclusions.end()) {
    picks = it->second;
  } else {
    // Unknown sample: a deterministic hash of the id selects the subset, so
    // repeated queries agree.
    const int l = static_cast<int>(exclusions.begin()->second.size());
    Rng rng(derive_seed(ensemble.seed(), "split-ai-unknown", x.id));
    picks = rng.sample_without_replacement(num_teachers, l);
    std::sort(picks.begin(), picks.end());
  }
  const int classes = ensemble.num_classes();
  std::vector<double> mean(classes, 0.0);
  for (int t : picks) {
    const std::vector<double> p = ensemble.teachers()[t]->predict(
        x.features, derive_seed(ensemble.seed(), "split-ai-query", x.id, t));
    for (int c = 0; c < classes; ++c) mean[c] += p[c];
  }
  for (double& m : mean) m /= static_cast<double>(picks.size());
  return mean;
}

ModelPtr train_contrastive(const std::vector<Example>& train,
                           const ContrastiveConfig& cfg) {
  if (train.empty()) throw std::invalid_argument("contrastive: empty training set");
  validate_train_config(cfg.base);
  if (cfg.base.batch_size < 2) {
    throw std::invalid_argument(
        "contrastive: batch_size must be >= 2 (a batch supplies the negatives)");
  }
  if (cfg.temperature <= 0.0) {
    throw std::invalid_argument("contrastive: temperature must be > 0");
  }
  if (cfg.embedding_dim < 1) {
    throw std::invalid_argument("contrastive: embedding_dim must be >= 1");
  }
  if (cfg.pretrain_epochs < 1 || cfg.head_epochs < 1) {
    throw std::invalid_argument("contrastive: epochs must be >= 1");
  }
  if (cfg.base.augmentation.noise_std <= 0.0 &&
      cfg.base.augmentation.flip_prob <= 0.0) {
    throw std::invalid_argument(
        "contrastive: degenerate augmentation policy (views would coincide)");
  }
  const int n = static_cast<int>(train.size());
  const int dim = static_cast<int>(train[0].features.size());
  const int classes = std::max(2, infer_num_classes(train));
  const std::uint64_t seed = cfg.base.seed;

  ParamNet encoder(ModelKind::kMlp1Hidden, dim, cfg.embedding_dim,
                   cfg.base.hidden_width, derive_seed(seed, "encoder-init"));
  std::vector<double> velocity(encoder.size(), 0.0);
  std::vector<double> grad_batch(encoder.size(), 0.0);
  std::vector<double> grad_view;
  std::vector<double>& params = encoder.params();

  // Stage 1: NT-Xent over augmentation pairs; labels are never read.
  for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(seed, "contrastive-shuffle", epoch));
    const std::vector<int> order = shuffle_rng.permutation(n);
    for (int start = 0; start < n; start += cfg.base.batch_size) {
      const int end = std::min(start + cfg.base.batch_size, n);
      const int batch_n = end - start;
      if (batch_n < 2) continue;  // a singleton batch has no negatives
      const int views_n = 2 * batch_n;

      std::vector<std::vector<double>> inputs(views_n);
      std::vector<std::vector<double>> z(views_n);
      std::vector<std::vector<double>> unit(views_n);
      std::vector<double> norm(views_n);
      for (int p = 0; p < batch_n; ++p) {
        const Example& example = train[order[start + p]];
        for (int v = 0; v < 2; ++v) {
          Rng aug_rng(derive_seed(seed, "contrastive-aug", epoch, start + p, v));
          const int a = 2 * p + v;
          inputs[a] = augment_visit(example.features, cfg.base.augmentation, aug_rng);
          std::vector<double> h_unused;
          encoder.forward(inputs[a], z[a], h_unused);
          norm[a] = l2_norm(z[a]);
          if (norm[a] == 0.0) {
            throw std::runtime_error("contrastive: zero-norm embedding");
          }
          unit[a] = z[a];
          for (double& u : unit[a]) u /= norm[a];
        }
      }

      // Cosine similarity matrix (scaled by temperature), diagonal excluded.
      std::vector<double> sim(static_cast<std::size_t>(views_n) * views_n, 0.0);
      for (int a = 0; a < views_n; ++a) {
        for (int b = a + 1; b < views_n; ++b) {
          double dot = 0.0;
          for (int e = 0; e < cfg.embedding_dim; ++e) dot += unit[a][e] * unit[b][e];
          const double s = dot / cfg.temperature;
          sim[static_cast<std::size_t>(a) * views_n + b] = s;
          sim[static_cast<std::size_t>(b) * views_n + a] = s;
        }
      }

      // dLoss/d(unit vectors), averaged over the 2B anchors.
      std::vector<std::vector<double>> dunit(
          views_n, std::vector<double>(cfg.embedding_dim, 0.0));
      for (int a = 0; a < views_n; ++a) {
        const int positive = a ^ 1;
        double top = -1e300;
        for (int b = 0; b < views_n; ++b) {
          if (b == a) continue;
          top = std::max(top, sim[static_cast<std::size_t>(a) * views_n + b]);
        }
        double denom = 0.0;
        for (int b = 0; b < views_n; ++b) {
          if (b == a) continue;
          denom += std::exp(sim[static_cast<std::size_t>(a) * views_n + b] - top);
        }
        for (int b = 0; b < views_n; ++b) {
          if (b == a) continue;
          const double w =
              std::exp(sim[static_cast<std::size_t>(a) * views_n + b] - top) / denom;
          const double coeff = (w - (b == positive ? 1.0 : 0.0)) / cfg.temperature;
          for (int e = 0; e < cfg.embedding_dim; ++e) {
            dunit[a][e] += coeff * unit[b][e];
            dunit[b][e] += coeff * unit[a][e];
          }
        }
      }

      // Through the normalization, then the encoder.
      std::fill(grad_batch.begin(), grad_batch.end(), 0.0);
      for (int a = 0; a < views_n; ++a) {
        double radial = 0.0;
        for (int e = 0; e < cfg.embedding_dim; ++e) radial += unit[a][e] * dunit[a][e];
        std::vector<double> dz(cfg.embedding_dim);
        for (int e = 0; e < cfg.embedding_dim; ++e) {
          dz[e] = (dunit[a][e] - radial * unit[a][e]) / (norm[a] * views_n);
        }
        encoder.grad_output(inputs[a], dz, grad_view);
        for (std::size_t i = 0; i < grad_batch.size(); ++i) {
          grad_batch[i] += grad_view[i];
        }
      }

      for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grad_batch[i] + cfg.base.weight_decay * params[i];
        velocity[i] = cfg.base.momentum * velocity[i] + g;
        params[i] -= cfg.base.learning_rate * velocity[i];
      }
    }
  }

  ModelPtr encoder_model = encoder.to_model(seed, ModelKind::kMlp1Hidden);
  const auto& encoder_mlp = dynamic_cast<const MlpModel&>(*encoder_model);

  // Stage 2: linear head on frozen embeddings.  Training runs in embedding
  // space, so encoder parameters cannot move.
  std::vector<Example> embedded(n);
  for (int i = 0; i < n; ++i) {
    embedded[i].features = encoder_mlp.logits(train[i].features);
    embedded[i].label = train[i].label;
    embedded[i].id = train[i].id;
  }
  TrainConfig head_cfg = cfg.base;
  head_cfg.seed = derive_seed(seed, "contrastive-head");
  head_cfg.epochs = cfg.head_epochs;
  head_cfg.augment = false;
  ModelPtr head_model = run_sgd(embedded, head_cfg, ModelKind::kLinearSoftmax,
                                MechanismParams{}, hard_targets());
  const auto& head = dynamic_cast<const LinearSoftmaxModel&>(*head_model);
  if (head.num_classes() != classes) {
    throw std::logic_error("contrastive: head class count mismatch");
  }

  auto model = std::make_unique<ContrastiveModel>(
      MlpModel(encoder_mlp), classes, seed);
  model->head_w = head.weights;
  model->head_b = head.bias;
  return model;
}

const std::vector<std::string>& defense_ids() {
  static const std::vector<std::string> ids = {
      "undefended", "dpsgd", "relaxloss", "hamp", "selena", "contrastive"};
  return ids;
}

ModelPtr train_defense(const DefenseConfig& cfg,
                       const std::vector<Example>& train, std::uint64_t seed,
                       const TrainHooks* hooks) {
  TrainConfig base = cfg.train;
  base.seed = seed;
  if (cfg.id == "undefended") {
    return train_undefended(train, base, cfg.kind);
  }
  if (cfg.id == "dpsgd") {
    DpSgdConfig dp{base, cfg.clip_norm, cfg.noise_multiplier};
    return train_dpsgd(train, dp, cfg.kind, hooks);
  }
  if (cfg.id == "relaxloss") {
    RelaxLossConfig relax{base, cfg.loss_threshold};
    return train_relaxloss(train, relax, cfg.kind, hooks);
  }
  if (cfg.id == "hamp") {
    HampConfig hamp{base, cfg.entropy_smoothing, cfg.mask_outputs};
    return train_hamp(train, hamp, cfg.kind);
  }
  if (cfg.id == "selena") {
    SelenaConfig selena{base, cfg.num_teachers, cfg.queries_per_sample,
                        cfg.distill_epochs};
    return train_selena(train, selena, cfg.kind);
  }
  if (cfg.id == "contrastive") {
    ContrastiveConfig contrastive{base, cfg.embedding_dim, cfg.temperature,
                                  cfg.pretrain_epochs, cfg.head_epochs};
    return train_contrastive(train, contrastive);
  }
  throw std::invalid_argument("defense.id: unknown defense '" + cfg.id + "'");
}

std::map<std::string, double> mechanism_params(const DefenseConfig& cfg) {
  std::map<std::string, double> params;
  if (cfg.id == "dpsgd") {
    params["clip_norm"] = cfg.clip_norm;
    params["noise_multiplier"] = cfg.noise_multiplier;
  } else if (cfg.id == "relaxloss") {
    params["loss_threshold"] = cfg.loss_threshold;
  } else if (cfg.id == "hamp") {
    params["entropy_smoothing"] = cfg.entropy_smoothing;
    params["mask_outputs"] = cfg.mask_outputs ? 1.0 : 0.0;
  } else if (cfg.id == "selena") {
    params["num_teachers"] = cfg.num_teachers;
    params["queries_per_sample"] = cfg.queries_per_sample;
  } else if (cfg.id == "contrastive") {
    params["embedding_dim"] = cfg.embedding_dim;
    params["temperature"] = cfg.temperature;
  }
  return params;
}

}  // namespace miaudit
