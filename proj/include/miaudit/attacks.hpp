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
#ifndef MIAUDIT_ATTACKS_HPP_
#define MIAUDIT_ATTACKS_HPP_

// Membership scores and attacks: confidence scores, per-sample Gaussian
// likelihood-ratio tests over shadow fleets, a global-threshold baseline,
// the label-only attack on fixed augmentations, and the augmentation
//-similarity attack against contrastive encoders.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "miaudit/core.hpp"
#include "miaudit/defenses.hpp"

namespace miaudit {

// One membership guess: the attack's confidence that audit sample
// `audit_index` was in victim `victim_index`'s training set.
struct AttackScoreRecord {
  int victim_index = 0;
  int audit_index = 0;
  double attack_score = 0.0;  // higher = more likely member
  bool is_member = false;
};

enum class ScoreKind { kLogit, kHinge };
enum class VariantMode { kSingle, kMultivariate };
enum class SimilarityMode { kWhiteBox, kBlackBox };

std::string to_string(ScoreKind kind);
ScoreKind score_kind_from_string(const std::string& name);

// ln(p_y) - ln(1 - p_y) with p_y clamped away from {0, 1}.
double logit_score(const std::vector<double>& probabilities, int true_label);
inline constexpr double kProbClamp = 1e-12;

// z_y - max_{j != y} z_j.
double hinge_score(const std::vector<double>& logits, int true_label);

// Unbiased per-side mean/std with the std floored at
// max(1e-8, 0.05 * pooled std); both sides need >= 2 observations.
GaussianPair fit_gaussian_pair(const std::vector<double>& in_scores,
                               const std::vector<double>& out_scores);

// Multivariate fit over length-A observations (rows).  Covariances shrink
// toward their diagonal, Sigma <- (1-lambda) Sigma + lambda diag(Sigma) with
// lambda = 0.1, falling back to the diagonal when not positive-definite;
// diagonal entries are floored like the scalar case, per dimension.
GaussianPair fit_gaussian_pair_multivariate(
    const std::vector<std::vector<double>>& in_scores,
    const std::vector<std::vector<double>>& out_scores);

inline constexpr double kVarianceFloorAbs = 1e-8;
inline constexpr double kVarianceFloorRel = 0.05;
inline constexpr double kCovarianceShrinkage = 0.1;

// Log-likelihood ratio ln N(s; mu_in, sigma_in^2) - ln N(s; mu_out, sigma_out^2).
double lira_score(double score, const GaussianPair& pair);

// Multivariate log-density difference over a length-A score vector.
double lira_score_multivariate(const std::vector<double>& score_vec,
                               const GaussianPair& pair);

// Per-sample likelihood-ratio attack: fits a GaussianPair on the shadow rows
// (all models except the victim) split by the membership column, then scores
// the victim's row.  Samples with fewer than two shadow scores on either side
// are skipped and reported through `skipped_samples`.
std::vector<AttackScoreRecord> lira_attack(
    const ScoreTensor& scores, const MembershipMatrix& membership,
    int victim_index, VariantMode mode,
    std::vector<int>* skipped_samples = nullptr);

// Baseline without per-sample calibration: raw victim scores (variant 0).
std::vector<AttackScoreRecord> global_threshold_scores(
    const ScoreTensor& scores, const MembershipMatrix& membership,
    int victim_index);

// Mean Fisher-transformed cosine similarity between the defense outputs of
// two fresh augmentations, over `repeats` draws.  White-box reads embed(),
// black-box reads logits().  Augmentation draws are keyed by (seed, sample
// id, repeat, view) so every model sees identical views.
double contrastive_similarity_score(const Model& model, const Example& x,
                                    int repeats,
                                    const AugmentationPolicy& policy,
                                    SimilarityMode mode, std::uint64_t seed);
inline constexpr double kFisherClamp = 1e-7;

// One fixed augmentation: coordinate-wise x' = scale * x + offset, where
// scale is a ±1 sign mask and offset a frozen Gaussian noise draw.
struct FixedAugmentation {
  std::vector<double> scale;
  std::vector<double> offset;
  std::string name;
};

// Index 0 is the identity ("orig"); the rest are frozen draws under the
// policy, shared by every model in an experiment.
std::vector<FixedAugmentation> make_fixed_augmentations(
    int dim, int count, const AugmentationPolicy& policy, std::uint64_t seed);

std::vector<double> apply_augmentation(const FixedAugmentation& aug,
                                       const std::vector<double>& features);

// Bit i = [argmax predict(aug_i(x)) == x.label].  Reads only the argmax, so
// rank-preserving confidence masking cannot perturb it.
struct LabelOnlyFeature {
  std::vector<std::uint8_t> bits;
};

LabelOnlyFeature label_only_features(
    const Model& model, const Example& x,
    const std::vector<FixedAugmentation>& augmentations,
    std::uint64_t stream_seed);

// L2-regularized logistic regression (strength 1.0, intercept unpenalized)
// from shadow bit-vectors to membership; returns the victim's predicted
// membership probability, or nullopt when either shadow class has fewer than
// two points.
std::optional<double> label_only_attack(
    const std::vector<LabelOnlyFeature>& shadow_features,
    const std::vector<std::uint8_t>& shadow_membership,
    const LabelOnlyFeature& victim_feature);
inline constexpr double kLabelOnlyRidge = 1.0;

// Attack configuration resolved from experiment configs.
struct AttackConfig {
  std::string id = "lira";  // lira | global | label-only | contrastive-wb | contrastive-bb
  int augmentations = 18;   // query views for lira (multivariate) and label-only
  int repeats = 6;          // similarity repeats
  AugmentationPolicy policy;
  ScoreKind global_score = ScoreKind::kLogit;
};

const std::vector<std::string>& attack_ids();

// Fleet query helpers; every entry is computed from a pure per-(model,
// sample, variant) function of `seed`, so results are identical for any
// thread count.
ScoreTensor compute_confidence_tensor(
    const std::vector<const Model*>& fleet, const std::vector<Example>& audit,
    ScoreKind kind, const std::vector<FixedAugmentation>& augmentations,
    std::uint64_t seed, int threads);

ScoreTensor compute_label_only_tensor(
    const std::vector<const Model*>& fleet, const std::vector<Example>& audit,
    const std::vector<FixedAugmentation>& augmentations, std::uint64_t seed,
    int threads);

ScoreTensor compute_similarity_tensor(const std::vector<const Model*>& fleet,
                                      const std::vector<Example>& audit,
                                      int repeats,
                                      const AugmentationPolicy& policy,
                                      SimilarityMode mode, std::uint64_t seed,
                                      int threads);

}  // namespace miaudit

#endif  // MIAUDIT_ATTACKS_HPP_
