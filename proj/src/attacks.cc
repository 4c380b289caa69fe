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
#include "miaudit/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "miaudit/parallel.hpp"
#include "miaudit/rng.hpp"

namespace miaudit {
namespace {

// Same draw order as the training-time augmentation: one sign pass, then one
// noise pass.
std::vector<double> draw_augmented(const std::vector<double>& features,
                                   const AugmentationPolicy& policy, Rng& rng) {
  std::vector<double> out(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    const double sign = rng.uniform() < policy.flip_prob ? -1.0 : 1.0;
    out[i] = sign * features[i];
  }
  for (double& x : out) x += policy.noise_std * rng.gaussian();
  return out;
}

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

// Unbiased sample variance.
double variance_of(const std::vector<double>& v, double mean) {
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return acc / static_cast<double>(v.size() - 1);
}

Eigen::MatrixXd rows_to_matrix(const std::vector<std::vector<double>>& rows) {
  const int n = static_cast<int>(rows.size());
  const int a = static_cast<int>(rows[0].size());
  Eigen::MatrixXd m(n, a);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != a) {
      throw std::invalid_argument("gaussian fit: ragged observation rows");
    }
    for (int j = 0; j < a; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

void check_pair_dim(const GaussianPair& pair, int expected) {
  if (pair.dim() != expected) {
    throw std::invalid_argument("likelihood ratio: dimension mismatch");
  }
  const std::size_t want = static_cast<std::size_t>(expected) * expected;
  if (pair.mu_out.size() != static_cast<std::size_t>(expected) ||
      pair.cov_in.size() != want || pair.cov_out.size() != want) {
    throw std::invalid_argument("likelihood ratio: malformed Gaussian pair");
  }
}

// ln N(x; mu, Sigma) without the -A/2 ln(2 pi) constant, which cancels in
// the in/out difference.
double log_density(const std::vector<double>& x, const std::vector<double>& mu,
                   const std::vector<double>& cov) {
  const int a = static_cast<int>(mu.size());
  Eigen::MatrixXd sigma(a, a);
  for (int i = 0; i < a; ++i) {
    for (int j = 0; j < a; ++j) sigma(i, j) = cov[static_cast<std::size_t>(i) * a + j];
  }
  Eigen::VectorXd diff(a);
  for (int i = 0; i < a; ++i) diff(i) = x[i] - mu[i];
  const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("likelihood ratio: covariance not positive-definite");
  }
  double log_det = 0.0;
  const Eigen::MatrixXd l = llt.matrixL();
  for (int i = 0; i < a; ++i) log_det += 2.0 * std::log(l(i, i));
  const double quad = diff.dot(llt.solve(diff));
  return -0.5 * (log_det + quad);
}

void check_tensor_membership(const ScoreTensor& scores,
                             const MembershipMatrix& membership,
                             int victim_index) {
  if (scores.num_models != membership.num_models() ||
      scores.num_audit != membership.num_audit()) {
    throw std::invalid_argument("attack: tensor and membership shapes differ");
  }
  if (victim_index < 0 || victim_index >= scores.num_models) {
    throw std::out_of_range("attack: victim index out of range");
  }
  if (scores.num_variants < 1) {
    throw std::invalid_argument("attack: tensor has no variants");
  }
}

void check_fleet(const std::vector<const Model*>& fleet,
                 const std::vector<Example>& audit) {
  if (fleet.empty()) throw std::invalid_argument("attack: empty fleet");
  if (audit.empty()) throw std::invalid_argument("attack: empty audit set");
  for (const Model* model : fleet) {
    if (model == nullptr) throw std::invalid_argument("attack: null model in fleet");
    if (model->input_dim() != static_cast<int>(audit[0].features.size())) {
      throw std::invalid_argument("attack: model/audit dimension mismatch");
    }
  }
}

double sigmoid(double t) {
  if (t >= 0.0) {
    return 1.0 / (1.0 + std::exp(-t));
  }
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

std::string to_string(ScoreKind kind) {
  return kind == ScoreKind::kLogit ? "logit" : "hinge";
}

ScoreKind score_kind_from_string(const std::string& name) {
  if (name == "logit") return ScoreKind::kLogit;
  if (name == "hinge") return ScoreKind::kHinge;
  throw std::invalid_argument("unknown score kind '" + name + "'");
}

double logit_score(const std::vector<double>& probabilities, int true_label) {
  if (true_label < 0 || true_label >= static_cast<int>(probabilities.size())) {
    throw std::out_of_range("logit_score: label out of range");
  }
  const double p =
      std::clamp(probabilities[true_label], kProbClamp, 1.0 - kProbClamp);
  return std::log(p) - std::log(1.0 - p);
}

double hinge_score(const std::vector<double>& logits, int true_label) {
  const int k = static_cast<int>(logits.size());
  if (true_label < 0 || true_label >= k) {
    throw std::out_of_range("hinge_score: label out of range");
  }
  if (k < 2) throw std::invalid_argument("hinge_score: need at least 2 classes");
  double best_other = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < k; ++j) {
    if (j != true_label) best_other = std::max(best_other, logits[j]);
  }
  return logits[true_label] - best_other;
}

GaussianPair fit_gaussian_pair(const std::vector<double>& in_scores,
                               const std::vector<double>& out_scores) {
  if (in_scores.size() < 2 || out_scores.size() < 2) {
    throw std::invalid_argument(
        "gaussian fit: need at least two observations per side");
  }
  const double mu_in = mean_of(in_scores);
  const double mu_out = mean_of(out_scores);
  const double var_in = variance_of(in_scores, mu_in);
  const double var_out = variance_of(out_scores, mu_out);
  const double df_in = static_cast<double>(in_scores.size() - 1);
  const double df_out = static_cast<double>(out_scores.size() - 1);
  const double pooled_std =
      std::sqrt((df_in * var_in + df_out * var_out) / (df_in + df_out));
  const double floor = std::max(kVarianceFloorAbs, kVarianceFloorRel * pooled_std);
  return GaussianPair::univariate(mu_in, std::max(std::sqrt(var_in), floor),
                                  mu_out, std::max(std::sqrt(var_out), floor));
}

GaussianPair fit_gaussian_pair_multivariate(
    const std::vector<std::vector<double>>& in_scores,
    const std::vector<std::vector<double>>& out_scores) {
  if (in_scores.size() < 2 || out_scores.size() < 2) {
    throw std::invalid_argument(
        "gaussian fit: need at least two observations per side");
  }
  if (in_scores[0].empty() || in_scores[0].size() != out_scores[0].size()) {
    throw std::invalid_argument("gaussian fit: inconsistent observation width");
  }
  const Eigen::MatrixXd in_m = rows_to_matrix(in_scores);
  const Eigen::MatrixXd out_m = rows_to_matrix(out_scores);
  const int a = static_cast<int>(in_m.cols());

  const Eigen::VectorXd mu_in = in_m.colwise().mean();
  const Eigen::VectorXd mu_out = out_m.colwise().mean();
  const Eigen::MatrixXd centered_in = in_m.rowwise() - mu_in.transpose();
  const Eigen::MatrixXd centered_out = out_m.rowwise() - mu_out.transpose();
  Eigen::MatrixXd cov_in =
      centered_in.transpose() * centered_in / static_cast<double>(in_m.rows() - 1);
  Eigen::MatrixXd cov_out = centered_out.transpose() * centered_out /
                            static_cast<double>(out_m.rows() - 1);

  // Per-dimension floor from the pooled standard deviation, as in the scalar
  // fit; then shrink off-diagonals toward the diagonal.
  const double df_in = static_cast<double>(in_m.rows() - 1);
  const double df_out = static_cast<double>(out_m.rows() - 1);
  Eigen::VectorXd floor2(a);
  for (int d = 0; d < a; ++d) {
    const double pooled_std = std::sqrt(
        (df_in * cov_in(d, d) + df_out * cov_out(d, d)) / (df_in + df_out));
    const double floor =
        std::max(kVarianceFloorAbs, kVarianceFloorRel * pooled_std);
    floor2(d) = floor * floor;
  }
  for (Eigen::MatrixXd* cov : {&cov_in, &cov_out}) {
    *cov *= 1.0 - kCovarianceShrinkage;
    for (int d = 0; d < a; ++d) {
      (*cov)(d, d) /= 1.0 - kCovarianceShrinkage;
      (*cov)(d, d) = std::max((*cov)(d, d), floor2(d));
    }
    if (Eigen::LLT<Eigen::MatrixXd>(*cov).info() != Eigen::Success) {
      // Diagonal fallback keeps the test well-defined for degenerate fleets.
      const Eigen::VectorXd diag = cov->diagonal();
      cov->setZero();
      cov->diagonal() = diag;
    }
  }

  GaussianPair pair;
  pair.mu_in.assign(mu_in.data(), mu_in.data() + a);
  pair.mu_out.assign(mu_out.data(), mu_out.data() + a);
  pair.cov_in.resize(static_cast<std::size_t>(a) * a);
  pair.cov_out.resize(static_cast<std::size_t>(a) * a);
  for (int i = 0; i < a; ++i) {
    for (int j = 0; j < a; ++j) {
      pair.cov_in[static_cast<std::size_t>(i) * a + j] = cov_in(i, j);
      pair.cov_out[static_cast<std::size_t>(i) * a + j] = cov_out(i, j);
    }
  }
  return pair;
}

double lira_score(double score, const GaussianPair& pair) {
  check_pair_dim(pair, 1);
  const double s_in = pair.sigma_in();
  const double s_out = pair.sigma_out();
  const double d_in = (score - pair.mu_in[0]) / s_in;
  const double d_out = (score - pair.mu_out[0]) / s_out;
  return (std::log(s_out) + 0.5 * d_out * d_out) -
         (std::log(s_in) + 0.5 * d_in * d_in);
}

double lira_score_multivariate(const std::vector<double>& score_vec,
                               const GaussianPair& pair) {
  check_pair_dim(pair, static_cast<int>(score_vec.size()));
  return log_density(score_vec, pair.mu_in, pair.cov_in) -
         log_density(score_vec, pair.mu_out, pair.cov_out);
}

std::vector<AttackScoreRecord> lira_attack(const ScoreTensor& scores,
                                           const MembershipMatrix& membership,
                                           int victim_index, VariantMode mode,
                                           std::vector<int>* skipped_samples) {
  check_tensor_membership(scores, membership, victim_index);
  const int s_total = scores.num_models;
  const int c = scores.num_audit;
  const int a = scores.num_variants;
  std::vector<AttackScoreRecord> records;
  records.reserve(c);
  if (skipped_samples != nullptr) skipped_samples->clear();

  for (int j = 0; j < c; ++j) {
    std::vector<std::vector<double>> in_rows, out_rows;
    for (int s = 0; s < s_total; ++s) {
      if (s == victim_index) continue;
      std::vector<double> row(a);
      for (int v = 0; v < a; ++v) row[v] = scores.at(s, j, v);
      (membership.is_member(s, j) ? in_rows : out_rows).push_back(std::move(row));
    }
    if (in_rows.size() < 2 || out_rows.size() < 2) {
      if (skipped_samples != nullptr) skipped_samples->push_back(j);
      continue;
    }
    AttackScoreRecord record;
    record.victim_index = victim_index;
    record.audit_index = j;
    record.is_member = membership.is_member(victim_index, j);
    if (mode == VariantMode::kSingle) {
      std::vector<double> in_first, out_first;
      in_first.reserve(in_rows.size());
      out_first.reserve(out_rows.size());
      for (const auto& row : in_rows) in_first.push_back(row[0]);
      for (const auto& row : out_rows) out_first.push_back(row[0]);
      const GaussianPair pair = fit_gaussian_pair(in_first, out_first);
      record.attack_score = lira_score(scores.at(victim_index, j, 0), pair);
    } else {
      const GaussianPair pair = fit_gaussian_pair_multivariate(in_rows, out_rows);
      std::vector<double> victim_row(a);
      for (int v = 0; v < a; ++v) victim_row[v] = scores.at(victim_index, j, v);
      record.attack_score = lira_score_multivariate(victim_row, pair);
    }
    records.push_back(record);
  }
  return records;
}

std::vector<AttackScoreRecord> global_threshold_scores(
    const ScoreTensor& scores, const MembershipMatrix& membership,
    int victim_index) {
  check_tensor_membership(scores, membership, victim_index);
  std::vector<AttackScoreRecord> records;
  records.reserve(scores.num_audit);
  for (int j = 0; j < scores.num_audit; ++j) {
    AttackScoreRecord record;
    record.victim_index = victim_index;
    record.audit_index = j;
    record.attack_score = scores.at(victim_index, j, 0);
    record.is_member = membership.is_member(victim_index, j);
    records.push_back(record);
  }
  return records;
}

double contrastive_similarity_score(const Model& model, const Example& x,
                                    int repeats,
                                    const AugmentationPolicy& policy,
                                    SimilarityMode mode, std::uint64_t seed) {
  if (repeats < 1) {
    throw std::invalid_argument("similarity: repeats must be >= 1");
  }
  if (mode == SimilarityMode::kWhiteBox && !model.has_embedding()) {
    throw std::invalid_argument(
        "similarity: white-box mode needs an embedding surface");
  }
  double total = 0.0;
  for (int r = 0; r < repeats; ++r) {
    std::vector<double> rep[2];
    for (int v = 0; v < 2; ++v) {
      Rng rng(derive_seed(seed, "similarity-view", x.id, r, v));
      const std::vector<double> view = draw_augmented(x.features, policy, rng);
      rep[v] = mode == SimilarityMode::kWhiteBox ? model.embed(view)
                                                 : model.logits(view);
    }
    double dot = 0.0, n0 = 0.0, n1 = 0.0;
    for (std::size_t e = 0; e < rep[0].size(); ++e) {
      dot += rep[0][e] * rep[1][e];
      n0 += rep[0][e] * rep[0][e];
      n1 += rep[1][e] * rep[1][e];
    }
    double cosine = n0 > 0.0 && n1 > 0.0 ? dot / std::sqrt(n0 * n1) : 0.0;
    cosine = std::clamp(cosine, -(1.0 - kFisherClamp), 1.0 - kFisherClamp);
    total += 0.5 * std::log((1.0 + cosine) / (1.0 - cosine));
  }
  return total / repeats;
}

std::vector<FixedAugmentation> make_fixed_augmentations(
    int dim, int count, const AugmentationPolicy& policy, std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("augmentations: dim must be >= 1");
  if (count < 1) throw std::invalid_argument("augmentations: count must be >= 1");
  std::vector<FixedAugmentation> augs;
  augs.reserve(count);
  FixedAugmentation identity;
  identity.scale.assign(dim, 1.0);
  identity.offset.assign(dim, 0.0);
  identity.name = "orig";
  augs.push_back(std::move(identity));
  for (int a = 1; a < count; ++a) {
    Rng rng(derive_seed(seed, "fixed-augmentation", a));
    FixedAugmentation aug;
    aug.scale.resize(dim);
    aug.offset.resize(dim);
    for (int i = 0; i < dim; ++i) {
      aug.scale[i] = rng.uniform() < policy.flip_prob ? -1.0 : 1.0;
    }
    for (int i = 0; i < dim; ++i) {
      aug.offset[i] = policy.noise_std * rng.gaussian();
    }
    aug.name = "aug" + std::to_string(a);
    augs.push_back(std::move(aug));
  }
  return augs;
}

std::vector<double> apply_augmentation(const FixedAugmentation& aug,
                                       const std::vector<double>& features) {
  if (aug.scale.size() != features.size()) {
    throw std::invalid_argument("augmentation: dimension mismatch");
  }
  std::vector<double> out(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) {
    out[i] = aug.scale[i] * features[i] + aug.offset[i];
  }
  return out;
}

LabelOnlyFeature label_only_features(
    const Model& model, const Example& x,
    const std::vector<FixedAugmentation>& augmentations,
    std::uint64_t stream_seed) {
  LabelOnlyFeature feature;
  feature.bits.reserve(augmentations.size());
  for (std::size_t i = 0; i < augmentations.size(); ++i) {
    const std::vector<double> view = apply_augmentation(augmentations[i], x.features);
    const std::vector<double> p =
        model.predict(view, derive_seed(stream_seed, "label-only-query", i));
    feature.bits.push_back(argmax(p) == x.label ? 1 : 0);
  }
  return feature;
}

std::optional<double> label_only_attack(
    const std::vector<LabelOnlyFeature>& shadow_features,
    const std::vector<std::uint8_t>& shadow_membership,
    const LabelOnlyFeature& victim_feature) {
  if (shadow_features.size() != shadow_membership.size()) {
    throw std::invalid_argument("label-only: feature/membership size mismatch");
  }
  const int n = static_cast<int>(shadow_features.size());
  const int a = static_cast<int>(victim_feature.bits.size());
  int positives = 0;
  for (std::uint8_t m : shadow_membership) positives += m != 0 ? 1 : 0;
  if (positives < 2 || n - positives < 2) return std::nullopt;

  Eigen::MatrixXd x(n, a + 1);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(shadow_features[i].bits.size()) != a) {
      throw std::invalid_argument("label-only: ragged shadow features");
    }
    for (int j = 0; j < a; ++j) x(i, j) = shadow_features[i].bits[j];
    x(i, a) = 1.0;  // intercept column, unpenalized
    y(i) = shadow_membership[i] != 0 ? 1.0 : 0.0;
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(a + 1);
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(a + 1, kLabelOnlyRidge);
  penalty(a) = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::VectorXd p(n), weight(n);
    for (int i = 0; i < n; ++i) {
      p(i) = sigmoid(x.row(i).dot(w));
      weight(i) = std::max(p(i) * (1.0 - p(i)), 1e-12);
    }
    Eigen::VectorXd grad =
        x.transpose() * (p - y) + penalty.cwiseProduct(w);
    Eigen::MatrixXd hess = x.transpose() * weight.asDiagonal() * x;
    hess.diagonal() += penalty;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    if (!step.allFinite()) return std::nullopt;
    w -= step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-10) break;
  }
  if (!w.allFinite()) return std::nullopt;

  double t = w(a);
  for (int j = 0; j < a; ++j) t += w(j) * victim_feature.bits[j];
  return sigmoid(t);
}

const std::vector<std::string>& attack_ids() {
  static const std::vector<std::string> ids = {
      "lira", "global", "label-only", "contrastive-wb", "contrastive-bb"};
  return ids;
}

ScoreTensor compute_confidence_tensor(
    const std::vector<const Model*>& fleet, const std::vector<Example>& audit,
    ScoreKind kind, const std::vector<FixedAugmentation>& augmentations,
    std::uint64_t seed, int threads) {
  check_fleet(fleet, audit);
  if (augmentations.empty()) {
    throw std::invalid_argument("attack: no augmentations supplied");
  }
  const int s_total = static_cast<int>(fleet.size());
  const int c = static_cast<int>(audit.size());
  const int a = static_cast<int>(augmentations.size());
  ScoreTensor tensor(s_total, c, a);
  for (const FixedAugmentation& aug : augmentations) {
    tensor.variant_names.push_back(to_string(kind) + ":" + aug.name);
  }
  parallel_for(s_total * c, threads, [&](int idx) {
    const int s = idx / c;
    const int j = idx % c;
    const Model& model = *fleet[s];
    const Example& x = audit[j];
    for (int v = 0; v < a; ++v) {
      const std::vector<double> view = apply_augmentation(augmentations[v], x.features);
      double score = 0.0;
      if (kind == ScoreKind::kLogit) {
        const std::vector<double> p =
            model.predict(view, derive_seed(seed, "confidence-query", s, j, v));
        score = logit_score(p, x.label);
      } else {
        score = hinge_score(model.logits(view), x.label);
      }
      tensor.at(s, j, v) = score;
    }
  });
  return tensor;
}

ScoreTensor compute_label_only_tensor(
    const std::vector<const Model*>& fleet, const std::vector<Example>& audit,
    const std::vector<FixedAugmentation>& augmentations, std::uint64_t seed,
    int threads) {
  check_fleet(fleet, audit);
  if (augmentations.empty()) {
    throw std::invalid_argument("attack: no augmentations supplied");
  }
  const int s_total = static_cast<int>(fleet.size());
  const int c = static_cast<int>(audit.size());
  const int a = static_cast<int>(augmentations.size());
  ScoreTensor tensor(s_total, c, a);
  for (const FixedAugmentation& aug : augmentations) {
    tensor.variant_names.push_back("label:" + aug.name);
  }
  parallel_for(s_total * c, threads, [&](int idx) {
    const int s = idx / c;
    const int j = idx % c;
    const LabelOnlyFeature feature = label_only_features(
        *fleet[s], audit[j], augmentations, derive_seed(seed, "label-only", s, j));
    for (int v = 0; v < a; ++v) tensor.at(s, j, v) = feature.bits[v];
  });
  return tensor;
}

ScoreTensor compute_similarity_tensor(const std::vector<const Model*>& fleet,
                                      const std::vector<Example>& audit,
                                      int repeats,
                                      const AugmentationPolicy& policy,
                                      SimilarityMode mode, std::uint64_t seed,
                                      int threads) {
  check_fleet(fleet, audit);
  const int s_total = static_cast<int>(fleet.size());
  const int c = static_cast<int>(audit.size());
  ScoreTensor tensor(s_total, c, 1);
  tensor.variant_names = {"similarity"};
  parallel_for(s_total * c, threads, [&](int idx) {
    const int s = idx / c;
    const int j = idx % c;
    tensor.at(s, j, 0) = contrastive_similarity_score(*fleet[s], audit[j],
                                                      repeats, policy, mode, seed);
  });
  return tensor;
}

}  // namespace miaudit
