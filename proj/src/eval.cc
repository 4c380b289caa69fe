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
#include "miaudit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <nlohmann/json.hpp>

#include "miaudit/parallel.hpp"
#include "miaudit/rng.hpp"

namespace miaudit {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("tpr_at_fpr: alpha must be in [0, 1]");
  }
}

// Fills the target fields shared by every report flavor.
void apply_context(AuditReport& report, const ReportContext& context) {
  report.canary_family = to_string(context.family);
  report.defense_id = context.defense_id;
  report.attack_id = context.attack_id;
  report.fpr_targets = context.fpr_targets;
  report.num_models = context.num_models;
  report.num_audit = context.num_audit;
  report.seed = context.seed;
  report.test_accuracy = context.test_accuracy;
  report.mechanism_params = context.mechanism_params;
}

std::vector<AttackScoreRecord> masked_records(
    const std::vector<AttackScoreRecord>& records,
    const std::vector<std::uint8_t>& eval_mask) {
  std::vector<AttackScoreRecord> kept;
  kept.reserve(records.size());
  for (const AttackScoreRecord& r : records) {
    if (r.audit_index >= 0 &&
        r.audit_index < static_cast<int>(eval_mask.size()) &&
        eval_mask[r.audit_index] != 0) {
      kept.push_back(r);
    }
  }
  return kept;
}

// Smallest target whose estimate would be resolved by `negatives`; falls
// back to the largest target.  Used to pick the attack variant.
double selection_alpha(const std::vector<double>& targets, long long negatives) {
  std::vector<double> sorted = targets;
  std::sort(sorted.begin(), sorted.end());
  for (double alpha : sorted) {
    if (alpha > 0.0 && static_cast<double>(negatives) >= 1.0 / alpha) {
      return alpha;
    }
  }
  return sorted.back();
}

struct FleetAttackOutput {
  std::string variant;
  ScoreTensor tensor;
  std::vector<AttackScoreRecord> records;  // eval-masked, victim order
};

// A cache file is a CBOR array of exact model parameter blobs.  Any read
// problem falls through to retraining.
bool load_fleet_cache(const std::string& path, int num_models,
                      std::vector<ModelPtr>& fleet) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  try {
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                          std::istreambuf_iterator<char>()};
    const nlohmann::json blob = nlohmann::json::from_cbor(bytes);
    if (!blob.is_array() || static_cast<int>(blob.size()) != num_models) {
      return false;
    }
    std::vector<ModelPtr> loaded;
    loaded.reserve(num_models);
    for (const nlohmann::json& entry : blob) {
      loaded.push_back(model_from_json(entry));
    }
    fleet = std::move(loaded);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

void store_fleet_cache(const std::string& path,
                       const std::vector<ModelPtr>& fleet) {
  nlohmann::json blob = nlohmann::json::array();
  for (const ModelPtr& model : fleet) blob.push_back(model_to_json(*model));
  const std::vector<std::uint8_t> bytes = nlohmann::json::to_cbor(blob);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return;  // cache writes are best-effort
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) return;
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
}

}  // namespace

RocCurve roc_curve(const std::vector<AttackScoreRecord>& records) {
  if (records.empty()) {
    throw std::invalid_argument("roc: no records");
  }
  RocCurve curve;
  std::vector<std::pair<double, bool>> scored;
  scored.reserve(records.size());
  for (const AttackScoreRecord& r : records) {
    if (std::isnan(r.attack_score)) {
      throw std::invalid_argument("roc: NaN attack score");
    }
    scored.emplace_back(r.attack_score, r.is_member);
    if (r.is_member) {
      ++curve.num_positives;
    } else {
      ++curve.num_negatives;
    }
  }
  if (curve.num_positives == 0 || curve.num_negatives == 0) {
    throw std::invalid_argument("roc: need records from both classes");
  }
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });

  curve.points.push_back({kInf, 0.0, 0.0});
  long long tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < scored.size()) {
    const double value = scored[i].first;
    // Equal scores form one bucket and flip together.
    while (i < scored.size() && scored[i].first == value) {
      if (scored[i].second) {
        ++tp;
      } else {
        ++fp;
      }
      ++i;
    }
    curve.points.push_back(
        {value, static_cast<double>(tp) / curve.num_positives,
         static_cast<double>(fp) / curve.num_negatives});
  }
  return curve;
}

double tpr_at_fpr(const RocCurve& curve, double alpha, double* threshold_out,
                  bool* under_resolved_out) {
  check_alpha(alpha);
  if (curve.points.empty()) {
    throw std::invalid_argument("tpr_at_fpr: empty curve");
  }
  double tpr = 0.0;
  double threshold = kInf;
  for (const RocPoint& point : curve.points) {
    if (point.fpr <= alpha) {
      tpr = point.tpr;
      threshold = point.threshold;
    } else {
      break;  // fpr is nondecreasing along the curve
    }
  }
  if (threshold_out != nullptr) *threshold_out = threshold;
  if (under_resolved_out != nullptr) {
    *under_resolved_out =
        alpha <= 0.0 || static_cast<double>(curve.num_negatives) < 1.0 / alpha;
  }
  return tpr;
}

double tpr_at_fpr_scores(std::vector<double> positive_scores,
                         std::vector<double> negative_scores, double alpha,
                         double* threshold_out, bool* under_resolved_out) {
  check_alpha(alpha);
  if (positive_scores.empty() || negative_scores.empty()) {
    throw std::invalid_argument("tpr_at_fpr: need scores from both classes");
  }
  for (double s : positive_scores) {
    if (std::isnan(s)) throw std::invalid_argument("tpr_at_fpr: NaN score");
  }
  for (double s : negative_scores) {
    if (std::isnan(s)) throw std::invalid_argument("tpr_at_fpr: NaN score");
  }
  std::sort(positive_scores.begin(), positive_scores.end(), std::greater<>());
  std::sort(negative_scores.begin(), negative_scores.end(), std::greater<>());
  const double p = static_cast<double>(positive_scores.size());
  const double n = static_cast<double>(negative_scores.size());

  double tpr = 0.0;
  double threshold = kInf;
  std::size_t pi = 0, ni = 0;
  long long tp = 0, fp = 0;
  while (pi < positive_scores.size() || ni < negative_scores.size()) {
    double value;
    if (pi < positive_scores.size() && ni < negative_scores.size()) {
      value = std::max(positive_scores[pi], negative_scores[ni]);
    } else if (pi < positive_scores.size()) {
      value = positive_scores[pi];
    } else {
      value = negative_scores[ni];
    }
    while (pi < positive_scores.size() && positive_scores[pi] == value) {
      ++tp;
      ++pi;
    }
    while (ni < negative_scores.size() && negative_scores[ni] == value) {
      ++fp;
      ++ni;
    }
    // Same bucket arithmetic as the curve walk, so the two paths agree
    // bit for bit.
    const double fpr = static_cast<double>(fp) / n;
    if (fpr <= alpha) {
      tpr = static_cast<double>(tp) / p;
      threshold = value;
    } else {
      break;
    }
  }
  if (threshold_out != nullptr) *threshold_out = threshold;
  if (under_resolved_out != nullptr) {
    *under_resolved_out = alpha <= 0.0 || n < 1.0 / alpha;
  }
  return tpr;
}

AuditReport population_report(const std::vector<AttackScoreRecord>& records,
                              const ReportContext& context) {
  if (context.fpr_targets.empty()) {
    throw std::invalid_argument("report: fpr_targets must be non-empty");
  }
  AuditReport report;
  report.protocol = "population";
  apply_context(report, context);
  const RocCurve curve = roc_curve(records);
  report.num_records = static_cast<long long>(records.size());
  report.num_positives = curve.num_positives;
  report.num_negatives = curve.num_negatives;
  for (double alpha : context.fpr_targets) {
    double threshold = 0.0;
    bool under_resolved = false;
    report.tpr.push_back(tpr_at_fpr(curve, alpha, &threshold, &under_resolved));
    report.thresholds.push_back(threshold);
    report.under_resolved.push_back(under_resolved ? 1 : 0);
  }
  return report;
}

AuditReport sample_level_report(const std::vector<AttackScoreRecord>& records,
                                SampleLevelMode mode,
                                const ReportContext& context) {
  if (context.fpr_targets.empty()) {
    throw std::invalid_argument("report: fpr_targets must be non-empty");
  }
  if (mode == SampleLevelMode::kPooledCanaries) {
    if (context.family == CanaryFamily::kNone) {
      throw std::invalid_argument(
          "sample-level report: pooled-canaries mode needs a canary family");
    }
    AuditReport report = population_report(records, context);
    report.protocol = "sample-level";
    report.sample_mode = "pooled-canaries";
    return report;
  }

  AuditReport report;
  report.protocol = "sample-level";
  report.sample_mode = "per-sample";
  apply_context(report, context);
  report.num_records = static_cast<long long>(records.size());

  std::map<int, std::vector<AttackScoreRecord>> by_sample;
  for (const AttackScoreRecord& r : records) {
    by_sample[r.audit_index].push_back(r);
    if (r.is_member) {
      ++report.num_positives;
    } else {
      ++report.num_negatives;
    }
  }

  const std::size_t targets = context.fpr_targets.size();
  report.tpr.assign(targets, 0.0);
  report.thresholds.assign(targets, kInf);
  report.under_resolved.assign(targets, 0);
  report.max_tpr.assign(targets, 0.0);
  report.argmax_sample.assign(targets, -1);
  for (const auto& [sample, sample_records] : by_sample) {
    bool has_pos = false, has_neg = false;
    for (const AttackScoreRecord& r : sample_records) {
      (r.is_member ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg) continue;  // unscorable slot
    const RocCurve curve = roc_curve(sample_records);
    report.sample_indices.push_back(sample);
    std::vector<double> row(targets, 0.0);
    for (std::size_t t = 0; t < targets; ++t) {
      double threshold = 0.0;
      bool under_resolved = false;
      row[t] = tpr_at_fpr(curve, context.fpr_targets[t], &threshold,
                          &under_resolved);
      if (under_resolved) report.under_resolved[t] = 1;
      if (report.argmax_sample[t] < 0 || row[t] > report.max_tpr[t]) {
        report.max_tpr[t] = row[t];
        report.argmax_sample[t] = sample;
        report.thresholds[t] = threshold;
      }
    }
    report.per_sample_tpr.push_back(std::move(row));
  }
  if (report.sample_indices.empty()) {
    throw std::invalid_argument("sample-level report: no scorable samples");
  }
  report.tpr = report.max_tpr;
  return report;
}

std::string to_string(MembershipMode mode) {
  return mode == MembershipMode::kFixNonAudit ? "fix-non-audit" : "vary-all";
}

MembershipMode membership_mode_from_string(const std::string& name) {
  if (name == "fix-non-audit") return MembershipMode::kFixNonAudit;
  if (name == "vary-all") return MembershipMode::kVaryAll;
  throw std::invalid_argument("unknown membership mode '" + name + "'");
}

namespace {

// Pooled TPR used to rank attack variants, measured at the smallest target
// the record count can resolve.
double variant_quality(const std::vector<AttackScoreRecord>& records,
                       const std::vector<double>& targets) {
  if (records.empty()) return -1.0;
  long long negatives = 0;
  long long positives = 0;
  for (const AttackScoreRecord& r : records) {
    if (r.is_member) {
      ++positives;
    } else {
      ++negatives;
    }
  }
  if (positives == 0 || negatives == 0) return -1.0;
  const RocCurve curve = roc_curve(records);
  return tpr_at_fpr(curve, selection_alpha(targets, negatives), nullptr, nullptr);
}

// Runs a per-victim record builder for every victim and concatenates the
// eval-masked outputs in victim order.
std::vector<AttackScoreRecord> per_victim_records(
    int num_models, int threads, const std::vector<std::uint8_t>& eval_mask,
    const std::function<std::vector<AttackScoreRecord>(int)>& build) {
  std::vector<std::vector<AttackScoreRecord>> blocks(num_models);
  parallel_for(num_models, threads,
               [&](int v) { blocks[v] = masked_records(build(v), eval_mask); });
  std::vector<AttackScoreRecord> all;
  for (auto& block : blocks) {
    all.insert(all.end(), block.begin(), block.end());
  }
  return all;
}

}  // namespace

LeaveOneOutResult run_leave_one_out(const Dataset& dataset,
                                    const CanarySet& canaries,
                                    const DefenseConfig& defense,
                                    const AttackConfig& attack, int num_models,
                                    std::uint64_t seed,
                                    const LeaveOneOutOptions& options) {
  if (options.fpr_targets.empty()) {
    throw std::invalid_argument("leave-one-out: fpr_targets must be non-empty");
  }
  if (options.threads < 1) {
    throw std::invalid_argument("leave-one-out: threads must be >= 1");
  }
  const Dataset audited = with_canaries(dataset, canaries);

  // The working dataset: under vary-all, every fixed example becomes an
  // extra membership-varied slot, but only the original audit slots are
  // scored.
  Dataset work = audited;
  std::vector<std::uint8_t> eval_mask = canaries.eval_mask;
  if (eval_mask.size() != audited.audit.size()) {
    throw std::invalid_argument("leave-one-out: eval mask width mismatch");
  }
  if (options.membership_mode == MembershipMode::kVaryAll) {
    for (const Example& e : audited.fixed) {
      work.audit.push_back(e);
      eval_mask.push_back(0);
    }
    work.fixed.clear();
  }
  if (std::count(eval_mask.begin(), eval_mask.end(), 1) == 0) {
    throw std::invalid_argument("leave-one-out: no scored audit slots");
  }

  LeaveOneOutResult result;
  result.membership =
      assign_memberships(num_models, static_cast<int>(work.audit.size()),
                         derive_seed(seed, "membership-matrix"));
  result.num_eval_slots =
      static_cast<int>(std::count(eval_mask.begin(), eval_mask.end(), 1));

  std::vector<ModelPtr> fleet(num_models);
  bool fleet_loaded = false;
  std::string cache_path;
  if (!options.cache_dir.empty()) {
    char key_hex[17];
    std::snprintf(key_hex, sizeof(key_hex), "%016llx",
                  static_cast<unsigned long long>(options.cache_key));
    // A hit leaves no trace in the result, so cached and cold runs produce
    // byte-identical artifacts.
    cache_path = options.cache_dir + "/fleet-" + key_hex + ".cbor";
    fleet_loaded = load_fleet_cache(cache_path, num_models, fleet);
  }
  if (!fleet_loaded) {
    parallel_for(num_models, options.threads, [&](int s) {
      const std::vector<Example> train =
          training_set_for(work, result.membership, s);
      fleet[s] = train_defense(defense, train, derive_seed(seed, "model", s));
    });
    if (!cache_path.empty()) store_fleet_cache(cache_path, fleet);
  }
  std::vector<const Model*> fleet_view(num_models);
  for (int s = 0; s < num_models; ++s) fleet_view[s] = fleet[s].get();

  if (!options.test_set.empty()) {
    std::vector<double> accuracy(num_models, 0.0);
    parallel_for(num_models, options.threads, [&](int s) {
      long long hits = 0;
      for (std::size_t i = 0; i < options.test_set.size(); ++i) {
        const Example& x = options.test_set[i];
        const std::vector<double> p =
            fleet[s]->predict(x.features, derive_seed(seed, "test-query", s, i));
        if (argmax(p) == x.label) ++hits;
      }
      accuracy[s] = static_cast<double>(hits) /
                    static_cast<double>(options.test_set.size());
    });
    result.test_accuracy =
        std::accumulate(accuracy.begin(), accuracy.end(), 0.0) / num_models;
  }

  const int dim = work.dim;
  const std::uint64_t query_seed = derive_seed(seed, "queries");
  std::vector<FleetAttackOutput> outputs;

  if (attack.id == "lira") {
    if (attack.augmentations < 1) {
      throw std::invalid_argument("lira: augmentations must be >= 1");
    }
    bool fleet_logits = true;
    for (const Model* m : fleet_view) fleet_logits &= m->has_logits();
    const std::vector<FixedAugmentation> augs = make_fixed_augmentations(
        dim, attack.augmentations, attack.policy,
        derive_seed(seed, "augmentations"));

    std::map<ScoreKind, ScoreTensor> tensors;
    tensors.emplace(ScoreKind::kLogit,
                    compute_confidence_tensor(fleet_view, work.audit,
                                              ScoreKind::kLogit, augs,
                                              query_seed, options.threads));
    if (fleet_logits) {
      tensors.emplace(ScoreKind::kHinge,
                      compute_confidence_tensor(fleet_view, work.audit,
                                                ScoreKind::kHinge, augs,
                                                query_seed, options.threads));
    } else {
      result.warnings.push_back(
          "lira: fleet exposes no logits; hinge variants skipped");
    }

    std::vector<std::pair<ScoreKind, VariantMode>> combos;
    for (ScoreKind kind : {ScoreKind::kLogit, ScoreKind::kHinge}) {
      if (tensors.count(kind) == 0) continue;
      if (attack.augmentations > 1) {
        combos.emplace_back(kind, VariantMode::kMultivariate);
      }
      combos.emplace_back(kind, VariantMode::kSingle);
    }

    std::vector<int> skipped;
    for (const auto& [kind, mode] : combos) {
      const ScoreTensor& tensor = tensors.at(kind);
      std::vector<std::vector<int>> skipped_by_victim(num_models);
      FleetAttackOutput out;
      out.variant =
          "lira[" + to_string(kind) + "," +
          (mode == VariantMode::kMultivariate ? "multivariate" : "single") + "]";
      out.tensor = tensor;
      out.records = per_victim_records(
          num_models, options.threads, eval_mask, [&](int v) {
            return lira_attack(tensor, result.membership, v, mode,
                               &skipped_by_victim[v]);
          });
      if (skipped.empty()) {
        for (const auto& sv : skipped_by_victim) {
          for (int j : sv) skipped.push_back(j);
        }
        std::sort(skipped.begin(), skipped.end());
        skipped.erase(std::unique(skipped.begin(), skipped.end()),
                      skipped.end());
      }
      outputs.push_back(std::move(out));
    }
    if (!skipped.empty()) {
      std::ostringstream oss;
      oss << "lira: skipped " << skipped.size()
          << " audit slots with insufficient shadow coverage:";
      for (std::size_t i = 0; i < skipped.size() && i < 20; ++i) {
        oss << ' ' << skipped[i];
      }
      if (skipped.size() > 20) oss << " ...";
      result.warnings.push_back(oss.str());
    }
  } else if (attack.id == "global") {
    bool fleet_logits = true;
    for (const Model* m : fleet_view) fleet_logits &= m->has_logits();
    if (attack.global_score == ScoreKind::kHinge && !fleet_logits) {
      throw std::invalid_argument(
          "global: hinge score needs logits the fleet does not expose");
    }
    const std::vector<FixedAugmentation> identity = make_fixed_augmentations(
        dim, 1, attack.policy, derive_seed(seed, "augmentations"));
    const ScoreTensor tensor =
        compute_confidence_tensor(fleet_view, work.audit, attack.global_score,
                                  identity, query_seed, options.threads);
    FleetAttackOutput out;
    out.variant = "global[" + to_string(attack.global_score) + "]";
    out.tensor = tensor;
    out.records = per_victim_records(
        num_models, options.threads, eval_mask,
        [&](int v) { return global_threshold_scores(tensor, result.membership, v); });
    outputs.push_back(std::move(out));
  } else if (attack.id == "label-only") {
    if (attack.augmentations < 2) {
      throw std::invalid_argument("label-only: needs at least 2 augmentations");
    }
    const std::vector<FixedAugmentation> augs = make_fixed_augmentations(
        dim, attack.augmentations, attack.policy,
        derive_seed(seed, "augmentations"));
    const ScoreTensor tensor = compute_label_only_tensor(
        fleet_view, work.audit, augs, query_seed, options.threads);
    const int c = tensor.num_audit;
    const int a = tensor.num_variants;
    std::vector<std::vector<int>> skipped_by_victim(num_models);
    FleetAttackOutput out;
    out.variant = "label-only";
    out.tensor = tensor;
    out.records = per_victim_records(
        num_models, options.threads, eval_mask, [&](int v) {
          std::vector<AttackScoreRecord> records;
          for (int j = 0; j < c; ++j) {
            std::vector<LabelOnlyFeature> shadow_features;
            std::vector<std::uint8_t> shadow_membership;
            for (int s = 0; s < num_models; ++s) {
              if (s == v) continue;
              LabelOnlyFeature f;
              for (int q = 0; q < a; ++q) {
                f.bits.push_back(tensor.at(s, j, q) != 0.0 ? 1 : 0);
              }
              shadow_features.push_back(std::move(f));
              shadow_membership.push_back(
                  result.membership.is_member(s, j) ? 1 : 0);
            }
            LabelOnlyFeature victim;
            for (int q = 0; q < a; ++q) {
              victim.bits.push_back(tensor.at(v, j, q) != 0.0 ? 1 : 0);
            }
            const std::optional<double> score =
                label_only_attack(shadow_features, shadow_membership, victim);
            if (!score.has_value()) {
              skipped_by_victim[v].push_back(j);
              continue;
            }
            AttackScoreRecord record;
            record.victim_index = v;
            record.audit_index = j;
            record.attack_score = *score;
            record.is_member = result.membership.is_member(v, j);
            records.push_back(record);
          }
          return records;
        });
    std::vector<int> skipped;
    for (const auto& sv : skipped_by_victim) {
      skipped.insert(skipped.end(), sv.begin(), sv.end());
    }
    std::sort(skipped.begin(), skipped.end());
    skipped.erase(std::unique(skipped.begin(), skipped.end()), skipped.end());
    if (!skipped.empty()) {
      result.warnings.push_back(
          "label-only: skipped " + std::to_string(skipped.size()) +
          " audit slots with insufficient shadow coverage");
    }
    outputs.push_back(std::move(out));
  } else if (attack.id == "contrastive-wb" || attack.id == "contrastive-bb") {
    const SimilarityMode mode = attack.id == "contrastive-wb"
                                    ? SimilarityMode::kWhiteBox
                                    : SimilarityMode::kBlackBox;
    if (mode == SimilarityMode::kWhiteBox) {
      for (const Model* m : fleet_view) {
        if (!m->has_embedding()) {
          throw std::invalid_argument(
              "contrastive-wb: fleet has no embedding surface");
        }
      }
    }
    const ScoreTensor tensor = compute_similarity_tensor(
        fleet_view, work.audit, attack.repeats, attack.policy, mode,
        derive_seed(seed, "similarity"), options.threads);
    FleetAttackOutput out;
    out.variant = attack.id;
    out.tensor = tensor;
    out.records = per_victim_records(
        num_models, options.threads, eval_mask, [&](int v) {
          return lira_attack(tensor, result.membership, v, VariantMode::kSingle,
                             nullptr);
        });
    outputs.push_back(std::move(out));
  } else {
    throw std::invalid_argument("attack.id: unknown attack '" + attack.id + "'");
  }

  // Adaptive selection: keep every variant's records, report the strongest.
  int best = -1;
  double best_quality = -1.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const double quality =
        variant_quality(outputs[i].records, options.fpr_targets);
    result.variant_records[outputs[i].variant] = outputs[i].records;
    result.variant_tensors[outputs[i].variant] = outputs[i].tensor;
    if (quality > best_quality) {
      best_quality = quality;
      best = static_cast<int>(i);
    }
  }
  if (best < 0 || best_quality < 0.0) {
    throw std::runtime_error("leave-one-out: no scorable attack records");
  }
  result.attack_variant = outputs[best].variant;
  result.scores = std::move(outputs[best].tensor);
  result.records = std::move(outputs[best].records);
  return result;
}

NameAndShameResult name_and_shame_sim(int dataset_size, int target_index,
                                      int num_trials, std::uint64_t seed,
                                      const std::vector<double>& fpr_targets,
                                      int threads) {
  if (dataset_size < 2) {
    throw std::invalid_argument("name-and-shame: dataset_size must be >= 2");
  }
  if (target_index < 0 || target_index >= dataset_size) {
    throw std::out_of_range("name-and-shame: target index out of range");
  }
  if (num_trials < 2) {
    throw std::invalid_argument("name-and-shame: num_trials must be >= 2");
  }
  if (fpr_targets.empty()) {
    throw std::invalid_argument("name-and-shame: fpr_targets must be non-empty");
  }

  std::vector<AttackScoreRecord> records(
      static_cast<std::size_t>(num_trials) * dataset_size);
  parallel_for(num_trials, threads, [&](int t) {
    for (int i = 0; i < dataset_size; ++i) {
      Rng rng(derive_seed(seed, "trial", t, i));
      const bool member = rng.uniform() < 0.5;
      AttackScoreRecord& record =
          records[static_cast<std::size_t>(t) * dataset_size + i];
      record.victim_index = t;
      record.audit_index = i;
      record.is_member = member;
      // The pathological defense leaks the target's bit exactly; everything
      // else scores as noise.
      record.attack_score =
          i == target_index ? (member ? 1.0 : 0.0) : rng.uniform();
    }
  });

  ReportContext context;
  context.defense_id = "name-and-shame";
  context.attack_id = "oracle";
  context.family = CanaryFamily::kNone;
  context.fpr_targets = fpr_targets;
  context.num_models = num_trials;
  context.num_audit = dataset_size;
  context.seed = seed;

  NameAndShameResult result;
  result.population = population_report(records, context);
  result.sample_level =
      sample_level_report(records, SampleLevelMode::kPerSample, context);
  return result;
}

MembershipModeResult membership_mode_check(const Dataset& dataset,
                                           const CanarySet& canaries,
                                           const DefenseConfig& defense,
                                           const AttackConfig& attack,
                                           int num_models, std::uint64_t seed,
                                           const LeaveOneOutOptions& options) {
  ReportContext context;
  context.defense_id = defense.id;
  context.attack_id = attack.id;
  context.family = canaries.family;
  context.fpr_targets = options.fpr_targets;
  context.num_models = num_models;
  context.num_audit = static_cast<int>(dataset.audit.size());
  context.seed = seed;
  context.mechanism_params = mechanism_params(defense);

  MembershipModeResult result;
  for (MembershipMode mode :
       {MembershipMode::kFixNonAudit, MembershipMode::kVaryAll}) {
    LeaveOneOutOptions mode_options = options;
    mode_options.membership_mode = mode;
    const LeaveOneOutResult run = run_leave_one_out(
        dataset, canaries, defense, attack, num_models, seed, mode_options);
    context.test_accuracy = run.test_accuracy;
    AuditReport report = population_report(run.records, context);
    report.attack_id = run.attack_variant;
    if (mode == MembershipMode::kFixNonAudit) {
      result.fix_non_audit = std::move(report);
    } else {
      result.vary_all = std::move(report);
    }
  }
  result.tpr_difference.resize(result.vary_all.tpr.size());
  for (std::size_t t = 0; t < result.tpr_difference.size(); ++t) {
    result.tpr_difference[t] =
        result.vary_all.tpr[t] - result.fix_non_audit.tpr[t];
  }
  return result;
}

}  // namespace miaudit
