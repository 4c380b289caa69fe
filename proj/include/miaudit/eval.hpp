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
#ifndef MIAUDIT_EVAL_HPP_
#define MIAUDIT_EVAL_HPP_

// ROC machinery with exact tie handling, population-level and sample-level
// audit reports, the leave-one-out fleet protocol, the name-and-shame
// harness, and the membership-mode comparison.

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "miaudit/attacks.hpp"
#include "miaudit/core.hpp"
#include "miaudit/data.hpp"
#include "miaudit/defenses.hpp"

namespace miaudit {

struct RocPoint {
  double threshold = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
};

// Points sorted by descending threshold, starting at (+inf, 0, 0); ties share
// one bucket so all equal scores flip together; the final bucket always
// reaches (1, 1), the implicit -inf endpoint.
struct RocCurve {
  std::vector<RocPoint> points;
  long long num_positives = 0;
  long long num_negatives = 0;
};

RocCurve roc_curve(const std::vector<AttackScoreRecord>& records);

// TPR at the smallest threshold whose FPR <= alpha; conservative step
// function, no interpolation.  Optionally reports the chosen threshold and
// whether the estimate is under-resolved (fewer negatives than 1/alpha).
double tpr_at_fpr(const RocCurve& curve, double alpha,
                  double* threshold_out = nullptr,
                  bool* under_resolved_out = nullptr);

// Same decision rule computed from raw positive/negative score arrays
// without materializing records; used by the trial-heavy harnesses and
// property-tested equal to roc_curve + tpr_at_fpr.
double tpr_at_fpr_scores(std::vector<double> positive_scores,
                         std::vector<double> negative_scores, double alpha,
                         double* threshold_out = nullptr,
                         bool* under_resolved_out = nullptr);

// Shared context describing the run a report summarizes.
struct ReportContext {
  std::string defense_id;
  std::string attack_id;
  CanaryFamily family = CanaryFamily::kNone;
  std::vector<double> fpr_targets = {0.001, 0.01, 0.1};
  int num_models = 0;
  int num_audit = 0;
  std::uint64_t seed = 0;
  double test_accuracy = std::numeric_limits<double>::quiet_NaN();
  std::map<std::string, double> mechanism_params;
};

struct AuditReport {
  std::string protocol;     // "population" | "sample-level"
  std::string sample_mode;  // "" | "pooled-canaries" | "per-sample"
  std::string canary_family;
  std::string defense_id;
  std::string attack_id;
  std::vector<double> fpr_targets;
  std::vector<double> tpr;                  // parallel to fpr_targets
  std::vector<double> thresholds;           // parallel
  std::vector<std::uint8_t> under_resolved; // parallel
  int num_models = 0;
  int num_audit = 0;
  long long num_records = 0;
  long long num_positives = 0;
  long long num_negatives = 0;
  std::uint64_t seed = 0;
  double test_accuracy = std::numeric_limits<double>::quiet_NaN();
  std::map<std::string, double> mechanism_params;
  // per-sample mode only:
  std::vector<int> sample_indices;
  std::vector<std::vector<double>> per_sample_tpr;  // [sample][target]
  std::vector<double> max_tpr;                      // per target
  std::vector<int> argmax_sample;                   // per target
};

// One ROC pooled over all records.
AuditReport population_report(const std::vector<AttackScoreRecord>& records,
                              const ReportContext& context);

enum class SampleLevelMode { kPooledCanaries, kPerSample };

// pooled-canaries: one ROC over canary records only (requires a canary
// family != none).  per-sample: one ROC per audit sample across victim runs,
// reporting each sample's TPR at the targets plus the per-target maximum.
AuditReport sample_level_report(const std::vector<AttackScoreRecord>& records,
                                SampleLevelMode mode,
                                const ReportContext& context);

enum class MembershipMode { kFixNonAudit, kVaryAll };

std::string to_string(MembershipMode mode);
MembershipMode membership_mode_from_string(const std::string& name);

struct LeaveOneOutOptions {
  MembershipMode membership_mode = MembershipMode::kFixNonAudit;
  int threads = 1;
  std::vector<Example> test_set;  // empty = skip utility measurement
  std::vector<double> fpr_targets = {0.001, 0.01, 0.1};
  // Fleet cache: when cache_dir is non-empty, trained fleets are stored at
  // cache_dir/fleet-<cache_key hex>.cbor and reloaded on matching keys.  The
  // caller must fold everything that shapes the fleet (dataset, canaries,
  // defense, model count, membership mode, seed, engine version) into the
  // key; a stale key silently reuses the wrong models.
  std::string cache_dir;
  std::uint64_t cache_key = 0;
};

struct LeaveOneOutResult {
  MembershipMatrix membership{2, 1};
  ScoreTensor scores;                       // winning variant's tensor
  std::vector<AttackScoreRecord> records;   // winning variant, eval-masked
  std::string attack_variant;               // e.g. "lira[logit,multivariate]"
  std::map<std::string, std::vector<AttackScoreRecord>> variant_records;
  std::map<std::string, ScoreTensor> variant_tensors;
  std::vector<std::string> warnings;
  double test_accuracy = std::numeric_limits<double>::quiet_NaN();
  int num_eval_slots = 0;
};

// Trains S fleet members under balanced membership, runs the attack once per
// victim with the remaining S-1 models as shadows, and concatenates the
// eval-masked records.  Deterministic end-to-end given seed, for any thread
// count.
LeaveOneOutResult run_leave_one_out(const Dataset& dataset,
                                    const CanarySet& canaries,
                                    const DefenseConfig& defense,
                                    const AttackConfig& attack, int num_models,
                                    std::uint64_t seed,
                                    const LeaveOneOutOptions& options = {});

struct NameAndShameResult {
  AuditReport population;
  AuditReport sample_level;  // per-sample mode over all dataset slots
};

// Simulates the pathological defense that outputs exactly the membership bit
// of one fixed target sample; every other sample's attack score is an
// independent uniform draw.  Population TPR stays within alpha + 1/|D| while
// the target leaks completely.
NameAndShameResult name_and_shame_sim(int dataset_size, int target_index,
                                      int num_trials, std::uint64_t seed,
                                      const std::vector<double>& fpr_targets =
                                          {0.0, 0.001, 0.01, 0.1},
                                      int threads = 1);

struct MembershipModeResult {
  AuditReport fix_non_audit;
  AuditReport vary_all;
  // Difference vary_all - fix_non_audit of population TPR per target.
  std::vector<double> tpr_difference;
};

// Runs the identical attack under both membership regimes: audit-only
// resampling versus every fixed example also getting an independent
// membership column (scored records still cover only the audit slots).
MembershipModeResult membership_mode_check(const Dataset& dataset,
                                           const CanarySet& canaries,
                                           const DefenseConfig& defense,
                                           const AttackConfig& attack,
                                           int num_models, std::uint64_t seed,
                                           const LeaveOneOutOptions& options = {});

}  // namespace miaudit

#endif  // MIAUDIT_EVAL_HPP_
