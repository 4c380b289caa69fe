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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

#include "miaudit/attacks.hpp"
#include "miaudit/core.hpp"
#include "miaudit/data.hpp"
#include "miaudit/defenses.hpp"
#include "miaudit/rng.hpp"

namespace miaudit {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<AttackScoreRecord> make_records(
    const std::vector<double>& positives,
    const std::vector<double>& negatives) {
  std::vector<AttackScoreRecord> records;
  int j = 0;
  for (double s : positives) {
    records.push_back({0, j++, s, true});
  }
  for (double s : negatives) {
    records.push_back({0, j++, s, false});
  }
  return records;
}

bool same_records(const std::vector<AttackScoreRecord>& a,
                  const std::vector<AttackScoreRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].victim_index != b[i].victim_index ||
        a[i].audit_index != b[i].audit_index ||
        a[i].attack_score != b[i].attack_score ||
        a[i].is_member != b[i].is_member) {
      return false;
    }
  }
  return true;
}

TEST(RocCurve, MatchesAHandComputedCurve) {
  const RocCurve curve = roc_curve(make_records({3.0, 2.0}, {2.0, 1.0}));
  EXPECT_EQ(curve.num_positives, 2);
  EXPECT_EQ(curve.num_negatives, 2);
  ASSERT_EQ(curve.points.size(), 4u);
  EXPECT_EQ(curve.points[0].threshold, kInf);
  EXPECT_DOUBLE_EQ(curve.points[0].tpr, 0.0);
  EXPECT_DOUBLE_EQ(curve.points[0].fpr, 0.0);
  EXPECT_DOUBLE_EQ(curve.points[1].threshold, 3.0);
  EXPECT_DOUBLE_EQ(curve.points[1].tpr, 0.5);
  EXPECT_DOUBLE_EQ(curve.points[1].fpr, 0.0);
  // The tied scores at 2.0 flip together in one bucket.
  EXPECT_DOUBLE_EQ(curve.points[2].threshold, 2.0);
  EXPECT_DOUBLE_EQ(curve.points[2].tpr, 1.0);
  EXPECT_DOUBLE_EQ(curve.points[2].fpr, 0.5);
  EXPECT_DOUBLE_EQ(curve.points[3].threshold, 1.0);
  EXPECT_DOUBLE_EQ(curve.points[3].tpr, 1.0);
  EXPECT_DOUBLE_EQ(curve.points[3].fpr, 1.0);
}

TEST(RocCurve, AllEqualScoresCollapseToOneBucket) {
  const RocCurve curve =
      roc_curve(make_records({0.25, 0.25, 0.25}, {0.25, 0.25}));
  ASSERT_EQ(curve.points.size(), 2u);
  EXPECT_EQ(curve.points[0].threshold, kInf);
  EXPECT_DOUBLE_EQ(curve.points[1].threshold, 0.25);
  EXPECT_DOUBLE_EQ(curve.points[1].tpr, 1.0);
  EXPECT_DOUBLE_EQ(curve.points[1].fpr, 1.0);
}

TEST(RocCurve, RejectsDegenerateInputs) {
  EXPECT_THROW(roc_curve({}), std::invalid_argument);
  EXPECT_THROW(roc_curve(make_records({1.0, 2.0}, {})), std::invalid_argument);
  EXPECT_THROW(roc_curve(make_records({}, {1.0})), std::invalid_argument);
  auto bad = make_records({1.0}, {0.0});
  bad[0].attack_score = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(roc_curve(bad), std::invalid_argument);
}

TEST(TprAtFpr, StepsConservatively) {
  const RocCurve curve = roc_curve(make_records({3.0, 2.0}, {2.0, 1.0}));
  double threshold = 0.0;
  bool under = false;
  EXPECT_DOUBLE_EQ(tpr_at_fpr(curve, 0.0, &threshold, &under), 0.5);
  EXPECT_DOUBLE_EQ(threshold, 3.0);
  EXPECT_TRUE(under);  // alpha = 0 can never be resolved
  EXPECT_DOUBLE_EQ(tpr_at_fpr(curve, 0.49, &threshold, &under), 0.5);
  EXPECT_DOUBLE_EQ(threshold, 3.0);
  EXPECT_TRUE(under);  // two negatives cannot resolve alpha < 0.5
  EXPECT_DOUBLE_EQ(tpr_at_fpr(curve, 0.5, &threshold, &under), 1.0);
  EXPECT_DOUBLE_EQ(threshold, 2.0);
  EXPECT_FALSE(under);
  EXPECT_DOUBLE_EQ(tpr_at_fpr(curve, 1.0, &threshold, &under), 1.0);
  EXPECT_DOUBLE_EQ(threshold, 1.0);
  EXPECT_THROW(tpr_at_fpr(curve, -0.1), std::invalid_argument);
  EXPECT_THROW(tpr_at_fpr(curve, 1.5), std::invalid_argument);
}

TEST(TprAtFpr, IsMonotoneInAlphaAndReachesOne) {
  Rng rng(11);
  std::vector<double> pos, neg;
  for (int i = 0; i < 60; ++i) {
    pos.push_back(rng.gaussian(0.4, 1.0));
    neg.push_back(rng.gaussian(0.0, 1.0));
  }
  const RocCurve curve = roc_curve(make_records(pos, neg));
  double prev = -1.0;
  for (double alpha : {0.0, 0.01, 0.05, 0.1, 0.3, 0.5, 0.8, 1.0}) {
    const double tpr = tpr_at_fpr(curve, alpha);
    EXPECT_GE(tpr, prev);
    prev = tpr;
  }
  EXPECT_DOUBLE_EQ(tpr_at_fpr(curve, 1.0), 1.0);
}

// The array fast path must implement exactly the decision rule of the curve,
// including tie buckets, thresholds, and the under-resolved flag.
TEST(TprAtFpr, ScoreFastPathEqualsTheCurvePath) {
  Rng rng(21);
  const std::vector<double> levels = {-1.0, 0.0, 0.25, 0.5, 1.0};
  for (int trial = 0; trial < 200; ++trial) {
    const int n_pos = 1 + static_cast<int>(rng.below(30));
    const int n_neg = 1 + static_cast<int>(rng.below(30));
    std::vector<double> pos, neg;
    const bool discrete = trial % 2 == 0;  // force heavy ties half the time
    for (int i = 0; i < n_pos; ++i) {
      pos.push_back(discrete ? levels[rng.below(levels.size())]
                             : rng.gaussian(0.3, 1.0));
    }
    for (int i = 0; i < n_neg; ++i) {
      neg.push_back(discrete ? levels[rng.below(levels.size())]
                             : rng.gaussian(0.0, 1.0));
    }
    const RocCurve curve = roc_curve(make_records(pos, neg));
    for (double alpha : {0.0, 0.01, 0.3, 0.5, 1.0}) {
      double t_curve = 0.0, t_fast = 0.0;
      bool u_curve = false, u_fast = false;
      const double via_curve = tpr_at_fpr(curve, alpha, &t_curve, &u_curve);
      const double via_fast =
          tpr_at_fpr_scores(pos, neg, alpha, &t_fast, &u_fast);
      EXPECT_EQ(via_curve, via_fast) << "trial " << trial << " a " << alpha;
      EXPECT_EQ(t_curve, t_fast);
      EXPECT_EQ(u_curve, u_fast);
    }
  }
  EXPECT_THROW(tpr_at_fpr_scores({}, {1.0}, 0.5), std::invalid_argument);
  EXPECT_THROW(tpr_at_fpr_scores({1.0}, {}, 0.5), std::invalid_argument);
}

TEST(PopulationReport, EchoesContextAndCounts) {
  ReportContext context;
  context.defense_id = "dpsgd";
  context.attack_id = "lira";
  context.family = CanaryFamily::kMislabeled;
  context.fpr_targets = {0.0, 0.5};
  context.num_models = 8;
  context.num_audit = 4;
  context.seed = 99;
  context.test_accuracy = 0.75;
  context.mechanism_params = {{"clip_norm", 1.5}};
  const AuditReport report =
      population_report(make_records({3.0, 2.0}, {2.0, 1.0}), context);
  EXPECT_EQ(report.protocol, "population");
  EXPECT_EQ(report.sample_mode, "");
  EXPECT_EQ(report.canary_family, "mislabeled");
  EXPECT_EQ(report.defense_id, "dpsgd");
  EXPECT_EQ(report.attack_id, "lira");
  EXPECT_EQ(report.num_records, 4);
  EXPECT_EQ(report.num_positives, 2);
  EXPECT_EQ(report.num_negatives, 2);
  EXPECT_EQ(report.num_models, 8);
  EXPECT_EQ(report.num_audit, 4);
  EXPECT_EQ(report.seed, 99u);
  EXPECT_DOUBLE_EQ(report.test_accuracy, 0.75);
  EXPECT_DOUBLE_EQ(report.mechanism_params.at("clip_norm"), 1.5);
  ASSERT_EQ(report.tpr.size(), 2u);
  EXPECT_DOUBLE_EQ(report.tpr[0], 0.5);
  EXPECT_DOUBLE_EQ(report.tpr[1], 1.0);
  EXPECT_DOUBLE_EQ(report.thresholds[0], 3.0);
  EXPECT_DOUBLE_EQ(report.thresholds[1], 2.0);
  EXPECT_EQ(report.under_resolved[0], 1);
  EXPECT_EQ(report.under_resolved[1], 0);
  ReportContext empty_targets = context;
  empty_targets.fpr_targets.clear();
  EXPECT_THROW(population_report(make_records({1.0}, {0.0}), empty_targets),
               std::invalid_argument);
}

TEST(SampleLevelReport, PooledModeNeedsACanaryFamily) {
  ReportContext context;
  context.family = CanaryFamily::kNone;
  const auto records = make_records({3.0, 2.0}, {2.0, 1.0});
  EXPECT_THROW(
      sample_level_report(records, SampleLevelMode::kPooledCanaries, context),
      std::invalid_argument);
  context.family = CanaryFamily::kOod;
  const AuditReport pooled =
      sample_level_report(records, SampleLevelMode::kPooledCanaries, context);
  EXPECT_EQ(pooled.protocol, "sample-level");
  EXPECT_EQ(pooled.sample_mode, "pooled-canaries");
  EXPECT_EQ(pooled.canary_family, "ood");
  // Same ROC as the population report, different markers.
  const AuditReport population = population_report(records, context);
  EXPECT_EQ(pooled.tpr, population.tpr);
  EXPECT_EQ(pooled.thresholds, population.thresholds);
}

TEST(SampleLevelReport, PerSampleModeGroupsByAuditIndex) {
  // Sample 0 separates perfectly, sample 1 is anti-correlated, sample 2 has
  // no non-member runs and cannot be scored.
  std::vector<AttackScoreRecord> records;
  for (int v = 0; v < 3; ++v) records.push_back({v, 0, 1.0, true});
  for (int v = 3; v < 6; ++v) records.push_back({v, 0, 0.0, false});
  for (int v = 0; v < 2; ++v) records.push_back({v, 1, 0.0, true});
  for (int v = 2; v < 4; ++v) records.push_back({v, 1, 1.0, false});
  for (int v = 0; v < 2; ++v) records.push_back({v, 2, 0.7, true});

  ReportContext context;
  context.fpr_targets = {0.0, 0.5};
  const AuditReport report =
      sample_level_report(records, SampleLevelMode::kPerSample, context);
  EXPECT_EQ(report.protocol, "sample-level");
  EXPECT_EQ(report.sample_mode, "per-sample");
  EXPECT_EQ(report.num_records, 12);
  EXPECT_EQ(report.num_positives, 7);
  EXPECT_EQ(report.num_negatives, 5);
  ASSERT_EQ(report.sample_indices, (std::vector<int>{0, 1}));
  ASSERT_EQ(report.per_sample_tpr.size(), 2u);
  EXPECT_DOUBLE_EQ(report.per_sample_tpr[0][0], 1.0);
  EXPECT_DOUBLE_EQ(report.per_sample_tpr[0][1], 1.0);
  EXPECT_DOUBLE_EQ(report.per_sample_tpr[1][0], 0.0);
  EXPECT_DOUBLE_EQ(report.per_sample_tpr[1][1], 0.0);
  EXPECT_EQ(report.max_tpr, (std::vector<double>{1.0, 1.0}));
  EXPECT_EQ(report.argmax_sample, (std::vector<int>{0, 0}));
  // The headline TPR is the per-target maximum over samples.
  EXPECT_EQ(report.tpr, report.max_tpr);
  EXPECT_EQ(report.under_resolved[0], 1);
  EXPECT_EQ(report.under_resolved[1], 0);

  // Only unscorable slots present: nothing to report.
  std::vector<AttackScoreRecord> one_sided;
  for (int v = 0; v < 4; ++v) one_sided.push_back({v, 0, 0.5, true});
  EXPECT_THROW(
      sample_level_report(one_sided, SampleLevelMode::kPerSample, context),
      std::invalid_argument);
}

TEST(MembershipMode, StringsRoundTrip) {
  EXPECT_EQ(to_string(MembershipMode::kFixNonAudit), "fix-non-audit");
  EXPECT_EQ(to_string(MembershipMode::kVaryAll), "vary-all");
  EXPECT_EQ(membership_mode_from_string("fix-non-audit"),
            MembershipMode::kFixNonAudit);
  EXPECT_EQ(membership_mode_from_string("vary-all"), MembershipMode::kVaryAll);
  EXPECT_THROW(membership_mode_from_string("both"), std::invalid_argument);
}

class LeaveOneOutTest : public ::testing::Test {
 protected:
  LeaveOneOutTest() {
    spec_.num_classes = 2;
    spec_.dim = 4;
    spec_.per_class = 30;
    spec_.separation = 6.0;
    spec_.num_audit = 12;
    spec_.seed = 5;
    dataset_ = gen_synthetic(spec_);
    defense_.id = "undefended";
    defense_.kind = ModelKind::kMlp1Hidden;
    defense_.train.epochs = 6;
    defense_.train.batch_size = 8;
    defense_.train.learning_rate = 0.2;
    defense_.train.hidden_width = 8;
    attack_.id = "lira";
    attack_.augmentations = 3;
  }

  SyntheticSpec spec_;
  Dataset dataset_;
  DefenseConfig defense_;
  AttackConfig attack_;
  static constexpr int kModels = 8;
  static constexpr std::uint64_t kSeed = 33;
};

TEST_F(LeaveOneOutTest, RecordsCoverEveryVictimAndScoredSlot) {
  LeaveOneOutOptions options;
  options.test_set = gen_test_set(spec_, 40);
  const LeaveOneOutResult result = run_leave_one_out(
      dataset_, make_none(dataset_), defense_, attack_, kModels, kSeed, options);
  const int c = static_cast<int>(dataset_.audit.size());
  EXPECT_EQ(result.num_eval_slots, c);
  EXPECT_EQ(result.membership.num_models(), kModels);
  EXPECT_EQ(result.membership.num_audit(), c);
  for (int j = 0; j < c; ++j) {
    EXPECT_EQ(result.membership.column_sum(j), kModels / 2);
  }
  ASSERT_EQ(static_cast<int>(result.records.size()), kModels * c);
  long long positives = 0;
  std::vector<int> per_victim(kModels, 0);
  for (const AttackScoreRecord& r : result.records) {
    positives += r.is_member ? 1 : 0;
    per_victim[r.victim_index]++;
    EXPECT_EQ(r.is_member,
              result.membership.is_member(r.victim_index, r.audit_index));
  }
  EXPECT_EQ(positives, static_cast<long long>(kModels / 2) * c);
  for (int v = 0; v < kModels; ++v) EXPECT_EQ(per_victim[v], c);

  // The fleet exposes logits and augmentations > 1, so all four
  // likelihood-ratio variants must be present; the winner is one of them.
  ASSERT_EQ(result.variant_records.size(), 4u);
  for (const char* name :
       {"lira[logit,multivariate]", "lira[logit,single]",
        "lira[hinge,multivariate]", "lira[hinge,single]"}) {
    EXPECT_EQ(result.variant_records.count(name), 1u) << name;
    EXPECT_EQ(result.variant_tensors.count(name), 1u) << name;
  }
  EXPECT_EQ(result.variant_records.count(result.attack_variant), 1u);
  EXPECT_TRUE(same_records(result.records,
                           result.variant_records.at(result.attack_variant)));
  const ScoreTensor& tensor = result.variant_tensors.begin()->second;
  EXPECT_EQ(tensor.num_models, kModels);
  EXPECT_EQ(tensor.num_audit, c);
  EXPECT_EQ(tensor.num_variants, attack_.augmentations);
  EXPECT_GE(result.test_accuracy, 0.0);
  EXPECT_LE(result.test_accuracy, 1.0);
  EXPECT_TRUE(result.warnings.empty());
}

TEST_F(LeaveOneOutTest, ThreadCountDoesNotChangeTheOutcome) {
  LeaveOneOutOptions one;
  one.threads = 1;
  one.test_set = gen_test_set(spec_, 40);
  LeaveOneOutOptions four = one;
  four.threads = 4;
  const LeaveOneOutResult a = run_leave_one_out(
      dataset_, make_none(dataset_), defense_, attack_, kModels, kSeed, one);
  const LeaveOneOutResult b = run_leave_one_out(
      dataset_, make_none(dataset_), defense_, attack_, kModels, kSeed, four);
  EXPECT_EQ(a.attack_variant, b.attack_variant);
  EXPECT_TRUE(same_records(a.records, b.records));
  EXPECT_EQ(a.scores.values, b.scores.values);
  EXPECT_EQ(a.test_accuracy, b.test_accuracy);
  for (const auto& [name, records] : a.variant_records) {
    EXPECT_TRUE(same_records(records, b.variant_records.at(name))) << name;
  }
}

TEST_F(LeaveOneOutTest, FleetCacheReplaysAndSurvivesCorruption) {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / "miaudit-cache-test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  LeaveOneOutOptions options;
  options.cache_dir = dir.string();
  options.cache_key = 0xabcdef0123456789ULL;
  const LeaveOneOutResult cold = run_leave_one_out(
      dataset_, make_none(dataset_), defense_, attack_, kModels, kSeed, options);
  const std::filesystem::path cache_file = dir / "fleet-abcdef0123456789.cbor";
  ASSERT_TRUE(std::filesystem::exists(cache_file));
  const LeaveOneOutResult warm = run_leave_one_out(
      dataset_, make_none(dataset_), defense_, attack_, kModels, kSeed, options);
  EXPECT_TRUE(same_records(cold.records, warm.records));
  EXPECT_EQ(cold.attack_variant, warm.attack_variant);
  // Truncate the cache: the run must fall back to training and recreate it.
  std::filesystem::resize_file(cache_file, 10);
  const LeaveOneOutResult repaired = run_leave_one_out(
      dataset_, make_none(dataset_), defense_, attack_, kModels, kSeed, options);
  EXPECT_TRUE(same_records(cold.records, repaired.records));
  EXPECT_GT(std::filesystem::file_size(cache_file), 10u);
  std::filesystem::remove_all(dir);
}

TEST_F(LeaveOneOutTest, VaryAllWidensMembershipButNotTheRecords) {
  LeaveOneOutOptions options;
  options.membership_mode = MembershipMode::kVaryAll;
  const LeaveOneOutResult result = run_leave_one_out(
      dataset_, make_none(dataset_), defense_, attack_, kModels, kSeed, options);
  const int c = static_cast<int>(dataset_.audit.size());
  const int fixed = static_cast<int>(dataset_.fixed.size());
  EXPECT_EQ(result.membership.num_audit(), c + fixed);
  EXPECT_EQ(result.num_eval_slots, c);
  EXPECT_EQ(static_cast<int>(result.records.size()), kModels * c);
  for (const AttackScoreRecord& r : result.records) {
    EXPECT_LT(r.audit_index, c);
  }
}

TEST_F(LeaveOneOutTest, DuplicateFamilyScoresOnlyTheTwins) {
  const CanarySet canaries = make_duplicated_mislabeled(dataset_, 9);
  const LeaveOneOutResult result = run_leave_one_out(
      dataset_, canaries, defense_, attack_, kModels, kSeed, {});
  const int c = static_cast<int>(dataset_.audit.size());
  EXPECT_EQ(result.num_eval_slots, c / 2);
  EXPECT_EQ(static_cast<int>(result.records.size()), kModels * (c / 2));
  for (const AttackScoreRecord& r : result.records) {
    EXPECT_EQ(r.audit_index % 2, 1) << "only mislabeled twins are scored";
  }
}

TEST_F(LeaveOneOutTest, ValidatesOptionsAndAttackId) {
  LeaveOneOutOptions bad_threads;
  bad_threads.threads = 0;
  EXPECT_THROW(run_leave_one_out(dataset_, make_none(dataset_), defense_,
                                 attack_, kModels, kSeed, bad_threads),
               std::invalid_argument);
  LeaveOneOutOptions no_targets;
  no_targets.fpr_targets.clear();
  EXPECT_THROW(run_leave_one_out(dataset_, make_none(dataset_), defense_,
                                 attack_, kModels, kSeed, no_targets),
               std::invalid_argument);
  AttackConfig unknown = attack_;
  unknown.id = "psychic";
  try {
    run_leave_one_out(dataset_, make_none(dataset_), defense_, unknown,
                      kModels, kSeed, {});
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("psychic"), std::string::npos);
  }
}

// On engine-generated runs every sample accumulates the same balanced record
// counts, and the pooled ROC is expected to sit inside the per-sample TPR
// envelope at resolvable targets.
TEST_F(LeaveOneOutTest, PooledTprStaysInsideThePerSampleEnvelope) {
  const CanarySet canaries = make_mislabeled(dataset_, 5);
  const LeaveOneOutResult run = run_leave_one_out(
      dataset_, canaries, defense_, attack_, kModels, kSeed, {});
  ReportContext context;
  context.family = canaries.family;
  // S = 8 gives 4 negatives per sample, resolving alpha >= 0.25.
  context.fpr_targets = {0.25, 0.5, 1.0};
  const AuditReport pooled = sample_level_report(
      run.records, SampleLevelMode::kPooledCanaries, context);
  const AuditReport per_sample =
      sample_level_report(run.records, SampleLevelMode::kPerSample, context);
  ASSERT_EQ(per_sample.sample_indices.size(), dataset_.audit.size());
  for (std::size_t t = 0; t < context.fpr_targets.size(); ++t) {
    double lo = 1.0, hi = 0.0;
    for (const auto& row : per_sample.per_sample_tpr) {
      lo = std::min(lo, row[t]);
      hi = std::max(hi, row[t]);
    }
    EXPECT_LE(pooled.tpr[t], hi + 1e-12) << "target " << t;
    EXPECT_GE(pooled.tpr[t], lo - 1e-12) << "target " << t;
    EXPECT_GE(per_sample.max_tpr[t], pooled.tpr[t] - 1e-12);
  }
}

TEST_F(LeaveOneOutTest, MembershipModeCheckComparesBothRegimes) {
  MembershipModeResult result =
      membership_mode_check(dataset_, make_none(dataset_), defense_, attack_,
                            kModels, kSeed, {});
  EXPECT_EQ(result.fix_non_audit.protocol, "population");
  EXPECT_EQ(result.vary_all.protocol, "population");
  ASSERT_EQ(result.tpr_difference.size(), result.vary_all.tpr.size());
  for (std::size_t t = 0; t < result.tpr_difference.size(); ++t) {
    EXPECT_DOUBLE_EQ(result.tpr_difference[t],
                     result.vary_all.tpr[t] - result.fix_non_audit.tpr[t]);
  }
  EXPECT_NE(result.fix_non_audit.attack_id.find("lira"), std::string::npos);
}

TEST(NameAndShame, TargetLeaksCompletelyWhilePopulationStaysFlat) {
  const int size = 20, target = 7, trials = 400;
  const NameAndShameResult result =
      name_and_shame_sim(size, target, trials, 3, {0.0, 0.1});
  EXPECT_EQ(result.population.protocol, "population");
  EXPECT_EQ(result.population.num_records,
            static_cast<long long>(size) * trials);
  // Per-sample: the target's bit is reproduced exactly, so its ROC is
  // perfect; all other samples are noise.
  const AuditReport& sample = result.sample_level;
  ASSERT_EQ(sample.sample_indices.size(), static_cast<std::size_t>(size));
  EXPECT_DOUBLE_EQ(sample.max_tpr[0], 1.0);
  EXPECT_EQ(sample.argmax_sample[0], target);
  const auto it = std::find(sample.sample_indices.begin(),
                            sample.sample_indices.end(), target);
  ASSERT_NE(it, sample.sample_indices.end());
  const std::size_t row = it - sample.sample_indices.begin();
  EXPECT_DOUBLE_EQ(sample.per_sample_tpr[row][0], 1.0);
  // Population TPR at FPR 0 is the target's share of the positives: about
  // 1 / size, far from the per-sample 1.0.
  EXPECT_GT(result.population.tpr[0], 0.0);
  EXPECT_LT(result.population.tpr[0], 0.12);

  const NameAndShameResult again =
      name_and_shame_sim(size, target, trials, 3, {0.0, 0.1});
  EXPECT_EQ(result.population.tpr, again.population.tpr);
  const NameAndShameResult threaded =
      name_and_shame_sim(size, target, trials, 3, {0.0, 0.1}, 4);
  EXPECT_EQ(result.population.tpr, threaded.population.tpr);
  EXPECT_EQ(result.sample_level.max_tpr, threaded.sample_level.max_tpr);

  EXPECT_THROW(name_and_shame_sim(1, 0, 10, 0), std::invalid_argument);
  EXPECT_THROW(name_and_shame_sim(10, 10, 10, 0), std::out_of_range);
  EXPECT_THROW(name_and_shame_sim(10, 0, 1, 0), std::invalid_argument);
}

}  // namespace
}  // namespace miaudit
