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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace miaudit {
namespace {

Example ex(std::vector<double> f, int label, std::uint64_t id) {
  return Example{std::move(f), label, id};
}

Dataset small_dataset() {
  Dataset d;
  d.num_classes = 2;
  d.dim = 2;
  d.fixed = {ex({0.0, 0.0}, 0, 1), ex({1.0, 1.0}, 1, 2)};
  d.audit = {ex({2.0, 0.0}, 0, 3), ex({0.0, 2.0}, 1, 4)};
  return d;
}

TEST(ValidateDataset, AcceptsWellFormed) {
  EXPECT_NO_THROW(validate_dataset(small_dataset()));
}

TEST(ValidateDataset, RejectsDimensionMismatch) {
  Dataset d = small_dataset();
  d.audit[0].features.push_back(0.0);
  EXPECT_THROW(validate_dataset(d), std::invalid_argument);
}

TEST(ValidateDataset, RejectsLabelOutOfRange) {
  Dataset d = small_dataset();
  d.fixed[1].label = 2;
  EXPECT_THROW(validate_dataset(d), std::invalid_argument);
  d.fixed[1].label = -1;
  EXPECT_THROW(validate_dataset(d), std::invalid_argument);
}

TEST(ValidateDataset, RejectsNonFiniteFeatures) {
  Dataset d = small_dataset();
  d.audit[1].features[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(validate_dataset(d), std::invalid_argument);
  d.audit[1].features[0] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(validate_dataset(d), std::invalid_argument);
}

TEST(ValidateDataset, RejectsDuplicateIdsAcrossSplits) {
  Dataset d = small_dataset();
  d.audit[0].id = d.fixed[0].id;
  EXPECT_THROW(validate_dataset(d), std::invalid_argument);
  d = small_dataset();
  d.audit[1].id = d.audit[0].id;
  EXPECT_THROW(validate_dataset(d), std::invalid_argument);
}

TEST(ValidateDataset, RejectsEmptyAudit) {
  Dataset d = small_dataset();
  d.audit.clear();
  EXPECT_THROW(validate_dataset(d), std::invalid_argument);
}

TEST(MembershipMatrix, SetAndGetRoundTrip) {
  MembershipMatrix m(4, 3);
  EXPECT_EQ(m.num_models(), 4);
  EXPECT_EQ(m.num_audit(), 3);
  EXPECT_FALSE(m.is_member(2, 1));
  m.set(2, 1, true);
  EXPECT_TRUE(m.is_member(2, 1));
  EXPECT_EQ(m.column_sum(1), 1);
  m.set(2, 1, false);
  EXPECT_EQ(m.column_sum(1), 0);
}

TEST(AssignMemberships, EveryColumnSumsToHalfTheModels) {
  for (int s : {2, 4, 8, 16}) {
    const MembershipMatrix m = assign_memberships(s, 37, 123);
    for (int j = 0; j < 37; ++j) {
      ASSERT_EQ(m.column_sum(j), s / 2) << "S=" << s << " column " << j;
    }
  }
}

TEST(AssignMemberships, RejectsDegenerateShapes) {
  EXPECT_THROW(assign_memberships(7, 10, 0), std::invalid_argument);
  EXPECT_THROW(assign_memberships(0, 10, 0), std::invalid_argument);
  EXPECT_THROW(assign_memberships(-2, 10, 0), std::invalid_argument);
  EXPECT_THROW(assign_memberships(4, 0, 0), std::invalid_argument);
}

TEST(AssignMemberships, IsDeterministicInSeed) {
  const MembershipMatrix a = assign_memberships(8, 50, 9);
  const MembershipMatrix b = assign_memberships(8, 50, 9);
  const MembershipMatrix c = assign_memberships(8, 50, 10);
  EXPECT_EQ(a.bits(), b.bits());
  EXPECT_NE(a.bits(), c.bits());
}

// Row inclusion frequency for a fixed column across many seeds: each model
// should be a member about half the time (binomial 3 sigma window).
TEST(AssignMemberships, RowInclusionIsBalancedAcrossSeeds) {
  const int num_seeds = 1000;
  const int s = 8;
  std::vector<int> row_counts(s, 0);
  for (int seed = 0; seed < num_seeds; ++seed) {
    const MembershipMatrix m = assign_memberships(s, 3, seed);
    for (int r = 0; r < s; ++r) {
      if (m.is_member(r, 1)) ++row_counts[r];
    }
  }
  const double sigma = std::sqrt(num_seeds * 0.25);
  for (int r = 0; r < s; ++r) {
    EXPECT_NEAR(row_counts[r], num_seeds / 2.0, 3.5 * sigma) << "row " << r;
  }
}

// Columns are sampled independently, so two columns under one seed should
// not be identical in general.
TEST(AssignMemberships, ColumnsVary) {
  const MembershipMatrix m = assign_memberships(16, 40, 5);
  int identical_pairs = 0;
  for (int j = 1; j < 40; ++j) {
    bool same = true;
    for (int s = 0; s < 16; ++s) {
      if (m.is_member(s, j) != m.is_member(s, 0)) {
        same = false;
        break;
      }
    }
    if (same) ++identical_pairs;
  }
  EXPECT_LT(identical_pairs, 5);
}

TEST(TrainingSetFor, FixedFirstThenMemberAuditInSlotOrder) {
  const Dataset d = small_dataset();
  MembershipMatrix m(2, 2);
  m.set(0, 0, true);
  m.set(1, 1, true);
  const std::vector<Example> t0 = training_set_for(d, m, 0);
  ASSERT_EQ(t0.size(), 3u);
  EXPECT_EQ(t0[0].id, 1u);
  EXPECT_EQ(t0[1].id, 2u);
  EXPECT_EQ(t0[2].id, 3u);
  const std::vector<Example> t1 = training_set_for(d, m, 1);
  ASSERT_EQ(t1.size(), 3u);
  EXPECT_EQ(t1[2].id, 4u);
}

TEST(TrainingSetFor, IsPure) {
  const Dataset d = small_dataset();
  const MembershipMatrix m = assign_memberships(2, 2, 3);
  const std::vector<Example> a = training_set_for(d, m, 0);
  const std::vector<Example> b = training_set_for(d, m, 0);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].label, b[i].label);
    EXPECT_EQ(a[i].features, b[i].features);
  }
}

TEST(TrainingSetFor, RejectsShapeMismatches) {
  const Dataset d = small_dataset();
  const MembershipMatrix wrong_width = assign_memberships(2, 3, 0);
  EXPECT_THROW(training_set_for(d, wrong_width, 0), std::invalid_argument);
  const MembershipMatrix m = assign_memberships(2, 2, 0);
  EXPECT_THROW(training_set_for(d, m, 2), std::out_of_range);
  EXPECT_THROW(training_set_for(d, m, -1), std::out_of_range);
}

TEST(ScoreTensor, RowMajorIndexing) {
  ScoreTensor t(2, 3, 2);
  EXPECT_EQ(t.values.size(), 12u);
  t.at(1, 2, 1) = 42.0;
  EXPECT_DOUBLE_EQ(t.values[(1 * 3 + 2) * 2 + 1], 42.0);
  const ScoreTensor& ct = t;
  EXPECT_DOUBLE_EQ(ct.at(1, 2, 1), 42.0);
  EXPECT_DOUBLE_EQ(ct.at(0, 0, 0), 0.0);
}

TEST(GaussianPair, UnivariateAccessorsReturnStds) {
  const GaussianPair p = GaussianPair::univariate(1.0, 2.0, -1.0, 0.5);
  EXPECT_EQ(p.dim(), 1);
  EXPECT_DOUBLE_EQ(p.mu_in[0], 1.0);
  EXPECT_DOUBLE_EQ(p.mu_out[0], -1.0);
  EXPECT_DOUBLE_EQ(p.sigma_in(), 2.0);
  EXPECT_DOUBLE_EQ(p.sigma_out(), 0.5);
  EXPECT_DOUBLE_EQ(p.cov_in[0], 4.0);
  EXPECT_DOUBLE_EQ(p.cov_out[0], 0.25);
}

TEST(GaussianPair, UnivariateRejectsNonPositiveSigma) {
  EXPECT_THROW(GaussianPair::univariate(0.0, 0.0, 0.0, 1.0),
               std::invalid_argument);
  EXPECT_THROW(GaussianPair::univariate(0.0, 1.0, 0.0, -2.0),
               std::invalid_argument);
}

TEST(GaussianPair, SigmaAccessorsRequireScalarCase) {
  GaussianPair p;
  p.mu_in = {0.0, 0.0};
  p.mu_out = {0.0, 0.0};
  p.cov_in = {1.0, 0.0, 0.0, 1.0};
  p.cov_out = {1.0, 0.0, 0.0, 1.0};
  EXPECT_EQ(p.dim(), 2);
  EXPECT_THROW(p.sigma_in(), std::logic_error);
  EXPECT_THROW(p.sigma_out(), std::logic_error);
}

TEST(ModelKind, RoundTripsThroughStrings) {
  for (ModelKind kind :
       {ModelKind::kLinearSoftmax, ModelKind::kMlp1Hidden,
        ModelKind::kSplitAiEnsemble, ModelKind::kDistilledStudent,
        ModelKind::kContrastiveEncoderHead, ModelKind::kMaskedWrapper}) {
    EXPECT_EQ(model_kind_from_string(to_string(kind)), kind);
  }
  EXPECT_THROW(model_kind_from_string("bogus"), std::invalid_argument);
}

}  // namespace
}  // namespace miaudit
