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
#ifndef MIAUDIT_DATA_HPP_
#define MIAUDIT_DATA_HPP_

// Synthetic dataset generation plus the four canary families injected into
// audit slots.  Canaries are crafted worst-case samples whose leakage upper
// bounds the leakage of natural data.

#include <cstdint>
#include <string>
#include <vector>

#include "miaudit/core.hpp"

namespace miaudit {

// Gaussian mixture with K mutually equidistant class means (pairwise distance
// `separation`), unit within-class std, and an optional long tail: a
// `tail_fraction` of each class is drawn from a displaced rare sub-cluster.
struct SyntheticSpec {
  int num_classes = 4;
  int dim = 8;
  int per_class = 500;       // pool size per class, before the audit split
  double separation = 6.0;
  double tail_fraction = 0.0;
  int num_audit = 500;       // audit slots carved out of the pool
  std::uint64_t seed = 0;
};

// Within-class standard deviation of every synthetic class.
inline constexpr double kWithinClassStd = 1.0;
// Rare sub-cluster means sit at 3x the within-class std from the class mean.
inline constexpr double kTailDisplacement = 3.0;

Dataset gen_synthetic(const SyntheticSpec& spec);

// Fresh held-out draw from the same mixture, for utility (test accuracy)
// measurements.  Labels cycle round-robin through the classes.
std::vector<Example> gen_test_set(const SyntheticSpec& spec, int count);

enum class CanaryFamily {
  kNone,
  kMislabeled,
  kMislabeledDuplicate,
  kOod,
  kUniform,
};

std::string to_string(CanaryFamily family);
CanaryFamily canary_family_from_string(const std::string& name);

// Replacement audit slots plus a mask of which slots are scored by attacks.
struct CanarySet {
  CanaryFamily family = CanaryFamily::kNone;
  std::vector<Example> examples;
  std::vector<std::uint8_t> eval_mask;
};

// Pass-through: audit slots unchanged, every slot scored.
CanarySet make_none(const Dataset& dataset);

// Every audit sample relabeled with a uniform draw over the K-1 classes that
// differ from its original label; features untouched.
CanarySet make_mislabeled(const Dataset& dataset, std::uint64_t seed);

// C/2 audit samples, each paired with an exact feature copy under a fresh id;
// the copy is mislabeled and only the mislabeled half is scored.  Pairs are
// interleaved: slot 2i holds the clean original, slot 2i+1 its mislabeled twin.
CanarySet make_duplicated_mislabeled(const Dataset& dataset, std::uint64_t seed);

// Audit features redrawn around points displaced by `shift` from the global
// data mean, one independent random direction per canary; labels uniform.
CanarySet make_ood(const Dataset& dataset, double shift, std::uint64_t seed);

// Audit features i.i.d. uniform on [lo, hi]^d; labels uniform.
CanarySet make_uniform(const Dataset& dataset, double lo, double hi,
                       std::uint64_t seed);

// Dataset with audit slots replaced by the canary set (fixed part untouched).
Dataset with_canaries(const Dataset& dataset, const CanarySet& canaries);

}  // namespace miaudit

#endif  // MIAUDIT_DATA_HPP_
