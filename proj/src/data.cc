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
#include "miaudit/data.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "miaudit/rng.hpp"

namespace miaudit {
namespace {

void validate_spec(const SyntheticSpec& spec) {
  if (spec.num_classes < 2) {
    throw std::invalid_argument("synthetic spec: num_classes must be >= 2");
  }
  if (spec.dim < 2) {
    throw std::invalid_argument("synthetic spec: dim must be >= 2");
  }
  if (spec.per_class < 1) {
    throw std::invalid_argument("synthetic spec: per_class must be >= 1");
  }
  if (spec.separation < 0.0) {
    throw std::invalid_argument("synthetic spec: separation must be >= 0");
  }
  if (spec.tail_fraction < 0.0 || spec.tail_fraction >= 1.0) {
    throw std::invalid_argument("synthetic spec: tail_fraction must be in [0,1)");
  }
  // Means are placed at scaled standard basis vectors, which keeps every pair
  // of class means at exactly `separation`; that construction needs one axis
  // per class.
  if (spec.dim < spec.num_classes) {
    throw std::invalid_argument(
        "synthetic spec: dim too small to place num_classes equidistant means "
        "(need dim >= num_classes)");
  }
  if (spec.num_audit < 1) {
    throw std::invalid_argument("synthetic spec: num_audit must be >= 1");
  }
  const long long pool =
      static_cast<long long>(spec.num_classes) * spec.per_class;
  if (spec.num_audit >= pool) {
    throw std::invalid_argument(
        "synthetic spec: num_audit must leave at least one fixed example");
  }
}

// ||a e_i - a e_j|| = a*sqrt(2), so a = separation / sqrt(2).
double mean_scale(double separation) { return separation / std::sqrt(2.0); }

std::vector<double> tail_direction(const SyntheticSpec& spec, int label) {
  Rng rng(derive_seed(spec.seed, "tail-direction", label));
  return rng.unit_vector(spec.dim);
}

Example draw_example(const SyntheticSpec& spec, int label, std::uint64_t id,
                     Rng& rng, const std::vector<double>& tail_dir) {
  Example e;
  e.label = label;
  e.id = id;
  e.features.resize(spec.dim);
  const bool in_tail = rng.uniform() < spec.tail_fraction;
  const double scale = mean_scale(spec.separation);
  for (int i = 0; i < spec.dim; ++i) {
    double mean = (i == label) ? scale : 0.0;
    if (in_tail) mean += kTailDisplacement * kWithinClassStd * tail_dir[i];
    e.features[i] = rng.gaussian(mean, kWithinClassStd);
  }
  return e;
}

std::uint64_t max_id(const Dataset& dataset) {
  std::uint64_t top = 0;
  for (const Example& e : dataset.fixed) top = std::max(top, e.id);
  for (const Example& e : dataset.audit) top = std::max(top, e.id);
  return top;
}

std::vector<double> global_mean(const Dataset& dataset) {
  std::vector<double> mean(dataset.dim, 0.0);
  std::size_t count = 0;
  auto add = [&](const Example& e) {
    for (int i = 0; i < dataset.dim; ++i) mean[i] += e.features[i];
    ++count;
  };
  for (const Example& e : dataset.fixed) add(e);
  for (const Example& e : dataset.audit) add(e);
  for (double& x : mean) x /= static_cast<double>(count);
  return mean;
}

}  // namespace

Dataset gen_synthetic(const SyntheticSpec& spec) {
  validate_spec(spec);
  const int total = spec.num_classes * spec.per_class;

  std::vector<std::vector<double>> tails(spec.num_classes);
  for (int k = 0; k < spec.num_classes; ++k) tails[k] = tail_direction(spec, k);

  std::vector<Example> pool;
  pool.reserve(total);
  for (int k = 0; k < spec.num_classes; ++k) {
    for (int i = 0; i < spec.per_class; ++i) {
      const std::uint64_t id =
          static_cast<std::uint64_t>(k) * spec.per_class + i;
      Rng rng(derive_seed(spec.seed, "sample", k, i));
      pool.push_back(draw_example(spec, k, id, rng, tails[k]));
    }
  }

  Rng selector(derive_seed(spec.seed, "audit-selection"));
  std::vector<int> chosen =
      selector.sample_without_replacement(total, spec.num_audit);
  std::sort(chosen.begin(), chosen.end());
  std::vector<std::uint8_t> is_audit(total, 0);
  for (int idx : chosen) is_audit[idx] = 1;

  Dataset dataset;
  dataset.num_classes = spec.num_classes;
  dataset.dim = spec.dim;
  for (int i = 0; i < total; ++i) {
    (is_audit[i] ? dataset.audit : dataset.fixed).push_back(std::move(pool[i]));
  }
  validate_dataset(dataset);
  return dataset;
}

std::vector<Example> gen_test_set(const SyntheticSpec& spec, int count) {
  validate_spec(spec);
  if (count < 1) throw std::invalid_argument("gen_test_set: count must be >= 1");
  std::vector<std::vector<double>> tails(spec.num_classes);
  for (int k = 0; k < spec.num_classes; ++k) tails[k] = tail_direction(spec, k);

  std::vector<Example> test;
  test.reserve(count);
  for (int i = 0; i < count; ++i) {
    const int label = i % spec.num_classes;
    Rng rng(derive_seed(spec.seed, "test-sample", i));
    // Ids offset far past any training id; test draws never join a dataset.
    test.push_back(draw_example(spec, label, (1ULL << 40) + i, rng, tails[label]));
  }
  return test;
}

std::string to_string(CanaryFamily family) {
  switch (family) {
    case CanaryFamily::kNone: return "none";
    case CanaryFamily::kMislabeled: return "mislabeled";
    case CanaryFamily::kMislabeledDuplicate: return "mislabeled-duplicate";
    case CanaryFamily::kOod: return "ood";
    case CanaryFamily::kUniform: return "uniform";
  }
  throw std::logic_error("to_string: unknown CanaryFamily");
}

CanaryFamily canary_family_from_string(const std::string& name) {
  if (name == "none") return CanaryFamily::kNone;
  if (name == "mislabeled") return CanaryFamily::kMislabeled;
  if (name == "mislabeled-duplicate") return CanaryFamily::kMislabeledDuplicate;
  if (name == "ood") return CanaryFamily::kOod;
  if (name == "uniform") return CanaryFamily::kUniform;
  throw std::invalid_argument("unknown canary family: " + name);
}

CanarySet make_none(const Dataset& dataset) {
  CanarySet set;
  set.family = CanaryFamily::kNone;
  set.examples = dataset.audit;
  set.eval_mask.assign(dataset.audit.size(), 1);
  return set;
}

CanarySet make_mislabeled(const Dataset& dataset, std::uint64_t seed) {
  if (dataset.num_classes < 2) {
    throw std::invalid_argument(
        "make_mislabeled: need at least 2 classes to mislabel");
  }
  CanarySet set;
  set.family = CanaryFamily::kMislabeled;
  set.examples = dataset.audit;
  for (std::size_t j = 0; j < set.examples.size(); ++j) {
    Rng rng(derive_seed(seed, "mislabel", j));
    Example& e = set.examples[j];
    const int offset =
        1 + static_cast<int>(rng.below(dataset.num_classes - 1));
    e.label = (e.label + offset) % dataset.num_classes;
  }
  set.eval_mask.assign(set.examples.size(), 1);
  return set;
}

CanarySet make_duplicated_mislabeled(const Dataset& dataset,
                                     std::uint64_t seed) {
  if (dataset.num_classes < 2) {
    throw std::invalid_argument(
        "make_duplicated_mislabeled: need at least 2 classes");
  }
  const int c = static_cast<int>(dataset.audit.size());
  if (c % 2 != 0) {
    throw std::invalid_argument(
        "make_duplicated_mislabeled: audit size must be even to form pairs");
  }
  CanarySet set;
  set.family = CanaryFamily::kMislabeledDuplicate;
  const std::uint64_t fresh_base = max_id(dataset) + 1;
  // The first C/2 audit samples survive; each is followed by a feature copy
  // under a fresh id carrying a wrong label.  Only the copies are scored.
  for (int i = 0; i < c / 2; ++i) {
    const Example& original = dataset.audit[i];
    set.examples.push_back(original);
    set.eval_mask.push_back(0);

    Rng rng(derive_seed(seed, "duplicate-mislabel", i));
    Example twin = original;
    twin.id = fresh_base + static_cast<std::uint64_t>(i);
    const int offset =
        1 + static_cast<int>(rng.below(dataset.num_classes - 1));
    twin.label = (original.label + offset) % dataset.num_classes;
    set.examples.push_back(twin);
    set.eval_mask.push_back(1);
  }
  return set;
}

CanarySet make_ood(const Dataset& dataset, double shift, std::uint64_t seed) {
  if (shift < 0.0) {
    throw std::invalid_argument("make_ood: shift must be >= 0");
  }
  const std::vector<double> center = global_mean(dataset);
  CanarySet set;
  set.family = CanaryFamily::kOod;
  set.examples = dataset.audit;
  for (std::size_t j = 0; j < set.examples.size(); ++j) {
    Rng rng(derive_seed(seed, "ood", j));
    const std::vector<double> direction = rng.unit_vector(dataset.dim);
    Example& e = set.examples[j];
    for (int i = 0; i < dataset.dim; ++i) {
      e.features[i] =
          rng.gaussian(center[i] + shift * direction[i], kWithinClassStd);
    }
    e.label = static_cast<int>(rng.below(dataset.num_classes));
  }
  set.eval_mask.assign(set.examples.size(), 1);
  return set;
}

CanarySet make_uniform(const Dataset& dataset, double lo, double hi,
                       std::uint64_t seed) {
  if (!(lo < hi)) {
    throw std::invalid_argument("make_uniform: need lo < hi");
  }
  CanarySet set;
  set.family = CanaryFamily::kUniform;
  set.examples = dataset.audit;
  for (std::size_t j = 0; j < set.examples.size(); ++j) {
    Rng rng(derive_seed(seed, "uniform", j));
    Example& e = set.examples[j];
    for (int i = 0; i < dataset.dim; ++i) e.features[i] = rng.uniform(lo, hi);
    e.label = static_cast<int>(rng.below(dataset.num_classes));
  }
  set.eval_mask.assign(set.examples.size(), 1);
  return set;
}

Dataset with_canaries(const Dataset& dataset, const CanarySet& canaries) {
  if (canaries.eval_mask.size() != canaries.examples.size()) {
    throw std::invalid_argument("with_canaries: eval_mask size mismatch");
  }
  Dataset out = dataset;
  out.audit = canaries.examples;
  validate_dataset(out);
  return out;
}

}  // namespace miaudit
