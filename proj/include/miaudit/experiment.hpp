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
#ifndef MIAUDIT_EXPERIMENT_HPP_
#define MIAUDIT_EXPERIMENT_HPP_

// Experiment orchestration: JSON configs, artifact formats (binary score
// tensors, JSON reports, CSV ROC dumps), the fleet cache, and the comparison
// table.  Artifact writes are byte-identical across reruns and thread counts.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "miaudit/attacks.hpp"
#include "miaudit/data.hpp"
#include "miaudit/defenses.hpp"
#include "miaudit/eval.hpp"

namespace miaudit {

inline constexpr const char* kEngineVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;
inline constexpr std::uint32_t kScoreFormatVersion = 1;

struct CanaryConfig {
  CanaryFamily family = CanaryFamily::kNone;
  double ood_shift = 6.0;
  double uniform_lo = -1.0;
  double uniform_hi = 1.0;
};

struct ExperimentConfig {
  SyntheticSpec dataset;
  CanaryConfig canary;
  DefenseConfig defense;
  AttackConfig attack;
  int num_models = 8;
  std::vector<double> fpr_targets = {0.001, 0.01, 0.1};
  std::uint64_t seed = 0;
  MembershipMode membership_mode = MembershipMode::kFixNonAudit;
  int test_set_size = 1000;
  bool per_sample_report = false;
  std::string output_dir = "out";
};

// Strict parsing: unknown keys or unknown registry ids throw
// std::invalid_argument naming the offending field.
ExperimentConfig parse_experiment_config(const nlohmann::json& blob);
nlohmann::json config_to_json(const ExperimentConfig& config);

// Stable 64-bit hash of the canonicalized config JSON.
std::uint64_t config_hash(const ExperimentConfig& config);

// Binary score tensor format: magic "MIAT", u32 version, u32 S, u32 C,
// u32 A, then S*C*A little-endian doubles, row-major; variant names travel
// in the JSON sidecar.
void write_score_tensor(const std::string& path, const ScoreTensor& tensor);
ScoreTensor read_score_tensor(const std::string& path,
                              std::vector<std::string> variant_names = {});

struct ExperimentPaths {
  std::string run_json;
  std::string scores_bin;
  std::string report_json;
  std::string roc_csv;
};

ExperimentPaths experiment_paths(const std::string& output_dir);

// Runs one configured experiment end-to-end and writes the four artifacts:
// run.json (resolved config echo + sidecar), scores.bin, report.json,
// roc.csv.  `output_override` (if non-empty) replaces config.output_dir;
// `cache_dir` (or the MIAUDIT_CACHE environment variable) enables the model
// fleet cache, keyed on (dataset, canaries, defense, S, seed).
void run_experiment(const ExperimentConfig& config,
                    const std::string& output_override, int threads,
                    const std::string& cache_dir);

// Loads a config file and runs it; returns a process exit code and prints
// errors to stderr instead of throwing.
int run_experiment_cli(const std::string& config_path,
                       const std::string& output_override, int threads,
                       const std::string& cache_dir);

struct CompareTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;  // rendered cells
  nlohmann::json as_json;
  std::string as_csv;
};

// One row per (defense, protocol) across report files, sorted descending by
// each row's TPR at its smallest resolvable FPR target.  Mixed FPR grids or
// mismatched schema versions are rejected.
CompareTable compare_reports(const std::vector<std::string>& report_paths);

// Recomputes attack records from a run directory's persisted tensor and
// membership, and renders the ROC as CSV (threshold,tpr,fpr).
std::string roc_dump(const std::string& run_dir);

}  // namespace miaudit

#endif  // MIAUDIT_EXPERIMENT_HPP_
