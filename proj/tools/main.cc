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

// Command-line front end: run experiments from JSON configs, compare report
// files, re-render ROC curves from run artifacts, and simulate the
// bit-leaking pathological defense.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "miaudit/experiment.hpp"

namespace {

int cmd_compare(const std::vector<std::string>& reports,
                const std::string& format) {
  try {
    const miaudit::CompareTable table = miaudit::compare_reports(reports);
    if (format == "json") {
      std::cout << table.as_json.dump(2) << "\n";
    } else {
      std::cout << table.as_csv;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_roc_dump(const std::string& run_dir) {
  try {
    std::cout << miaudit::roc_dump(run_dir);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_nameshame(int size, int target, int trials, std::uint64_t seed,
                  int threads) {
  try {
    const miaudit::NameAndShameResult result =
        miaudit::name_and_shame_sim(size, target, trials, seed,
                                    {0.0, 0.001, 0.01, 0.1}, threads);
    const auto& pop = result.population;
    const auto& per = result.sample_level;
    std::cout << "population (all samples pooled):\n";
    for (std::size_t t = 0; t < pop.fpr_targets.size(); ++t) {
      std::cout << "  tpr@" << pop.fpr_targets[t] << " = " << pop.tpr[t]
                << (pop.under_resolved[t] ? " (under-resolved)" : "") << "\n";
    }
    std::cout << "per-sample maximum:\n";
    for (std::size_t t = 0; t < per.fpr_targets.size(); ++t) {
      std::cout << "  tpr@" << per.fpr_targets[t] << " = " << per.max_tpr[t]
                << " (sample " << per.argmax_sample[t] << ")\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"membership-inference privacy auditing engine"};
  app.require_subcommand(1);

  std::string config_path, out_dir, cache_dir;
  int threads = 1;
  CLI::App* run = app.add_subcommand("run", "run one experiment config");
  run->add_option("--config", config_path, "JSON experiment config")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory (overrides config)");
  run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  run->add_option("--cache-dir", cache_dir,
                  "model fleet cache directory (or set MIAUDIT_CACHE)");

  std::vector<std::string> report_paths;
  std::string format = "csv";
  CLI::App* compare = app.add_subcommand("compare", "tabulate report files");
  compare->add_option("reports", report_paths, "report.json files")
      ->required()
      ->check(CLI::ExistingFile);
  compare->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  std::string run_dir;
  CLI::App* roc = app.add_subcommand("roc-dump", "re-render a run's ROC as CSV");
  roc->add_option("run_dir", run_dir, "directory holding run.json + scores.bin")
      ->required();

  int ns_size = 100, ns_target = 0, ns_trials = 2000, ns_threads = 1;
  std::uint64_t ns_seed = 0;
  CLI::App* nameshame = app.add_subcommand(
      "nameshame", "simulate the single-sample bit-leaking defense");
  nameshame->add_option("--size", ns_size, "dataset size");
  nameshame->add_option("--target", ns_target, "leaked sample index");
  nameshame->add_option("--trials", ns_trials, "resampling trials");
  nameshame->add_option("--seed", ns_seed, "root seed");
  nameshame->add_option("--threads", ns_threads, "worker threads")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    return miaudit::run_experiment_cli(config_path, out_dir, threads, cache_dir);
  }
  if (compare->parsed()) {
    return cmd_compare(report_paths, format);
  }
  if (roc->parsed()) {
    return cmd_roc_dump(run_dir);
  }
  return cmd_nameshame(ns_size, ns_target, ns_trials, ns_seed, ns_threads);
}
