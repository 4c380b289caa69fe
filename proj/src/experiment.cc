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
#include "miaudit/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "miaudit/rng.hpp"

namespace miaudit {
namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Strict config parsing

void reject_unknown_keys(const json& obj, const std::string& where,
                         std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) {
    throw std::invalid_argument(where + ": expected a JSON object");
  }
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* name) {
          return key == name;
        }) == allowed.end()) {
      throw std::invalid_argument(where + "." + key + ": unknown field");
    }
  }
}

template <typename T>
T get_number(const json& obj, const std::string& where, const char* key,
             T fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) {
    throw std::invalid_argument(where + "." + key + ": expected a number");
  }
  return v.get<T>();
}

bool get_bool(const json& obj, const std::string& where, const char* key,
              bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) {
    throw std::invalid_argument(where + "." + key + ": expected a boolean");
  }
  return v.get<bool>();
}

std::string get_string(const json& obj, const std::string& where,
                       const char* key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) {
    throw std::invalid_argument(where + "." + key + ": expected a string");
  }
  return v.get<std::string>();
}

AugmentationPolicy parse_policy(const json& obj, const std::string& where,
                                const AugmentationPolicy& fallback) {
  AugmentationPolicy policy = fallback;
  reject_unknown_keys(obj, where, {"noise_std", "flip_prob"});
  policy.noise_std = get_number(obj, where, "noise_std", policy.noise_std);
  policy.flip_prob = get_number(obj, where, "flip_prob", policy.flip_prob);
  return policy;
}

json policy_to_json(const AugmentationPolicy& policy) {
  return json{{"noise_std", policy.noise_std}, {"flip_prob", policy.flip_prob}};
}

// Reduced view of the config covering exactly what shapes a trained fleet.
json fleet_cache_view(const ExperimentConfig& config) {
  json full = config_to_json(config);
  json view;
  view["engine_version"] = kEngineVersion;
  view["dataset"] = full.at("dataset");
  view["canary"] = full.at("canary");
  view["defense"] = full.at("defense");
  view["num_models"] = config.num_models;
  view["membership_mode"] = to_string(config.membership_mode);
  view["seed"] = config.seed;
  return view;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

json report_to_json(const AuditReport& report) {
  json blob;
  blob["protocol"] = report.protocol;
  blob["sample_mode"] = report.sample_mode;
  blob["canary_family"] = report.canary_family;
  blob["defense_id"] = report.defense_id;
  blob["attack_id"] = report.attack_id;
  blob["fpr_targets"] = report.fpr_targets;
  blob["tpr"] = report.tpr;
  blob["thresholds"] = json::array();
  for (double t : report.thresholds) {
    // +/-inf have no JSON literal; thresholds travel as strings.
    blob["thresholds"].push_back(format_double(t));
  }
  blob["under_resolved"] = json::array();
  for (std::uint8_t flag : report.under_resolved) {
    blob["under_resolved"].push_back(flag != 0);
  }
  blob["num_models"] = report.num_models;
  blob["num_audit"] = report.num_audit;
  blob["num_records"] = report.num_records;
  blob["num_positives"] = report.num_positives;
  blob["num_negatives"] = report.num_negatives;
  blob["seed"] = report.seed;
  if (std::isnan(report.test_accuracy)) {
    blob["test_accuracy"] = nullptr;
  } else {
    blob["test_accuracy"] = report.test_accuracy;
  }
  blob["mechanism_params"] = report.mechanism_params;
  if (!report.sample_indices.empty()) {
    blob["sample_indices"] = report.sample_indices;
    blob["per_sample_tpr"] = report.per_sample_tpr;
    blob["max_tpr"] = report.max_tpr;
    blob["argmax_sample"] = report.argmax_sample;
  }
  return blob;
}

std::string format_roc_csv(const RocCurve& curve) {
  std::string csv = "threshold,tpr,fpr\n";
  for (const RocPoint& point : curve.points) {
    csv += format_double(point.threshold);
    csv += ',';
    csv += format_double(point.tpr);
    csv += ',';
    csv += format_double(point.fpr);
    csv += '\n';
  }
  return csv;
}

CanarySet build_canaries(const Dataset& dataset, const CanaryConfig& canary,
                         std::uint64_t seed) {
  const std::uint64_t canary_seed = derive_seed(seed, "canary");
  switch (canary.family) {
    case CanaryFamily::kNone:
      return make_none(dataset);
    case CanaryFamily::kMislabeled:
      return make_mislabeled(dataset, canary_seed);
    case CanaryFamily::kMislabeledDuplicate:
      return make_duplicated_mislabeled(dataset, canary_seed);
    case CanaryFamily::kOod:
      return make_ood(dataset, canary.ood_shift, canary_seed);
    case CanaryFamily::kUniform:
      return make_uniform(dataset, canary.uniform_lo, canary.uniform_hi,
                          canary_seed);
  }
  throw std::logic_error("unreachable canary family");
}

// Rebuilds the winning variant's records from a persisted tensor; shared by
// run_experiment (for its own artifacts) and roc_dump.
std::vector<AttackScoreRecord> records_for_variant(
    const std::string& variant, const ScoreTensor& tensor,
    const MembershipMatrix& membership,
    const std::vector<std::uint8_t>& eval_mask) {
  const int num_models = membership.num_models();
  std::vector<AttackScoreRecord> all;
  for (int v = 0; v < num_models; ++v) {
    std::vector<AttackScoreRecord> block;
    if (variant.rfind("lira[", 0) == 0) {
      const VariantMode mode = variant.find("multivariate") != std::string::npos
                                   ? VariantMode::kMultivariate
                                   : VariantMode::kSingle;
      block = lira_attack(tensor, membership, v, mode, nullptr);
    } else if (variant.rfind("global[", 0) == 0) {
      block = global_threshold_scores(tensor, membership, v);
    } else if (variant == "label-only") {
      const int c = tensor.num_audit;
      const int a = tensor.num_variants;
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
          shadow_membership.push_back(membership.is_member(s, j) ? 1 : 0);
        }
        LabelOnlyFeature victim;
        for (int q = 0; q < a; ++q) {
          victim.bits.push_back(tensor.at(v, j, q) != 0.0 ? 1 : 0);
        }
        const std::optional<double> score =
            label_only_attack(shadow_features, shadow_membership, victim);
        if (!score.has_value()) continue;
        AttackScoreRecord record;
        record.victim_index = v;
        record.audit_index = j;
        record.attack_score = *score;
        record.is_member = membership.is_member(v, j);
        block.push_back(record);
      }
    } else if (variant == "contrastive-wb" || variant == "contrastive-bb") {
      block = lira_attack(tensor, membership, v, VariantMode::kSingle, nullptr);
    } else {
      throw std::invalid_argument("unknown attack variant '" + variant + "'");
    }
    for (const AttackScoreRecord& record : block) {
      if (record.audit_index >= 0 &&
          record.audit_index < static_cast<int>(eval_mask.size()) &&
          eval_mask[record.audit_index] != 0) {
        all.push_back(record);
      }
    }
  }
  return all;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return json::parse(in);
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& blob) {
  ExperimentConfig config;
  reject_unknown_keys(blob, "config",
                      {"dataset", "canary", "defense", "attack", "num_models",
                       "fpr_targets", "seed", "membership_mode",
                       "test_set_size", "per_sample_report", "output_dir"});

  if (blob.contains("dataset")) {
    const json& d = blob.at("dataset");
    const std::string where = "dataset";
    reject_unknown_keys(d, where,
                        {"num_classes", "dim", "per_class", "separation",
                         "tail_fraction", "num_audit", "seed"});
    config.dataset.num_classes =
        get_number(d, where, "num_classes", config.dataset.num_classes);
    config.dataset.dim = get_number(d, where, "dim", config.dataset.dim);
    config.dataset.per_class =
        get_number(d, where, "per_class", config.dataset.per_class);
    config.dataset.separation =
        get_number(d, where, "separation", config.dataset.separation);
    config.dataset.tail_fraction =
        get_number(d, where, "tail_fraction", config.dataset.tail_fraction);
    config.dataset.num_audit =
        get_number(d, where, "num_audit", config.dataset.num_audit);
    config.dataset.seed = get_number<std::uint64_t>(d, where, "seed",
                                                    config.dataset.seed);
  }

  if (blob.contains("canary")) {
    const json& c = blob.at("canary");
    const std::string where = "canary";
    reject_unknown_keys(c, where,
                        {"family", "ood_shift", "uniform_lo", "uniform_hi"});
    const std::string family =
        get_string(c, where, "family", to_string(config.canary.family));
    try {
      config.canary.family = canary_family_from_string(family);
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("canary.family: unknown family '" + family +
                                  "'");
    }
    config.canary.ood_shift =
        get_number(c, where, "ood_shift", config.canary.ood_shift);
    config.canary.uniform_lo =
        get_number(c, where, "uniform_lo", config.canary.uniform_lo);
    config.canary.uniform_hi =
        get_number(c, where, "uniform_hi", config.canary.uniform_hi);
  }

  if (blob.contains("defense")) {
    const json& d = blob.at("defense");
    const std::string where = "defense";
    reject_unknown_keys(
        d, where,
        {"id", "kind", "train", "clip_norm", "noise_multiplier",
         "loss_threshold", "entropy_smoothing", "mask_outputs", "num_teachers",
         "queries_per_sample", "distill_epochs", "embedding_dim", "temperature",
         "pretrain_epochs", "head_epochs"});
    config.defense.id = get_string(d, where, "id", config.defense.id);
    const auto& ids = defense_ids();
    if (std::find(ids.begin(), ids.end(), config.defense.id) == ids.end()) {
      throw std::invalid_argument("defense.id: unknown defense '" +
                                  config.defense.id + "'");
    }
    const std::string kind =
        get_string(d, where, "kind", to_string(config.defense.kind));
    if (kind != "linear-softmax" && kind != "mlp-1hidden") {
      throw std::invalid_argument(
          "defense.kind: trainable kinds are linear-softmax and mlp-1hidden, "
          "got '" + kind + "'");
    }
    config.defense.kind = model_kind_from_string(kind);
    if (d.contains("train")) {
      const json& t = d.at("train");
      const std::string twhere = "defense.train";
      reject_unknown_keys(t, twhere,
                          {"epochs", "batch_size", "learning_rate", "momentum",
                           "weight_decay", "hidden_width", "augment",
                           "augmentation"});
      TrainConfig& train = config.defense.train;
      train.epochs = get_number(t, twhere, "epochs", train.epochs);
      train.batch_size = get_number(t, twhere, "batch_size", train.batch_size);
      train.learning_rate =
          get_number(t, twhere, "learning_rate", train.learning_rate);
      train.momentum = get_number(t, twhere, "momentum", train.momentum);
      train.weight_decay =
          get_number(t, twhere, "weight_decay", train.weight_decay);
      train.hidden_width =
          get_number(t, twhere, "hidden_width", train.hidden_width);
      train.augment = get_bool(t, twhere, "augment", train.augment);
      if (t.contains("augmentation")) {
        train.augmentation = parse_policy(t.at("augmentation"),
                                          "defense.train.augmentation",
                                          train.augmentation);
      }
    }
    DefenseConfig& defense = config.defense;
    defense.clip_norm = get_number(d, where, "clip_norm", defense.clip_norm);
    defense.noise_multiplier =
        get_number(d, where, "noise_multiplier", defense.noise_multiplier);
    defense.loss_threshold =
        get_number(d, where, "loss_threshold", defense.loss_threshold);
    defense.entropy_smoothing =
        get_number(d, where, "entropy_smoothing", defense.entropy_smoothing);
    defense.mask_outputs =
        get_bool(d, where, "mask_outputs", defense.mask_outputs);
    defense.num_teachers =
        get_number(d, where, "num_teachers", defense.num_teachers);
    defense.queries_per_sample =
        get_number(d, where, "queries_per_sample", defense.queries_per_sample);
    defense.distill_epochs =
        get_number(d, where, "distill_epochs", defense.distill_epochs);
    defense.embedding_dim =
        get_number(d, where, "embedding_dim", defense.embedding_dim);
    defense.temperature =
        get_number(d, where, "temperature", defense.temperature);
    defense.pretrain_epochs =
        get_number(d, where, "pretrain_epochs", defense.pretrain_epochs);
    defense.head_epochs =
        get_number(d, where, "head_epochs", defense.head_epochs);
  }

  if (blob.contains("attack")) {
    const json& a = blob.at("attack");
    const std::string where = "attack";
    reject_unknown_keys(
        a, where, {"id", "augmentations", "repeats", "policy", "global_score"});
    config.attack.id = get_string(a, where, "id", config.attack.id);
    const auto& ids = attack_ids();
    if (std::find(ids.begin(), ids.end(), config.attack.id) == ids.end()) {
      throw std::invalid_argument("attack.id: unknown attack '" +
                                  config.attack.id + "'");
    }
    config.attack.augmentations =
        get_number(a, where, "augmentations", config.attack.augmentations);
    config.attack.repeats =
        get_number(a, where, "repeats", config.attack.repeats);
    if (a.contains("policy")) {
      config.attack.policy =
          parse_policy(a.at("policy"), "attack.policy", config.attack.policy);
    }
    const std::string score =
        get_string(a, where, "global_score", to_string(config.attack.global_score));
    try {
      config.attack.global_score = score_kind_from_string(score);
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("attack.global_score: unknown score '" +
                                  score + "'");
    }
  }

  config.num_models = get_number(blob, "config", "num_models", config.num_models);
  if (blob.contains("fpr_targets")) {
    const json& targets = blob.at("fpr_targets");
    if (!targets.is_array() || targets.empty()) {
      throw std::invalid_argument("fpr_targets: expected a non-empty array");
    }
    config.fpr_targets.clear();
    for (const json& t : targets) {
      if (!t.is_number()) {
        throw std::invalid_argument("fpr_targets: expected numbers");
      }
      config.fpr_targets.push_back(t.get<double>());
    }
  }
  config.seed = get_number<std::uint64_t>(blob, "config", "seed", config.seed);
  const std::string mode = get_string(blob, "config", "membership_mode",
                                      to_string(config.membership_mode));
  try {
    config.membership_mode = membership_mode_from_string(mode);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("membership_mode: unknown mode '" + mode + "'");
  }
  config.test_set_size =
      get_number(blob, "config", "test_set_size", config.test_set_size);
  config.per_sample_report =
      get_bool(blob, "config", "per_sample_report", config.per_sample_report);
  config.output_dir = get_string(blob, "config", "output_dir", config.output_dir);
  return config;
}

json config_to_json(const ExperimentConfig& config) {
  json blob;
  blob["dataset"] = {{"num_classes", config.dataset.num_classes},
                     {"dim", config.dataset.dim},
                     {"per_class", config.dataset.per_class},
                     {"separation", config.dataset.separation},
                     {"tail_fraction", config.dataset.tail_fraction},
                     {"num_audit", config.dataset.num_audit},
                     {"seed", config.dataset.seed}};
  blob["canary"] = {{"family", to_string(config.canary.family)},
                    {"ood_shift", config.canary.ood_shift},
                    {"uniform_lo", config.canary.uniform_lo},
                    {"uniform_hi", config.canary.uniform_hi}};
  const DefenseConfig& defense = config.defense;
  blob["defense"] = {{"id", defense.id},
                     {"kind", to_string(defense.kind)},
                     {"train",
                      {{"epochs", defense.train.epochs},
                       {"batch_size", defense.train.batch_size},
                       {"learning_rate", defense.train.learning_rate},
                       {"momentum", defense.train.momentum},
                       {"weight_decay", defense.train.weight_decay},
                       {"hidden_width", defense.train.hidden_width},
                       {"augment", defense.train.augment},
                       {"augmentation", policy_to_json(defense.train.augmentation)}}},
                     {"clip_norm", defense.clip_norm},
                     {"noise_multiplier", defense.noise_multiplier},
                     {"loss_threshold", defense.loss_threshold},
                     {"entropy_smoothing", defense.entropy_smoothing},
                     {"mask_outputs", defense.mask_outputs},
                     {"num_teachers", defense.num_teachers},
                     {"queries_per_sample", defense.queries_per_sample},
                     {"distill_epochs", defense.distill_epochs},
                     {"embedding_dim", defense.embedding_dim},
                     {"temperature", defense.temperature},
                     {"pretrain_epochs", defense.pretrain_epochs},
                     {"head_epochs", defense.head_epochs}};
  blob["attack"] = {{"id", config.attack.id},
                    {"augmentations", config.attack.augmentations},
                    {"repeats", config.attack.repeats},
                    {"policy", policy_to_json(config.attack.policy)},
                    {"global_score", to_string(config.attack.global_score)}};
  blob["num_models"] = config.num_models;
  blob["fpr_targets"] = config.fpr_targets;
  blob["seed"] = config.seed;
  blob["membership_mode"] = to_string(config.membership_mode);
  blob["test_set_size"] = config.test_set_size;
  blob["per_sample_report"] = config.per_sample_report;
  blob["output_dir"] = config.output_dir;
  return blob;
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  return hash_tag(config_to_json(config).dump());
}

void write_score_tensor(const std::string& path, const ScoreTensor& tensor) {
  std::string bytes;
  bytes.reserve(20 + tensor.values.size() * sizeof(double));
  bytes.append("MIAT", 4);
  const std::uint32_t header[4] = {
      kScoreFormatVersion, static_cast<std::uint32_t>(tensor.num_models),
      static_cast<std::uint32_t>(tensor.num_audit),
      static_cast<std::uint32_t>(tensor.num_variants)};
  bytes.append(reinterpret_cast<const char*>(header), sizeof(header));
  bytes.append(reinterpret_cast<const char*>(tensor.values.data()),
               tensor.values.size() * sizeof(double));
  write_file_atomic(path, bytes);
}

ScoreTensor read_score_tensor(const std::string& path,
                              std::vector<std::string> variant_names) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  char magic[4];
  std::uint32_t header[4];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || std::memcmp(magic, "MIAT", 4) != 0) {
    throw std::runtime_error(path + ": not a score tensor file");
  }
  if (header[0] != kScoreFormatVersion) {
    throw std::runtime_error(path + ": unsupported score format version " +
                             std::to_string(header[0]));
  }
  ScoreTensor tensor(static_cast<int>(header[1]), static_cast<int>(header[2]),
                     static_cast<int>(header[3]));
  in.read(reinterpret_cast<char*>(tensor.values.data()),
          static_cast<std::streamsize>(tensor.values.size() * sizeof(double)));
  if (!in) throw std::runtime_error(path + ": truncated score tensor");
  tensor.variant_names = std::move(variant_names);
  return tensor;
}

ExperimentPaths experiment_paths(const std::string& output_dir) {
  return {output_dir + "/run.json", output_dir + "/scores.bin",
          output_dir + "/report.json", output_dir + "/roc.csv"};
}

void run_experiment(const ExperimentConfig& config,
                    const std::string& output_override, int threads,
                    const std::string& cache_dir) {
  const std::string out_dir =
      output_override.empty() ? config.output_dir : output_override;
  if (out_dir.empty()) {
    throw std::invalid_argument("run: output directory must be non-empty");
  }
  std::filesystem::create_directories(out_dir);

  std::string cache = cache_dir;
  if (cache.empty()) {
    if (const char* env = std::getenv("MIAUDIT_CACHE"); env != nullptr) {
      cache = env;
    }
  }
  if (!cache.empty()) std::filesystem::create_directories(cache);

  const Dataset dataset = gen_synthetic(config.dataset);
  const CanarySet canaries =
      build_canaries(dataset, config.canary, config.seed);

  LeaveOneOutOptions options;
  options.membership_mode = config.membership_mode;
  options.threads = threads;
  options.fpr_targets = config.fpr_targets;
  if (config.test_set_size > 0) {
    options.test_set = gen_test_set(config.dataset, config.test_set_size);
  }
  options.cache_dir = cache;
  options.cache_key = hash_tag(fleet_cache_view(config).dump());

  const LeaveOneOutResult run =
      run_leave_one_out(dataset, canaries, config.defense, config.attack,
                        config.num_models, config.seed, options);

  ReportContext context;
  context.defense_id = config.defense.id;
  context.attack_id = run.attack_variant;
  context.family = canaries.family;
  context.fpr_targets = config.fpr_targets;
  context.num_models = config.num_models;
  context.num_audit = static_cast<int>(dataset.audit.size());
  context.seed = config.seed;
  context.test_accuracy = run.test_accuracy;
  context.mechanism_params = mechanism_params(config.defense);

  std::vector<AuditReport> reports;
  reports.push_back(population_report(run.records, context));
  if (canaries.family != CanaryFamily::kNone) {
    reports.push_back(sample_level_report(
        run.records, SampleLevelMode::kPooledCanaries, context));
  }
  if (config.per_sample_report) {
    reports.push_back(
        sample_level_report(run.records, SampleLevelMode::kPerSample, context));
  }

  const ExperimentPaths paths = experiment_paths(out_dir);
  const std::uint64_t hash = config_hash(config);

  write_score_tensor(paths.scores_bin, run.scores);

  // Everything needed to rebuild the records from scores.bin travels in
  // run.json: membership bits, eval mask, and the winning variant.
  json run_blob;
  run_blob["schema_version"] = kSchemaVersion;
  run_blob["engine_version"] = kEngineVersion;
  run_blob["config_hash"] = hex64(hash);
  run_blob["config"] = config_to_json(config);
  run_blob["attack_variant"] = run.attack_variant;
  run_blob["variant_names"] = run.scores.variant_names;
  json membership_blob;
  membership_blob["num_models"] = run.membership.num_models();
  membership_blob["num_audit"] = run.membership.num_audit();
  json bits = json::array();
  for (std::uint8_t b : run.membership.bits()) bits.push_back(b != 0 ? 1 : 0);
  membership_blob["bits"] = std::move(bits);
  run_blob["membership"] = std::move(membership_blob);
  json mask = json::array();
  {
    // The result covers the working audit width (original slots first).
    const int c = run.membership.num_audit();
    const Dataset audited = with_canaries(dataset, canaries);
    std::vector<std::uint8_t> eval_mask = canaries.eval_mask;
    eval_mask.resize(c, 0);
    for (int j = 0; j < c; ++j) mask.push_back(eval_mask[j] != 0);
    json ids = json::array();
    for (const Example& e : audited.audit) ids.push_back(e.id);
    run_blob["audit_ids"] = std::move(ids);
  }
  run_blob["eval_mask"] = std::move(mask);
  run_blob["num_eval_slots"] = run.num_eval_slots;
  if (std::isnan(run.test_accuracy)) {
    run_blob["test_accuracy"] = nullptr;
  } else {
    run_blob["test_accuracy"] = run.test_accuracy;
  }
  run_blob["warnings"] = run.warnings;
  json variant_quality = json::object();
  for (const auto& [name, records] : run.variant_records) {
    variant_quality[name] = static_cast<long long>(records.size());
  }
  run_blob["variant_record_counts"] = std::move(variant_quality);
  write_file_atomic(paths.run_json, run_blob.dump(2) + "\n");

  json report_blob;
  report_blob["schema_version"] = kSchemaVersion;
  report_blob["engine_version"] = kEngineVersion;
  report_blob["config_hash"] = hex64(hash);
  report_blob["reports"] = json::array();
  for (const AuditReport& report : reports) {
    report_blob["reports"].push_back(report_to_json(report));
  }
  report_blob["warnings"] = run.warnings;
  write_file_atomic(paths.report_json, report_blob.dump(2) + "\n");

  write_file_atomic(paths.roc_csv, format_roc_csv(roc_curve(run.records)));
}

int run_experiment_cli(const std::string& config_path,
                       const std::string& output_override, int threads,
                       const std::string& cache_dir) {
  try {
    const json blob = load_json_file(config_path);
    const ExperimentConfig config = parse_experiment_config(blob);
    run_experiment(config, output_override, threads, cache_dir);
    const std::string out_dir =
        output_override.empty() ? config.output_dir : output_override;
    const json report = load_json_file(experiment_paths(out_dir).report_json);
    std::cout << "wrote " << out_dir << "\n";
    for (const json& r : report.at("reports")) {
      std::cout << r.at("protocol").get<std::string>();
      const std::string mode = r.at("sample_mode").get<std::string>();
      if (!mode.empty()) std::cout << "/" << mode;
      std::cout << " " << r.at("attack_id").get<std::string>() << ":";
      const auto& targets = r.at("fpr_targets");
      const auto& tpr = r.at("tpr");
      for (std::size_t i = 0; i < targets.size(); ++i) {
        std::cout << " tpr@" << targets[i].get<double>() << "="
                  << tpr[i].get<double>();
      }
      std::cout << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

CompareTable compare_reports(const std::vector<std::string>& report_paths) {
  if (report_paths.empty()) {
    throw std::invalid_argument("compare: no report files given");
  }
  struct Row {
    std::string defense;
    std::string attack;
    std::string family;
    std::string protocol;
    double test_accuracy = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> tpr;
    std::vector<std::uint8_t> under_resolved;
    double sort_tpr = 0.0;
  };
  std::vector<Row> rows;
  std::vector<double> grid;
  bool grid_set = false;

  for (const std::string& path : report_paths) {
    const json blob = load_json_file(path);
    if (!blob.contains("schema_version") ||
        blob.at("schema_version").get<int>() != kSchemaVersion) {
      throw std::invalid_argument(path + ": unsupported report schema version");
    }
    for (const json& r : blob.at("reports")) {
      Row row;
      row.defense = r.at("defense_id").get<std::string>();
      row.attack = r.at("attack_id").get<std::string>();
      row.family = r.at("canary_family").get<std::string>();
      row.protocol = r.at("protocol").get<std::string>();
      const std::string mode = r.at("sample_mode").get<std::string>();
      if (!mode.empty()) row.protocol += "/" + mode;
      if (r.contains("test_accuracy") && !r.at("test_accuracy").is_null()) {
        row.test_accuracy = r.at("test_accuracy").get<double>();
      }
      std::vector<double> targets;
      for (const json& t : r.at("fpr_targets")) targets.push_back(t.get<double>());
      if (!grid_set) {
        grid = targets;
        grid_set = true;
      } else if (targets != grid) {
        std::ostringstream oss;
        oss << "compare: FPR grids differ; expected [";
        for (std::size_t i = 0; i < grid.size(); ++i) {
          oss << (i > 0 ? " " : "") << grid[i];
        }
        oss << "] but " << path << " has [";
        for (std::size_t i = 0; i < targets.size(); ++i) {
          oss << (i > 0 ? " " : "") << targets[i];
        }
        oss << "]";
        throw std::invalid_argument(oss.str());
      }
      for (const json& t : r.at("tpr")) row.tpr.push_back(t.get<double>());
      for (const json& u : r.at("under_resolved")) {
        row.under_resolved.push_back(u.get<bool>() ? 1 : 0);
      }
      rows.push_back(std::move(row));
    }
  }

  // Rank rows by TPR at the smallest target each row resolves.
  for (Row& row : rows) {
    int pick = -1;
    std::vector<std::size_t> order(grid.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return grid[a] < grid[b]; });
    for (std::size_t idx : order) {
      if (row.under_resolved[idx] == 0) {
        pick = static_cast<int>(idx);
        break;
      }
    }
    if (pick < 0) pick = static_cast<int>(order.back());
    row.sort_tpr = row.tpr[pick];
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.sort_tpr != b.sort_tpr) return a.sort_tpr > b.sort_tpr;
    return a.defense < b.defense;
  });

  CompareTable table;
  table.columns = {"defense", "attack", "family", "protocol", "test_accuracy"};
  for (double alpha : grid) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "tpr@%g", alpha);
    table.columns.push_back(buf);
  }
  for (const Row& row : rows) {
    std::vector<std::string> cells = {row.defense, row.attack, row.family,
                                      row.protocol};
    if (std::isnan(row.test_accuracy)) {
      cells.push_back("-");
    } else {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4f", row.test_accuracy);
      cells.push_back(buf);
    }
    for (std::size_t t = 0; t < grid.size(); ++t) {
      if (row.under_resolved[t] != 0) {
        cells.push_back("under-resolved");
      } else {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6g", row.tpr[t]);
        cells.push_back(buf);
      }
    }
    table.rows.push_back(std::move(cells));
  }

  table.as_json = json{{"columns", table.columns}, {"rows", table.rows}};
  std::ostringstream csv;
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    csv << (i > 0 ? "," : "") << table.columns[i];
  }
  csv << "\n";
  for (const auto& cells : table.rows) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      csv << (i > 0 ? "," : "") << cells[i];
    }
    csv << "\n";
  }
  table.as_csv = csv.str();
  return table;
}

std::string roc_dump(const std::string& run_dir) {
  const ExperimentPaths paths = experiment_paths(run_dir);
  const json run_blob = load_json_file(paths.run_json);
  if (run_blob.at("schema_version").get<int>() != kSchemaVersion) {
    throw std::invalid_argument(paths.run_json + ": unsupported schema version");
  }
  std::vector<std::string> variant_names;
  for (const json& name : run_blob.at("variant_names")) {
    variant_names.push_back(name.get<std::string>());
  }
  const ScoreTensor tensor =
      read_score_tensor(paths.scores_bin, std::move(variant_names));

  const json& membership_blob = run_blob.at("membership");
  const int s = membership_blob.at("num_models").get<int>();
  const int c = membership_blob.at("num_audit").get<int>();
  if (s != tensor.num_models || c != tensor.num_audit) {
    throw std::runtime_error(run_dir + ": membership/tensor shape mismatch");
  }
  MembershipMatrix membership(s, c);
  const json& bits = membership_blob.at("bits");
  if (static_cast<int>(bits.size()) != s * c) {
    throw std::runtime_error(run_dir + ": malformed membership bits");
  }
  for (int m = 0; m < s; ++m) {
    for (int j = 0; j < c; ++j) {
      membership.set(m, j, bits[static_cast<std::size_t>(m) * c + j].get<int>() != 0);
    }
  }
  std::vector<std::uint8_t> eval_mask;
  for (const json& flag : run_blob.at("eval_mask")) {
    eval_mask.push_back(flag.get<bool>() ? 1 : 0);
  }
  const std::string variant = run_blob.at("attack_variant").get<std::string>();
  const std::vector<AttackScoreRecord> records =
      records_for_variant(variant, tensor, membership, eval_mask);
  return format_roc_csv(roc_curve(records));
}

}  // namespace miaudit
