#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "extremity/trainer.hpp"

namespace extremity {

inline constexpr const char* kBuildId = "extremity-0.1.0";

// Shortest round-tripping decimal form.
std::string fmt_double(double x);
double parse_double(std::string_view s);

// Flat `key = value` configuration with '#' comments. Unknown keys are errors.
TrainConfig parse_config_file(const std::filesystem::path& path);
void apply_config_kv(TrainConfig& cfg, const std::string& key, const std::string& value);

// CSV surfaces. Training log: step,batch_accuracy,rolling_accuracy,mean_reward.
// Eval records: game,n_dims,target_index,signature,canonical_dim,canonical_pol,
// ms,mp,attention_dim,choice,correct,context_degrees with ';'-flattened lists.
void write_train_log_csv(const std::filesystem::path& path, const TrialResult& result);
void write_eval_records_csv(const std::filesystem::path& path, const std::vector<EvalRecord>& records);
std::vector<EvalRecord> read_eval_records_csv(const std::filesystem::path& path);

// Binary checkpoint: magic, JSON architecture header, then length-prefixed
// named sections of little-endian 64-bit floats. Round-trips bit-exactly.
void save_checkpoint(const std::filesystem::path& path, Agents& agents);
Agents load_checkpoint(const std::filesystem::path& path);

uint64_t fnv1a64(const void* data, size_t len);
std::string fnv1a64_hex_of_file(const std::filesystem::path& path);

struct OutputFileEntry {
  std::string path;  // relative to the manifest's directory
  uint64_t bytes = 0;
  std::string fnv1a64;
};

struct Manifest {
  std::string command;
  std::string build_id = kBuildId;
  std::string created;
  std::string finished;
  TrainConfig config;
  std::vector<uint64_t> trial_seeds;
  std::vector<OutputFileEntry> outputs;
};

std::string iso8601_now();
OutputFileEntry checksum_output(const std::filesystem::path& base_dir, const std::string& rel_path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

}  // namespace extremity
