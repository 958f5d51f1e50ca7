#pragma once

// Experiment driver behind the command-line tool. Every command reads an
// ExperimentConfig, writes its artifacts under config.output_dir and
// returns normally or throws one of the error types below.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ddist/attacks.hpp"
#include "ddist/dataset.hpp"
#include "ddist/training.hpp"

namespace ddist {

/// Bad key, bad value, missing required setting. Maps to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentConfig {
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;
  std::size_t train_count = 5000;  // stratified subset sizes; 0 keeps every sample
  std::size_t test_count = 1000;

  std::string architecture = "mnist-small";
  TrainConfig train;  // train.temperature is the distillation temperature

  /// Overrides applied to both networks of every distillation run.
  std::optional<std::size_t> distill_epochs;
  std::optional<double> distill_learning_rate;
  std::optional<std::size_t> distill_decay_delay;

  std::vector<double> temperatures = {1, 2, 5, 10, 20, 30, 50, 100};

  std::size_t attack_samples = 10;
  std::size_t gradient_samples = 200;
  std::size_t max_features = 0;  // 0 selects default_feature_budget
  float feature_value = 1.0f;
  SaliencyVariant saliency = SaliencyVariant::kPixelPair;

  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 1;
  std::size_t jobs = 1;  // sweep rows trained concurrently

  /// Sets one key from its text form. Throws ConfigError naming the key.
  void set(std::string_view key, std::string_view value);
  /// Throws ConfigError when a setting is missing or out of range.
  void validate() const;
  /// Dataset paths only; `flag_prefix` is prepended to the key in messages.
  void require_data(std::string_view flag_prefix = "--") const;

  /// TrainConfig for the distillation runs at `temperature`.
  TrainConfig distill_config(double temperature) const;
  /// Resolves max_features 0 to default_feature_budget(input_size).
  AttackConfig attack_config(std::size_t input_size) const;
};

/// Every recognized key in canonical order.
const std::vector<std::string>& config_keys();

/// Config file: one `key = value` per line, `#` starts a comment, blank
/// lines ignored, lists comma-separated. Unknown or repeated keys throw.
void apply_config_text(ExperimentConfig& config, std::string_view text,
                       std::string_view source = "config");
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical text form; parsing it back yields an identical config.
std::string to_config_text(const ExperimentConfig& config);
/// FNV-1a of the canonical text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

struct ExperimentData {
  LabeledDataset train;
  LabeledDataset test;
};

/// Loads both splits and draws the stratified subsets with seeds derived
/// from config.seed.
ExperimentData load_experiment_data(const ExperimentConfig& config);

/// model.bin, train_metrics.csv, config.txt, manifest.json
void cmd_train(const ExperimentConfig& config);

/// teacher.bin, student.bin, {teacher,student}_metrics.csv,
/// comparison.csv, config.txt, manifest.json
void cmd_distill(const ExperimentConfig& config);

/// campaign.csv, summary.json against the model at `model_path`.
void cmd_attack(const ExperimentConfig& config, const std::filesystem::path& model_path);

/// evaluation.json and histogram.csv for the model at `model_path`.
void cmd_evaluate(const ExperimentConfig& config, const std::filesystem::path& model_path);

struct SweepRow {
  std::string kind;  // "baseline" or "distilled"
  double temperature = 1.0;
  std::uint64_t seed = 0;
  std::optional<std::string> error;
  double attack_success_rate = 0.0;
  double accuracy = 0.0;
  double accuracy_variation = 0.0;
  std::optional<double> robustness;
  std::size_t coverage = 0;
  double median_gradient_amplitude = 0.0;
  std::size_t median_gradient_bin = 0;
  double mean_confidence = 0.0;
  double mean_max_probability = 0.0;
  std::vector<std::size_t> histogram;
};

struct SweepReport {
  std::vector<SweepRow> rows;  // baseline first, then config.temperatures in order
};

/// Seed of the sweep row trained at `temperature`.
std::uint64_t sweep_row_seed(std::uint64_t master_seed, double temperature);

/// One baseline row at T = 1 plus one distilled row per temperature.
/// A row that throws records its message and the sweep continues.
/// Writes sweep.csv, sweep.json, config.txt and manifest.json.
SweepReport cmd_sweep(const ExperimentConfig& config);

nlohmann::json to_json(const SweepRow& row);

}  // namespace ddist
