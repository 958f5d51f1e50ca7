// Command-line driver: ddist <train|distill|attack|evaluate|sweep> [options]
//
// Settings are resolved as built-in defaults, then --config file, then
// --set key=value in the order given, then the dedicated flags.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ddist/experiment.hpp"
#include "ddist/model_io.hpp"

namespace {

struct Options {
  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::string> train_images, train_labels, test_images, test_labels;
  std::optional<std::string> architecture, temperatures, output_dir;
  std::optional<double> temperature;
  std::optional<std::size_t> epochs, jobs;
  std::optional<std::uint64_t> seed;
  std::string model_path;
};

void add_common(CLI::App& cmd, Options& o) {
  cmd.add_option("--config", o.config_file, "Config file (key = value lines)");
  cmd.add_option("--set", o.overrides, "Override one config key: key=value (repeatable)");
  cmd.add_option("--train-images", o.train_images, "Training images, IDX format");
  cmd.add_option("--train-labels", o.train_labels, "Training labels, IDX format");
  cmd.add_option("--test-images", o.test_images, "Test images, IDX format");
  cmd.add_option("--test-labels", o.test_labels, "Test labels, IDX format");
  cmd.add_option("--arch", o.architecture, "Architecture name (mnist-small, mlp-tiny)");
  cmd.add_option("--temperature", o.temperature, "Distillation temperature");
  cmd.add_option("--temperatures", o.temperatures, "Comma-separated sweep temperatures");
  cmd.add_option("--epochs", o.epochs, "Training epochs");
  cmd.add_option("--seed", o.seed, "Master seed");
  cmd.add_option("--out", o.output_dir, "Output directory");
  cmd.add_option("--jobs", o.jobs, "Sweep rows trained concurrently");
}

ddist::ExperimentConfig resolve(const Options& o) {
  ddist::ExperimentConfig c;
  if (!o.config_file.empty()) c = ddist::load_config(o.config_file);
  for (const auto& item : o.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ddist::ConfigError("--set expects key=value, got '" + item + "'");
    c.set(item.substr(0, eq), item.substr(eq + 1));
  }
  if (o.train_images) c.train_images = *o.train_images;
  if (o.train_labels) c.train_labels = *o.train_labels;
  if (o.test_images) c.test_images = *o.test_images;
  if (o.test_labels) c.test_labels = *o.test_labels;
  if (o.architecture) c.architecture = *o.architecture;
  if (o.temperature) c.train.temperature = *o.temperature;
  if (o.temperatures) c.set("temperatures", *o.temperatures);
  if (o.epochs) c.train.epochs = *o.epochs;
  if (o.seed) c.seed = *o.seed;
  if (o.output_dir) c.output_dir = *o.output_dir;
  if (o.jobs) c.jobs = *o.jobs;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Defensive distillation experiments"};
  app.require_subcommand(1);
  Options o;
  auto* train = app.add_subcommand("train", "Train a model on hard labels");
  auto* distill = app.add_subcommand("distill", "Train a teacher and a distilled student");
  auto* attack = app.add_subcommand("attack", "Run the saliency-map attack campaign");
  auto* evaluate = app.add_subcommand("evaluate", "Accuracy, confidence and gradient histogram");
  auto* sweep = app.add_subcommand("sweep", "Baseline plus one distillation per temperature");
  for (auto* cmd : {train, distill, attack, evaluate, sweep}) add_common(*cmd, o);
  for (auto* cmd : {attack, evaluate}) {
    cmd->add_option("--model", o.model_path, "Model file")->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const ddist::ExperimentConfig config = resolve(o);
    if (train->parsed()) {
      ddist::cmd_train(config);
    } else if (distill->parsed()) {
      ddist::cmd_distill(config);
    } else if (attack->parsed()) {
      ddist::cmd_attack(config, o.model_path);
    } else if (evaluate->parsed()) {
      ddist::cmd_evaluate(config, o.model_path);
    } else {
      const auto report = ddist::cmd_sweep(config);
      for (const auto& row : report.rows) {
        if (row.error) std::cerr << "row T=" << row.temperature << " failed: " << *row.error << '\n';
      }
    }
  } catch (const ddist::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
