#include "ddist/experiment.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <sstream>

#include "ddist/data.hpp"
#include "ddist/metrics.hpp"
#include "ddist/model_io.hpp"
#include "ddist/random.hpp"

namespace ddist {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

ModelSpec architecture_spec(std::string_view name) {
  try {
    return architecture(name);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  const std::string s = trim(text);
  T value{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ConfigError("invalid value '" + s + "' for key '" + std::string(key) + "'");
  }
  return value;
}

std::optional<double> parse_optional_double(std::string_view key, std::string_view text) {
  if (trim(text) == "none") return std::nullopt;
  return parse_number<double>(key, text);
}

std::optional<std::size_t> parse_optional_size(std::string_view key, std::string_view text) {
  if (trim(text) == "none") return std::nullopt;
  return parse_number<std::size_t>(key, text);
}

template <typename T>
std::string optional_text(const std::optional<T>& v) {
  if (!v) return "none";
  if constexpr (std::is_floating_point_v<T>) {
    return format_number(*v);
  } else {
    return std::to_string(*v);
  }
}

struct KeyHandler {
  std::function<void(ExperimentConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename T>
KeyHandler number_key(T ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, std::string_view k, std::string_view v) {
            c.*member = parse_number<T>(k, v);
          },
          [member](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_number(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          }};
}

template <typename T>
KeyHandler train_key(T TrainConfig::*member) {
  return {[member](ExperimentConfig& c, std::string_view k, std::string_view v) {
            c.train.*member = parse_number<T>(k, v);
          },
          [member](const ExperimentConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_number(c.train.*member);
            } else {
              return std::to_string(c.train.*member);
            }
          }};
}

KeyHandler path_key(fs::path ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, std::string_view, std::string_view v) { c.*member = trim(v); },
          [member](const ExperimentConfig& c) { return (c.*member).string(); }};
}

// Ordered as written by to_config_text.
const std::vector<std::pair<std::string, KeyHandler>>& handlers() {
  static const std::vector<std::pair<std::string, KeyHandler>> table = [] {
    std::vector<std::pair<std::string, KeyHandler>> t;
    t.emplace_back("train_images", path_key(&ExperimentConfig::train_images));
    t.emplace_back("train_labels", path_key(&ExperimentConfig::train_labels));
    t.emplace_back("test_images", path_key(&ExperimentConfig::test_images));
    t.emplace_back("test_labels", path_key(&ExperimentConfig::test_labels));
    t.emplace_back("train_count", number_key(&ExperimentConfig::train_count));
    t.emplace_back("test_count", number_key(&ExperimentConfig::test_count));
    t.emplace_back("architecture",
                   KeyHandler{[](ExperimentConfig& c, std::string_view, std::string_view v) {
                                c.architecture = trim(v);
                              },
                              [](const ExperimentConfig& c) { return c.architecture; }});
    t.emplace_back("learning_rate", train_key(&TrainConfig::learning_rate));
    t.emplace_back("lr_decay",
                   KeyHandler{[](ExperimentConfig& c, std::string_view k, std::string_view v) {
                                c.train.lr_decay = parse_optional_double(k, v);
                              },
                              [](const ExperimentConfig& c) { return optional_text(c.train.lr_decay); }});
    t.emplace_back("decay_delay", train_key(&TrainConfig::decay_delay));
    t.emplace_back("momentum", train_key(&TrainConfig::momentum));
    t.emplace_back("momentum_decay",
                   KeyHandler{[](ExperimentConfig& c, std::string_view k, std::string_view v) {
                                c.train.momentum_decay = parse_optional_double(k, v);
                              },
                              [](const ExperimentConfig& c) {
                                return optional_text(c.train.momentum_decay);
                              }});
    t.emplace_back("batch_size", train_key(&TrainConfig::batch_size));
    t.emplace_back("epochs", train_key(&TrainConfig::epochs));
    t.emplace_back("dropout", train_key(&TrainConfig::dropout_rate));
    t.emplace_back("temperature", train_key(&TrainConfig::temperature));
    t.emplace_back("distill_epochs",
                   KeyHandler{[](ExperimentConfig& c, std::string_view k, std::string_view v) {
                                c.distill_epochs = parse_optional_size(k, v);
                              },
                              [](const ExperimentConfig& c) { return optional_text(c.distill_epochs); }});
    t.emplace_back("distill_learning_rate",
                   KeyHandler{[](ExperimentConfig& c, std::string_view k, std::string_view v) {
                                c.distill_learning_rate = parse_optional_double(k, v);
                              },
                              [](const ExperimentConfig& c) {
                                return optional_text(c.distill_learning_rate);
                              }});
    t.emplace_back("distill_decay_delay",
                   KeyHandler{[](ExperimentConfig& c, std::string_view k, std::string_view v) {
                                c.distill_decay_delay = parse_optional_size(k, v);
                              },
                              [](const ExperimentConfig& c) {
                                return optional_text(c.distill_decay_delay);
                              }});
    t.emplace_back("temperatures",
                   KeyHandler{[](ExperimentConfig& c, std::string_view k, std::string_view v) {
                                std::vector<double> list;
                                std::string item;
                                std::istringstream in{std::string(v)};
                                while (std::getline(in, item, ',')) {
                                  list.push_back(parse_number<double>(k, item));
                                }
                                c.temperatures = std::move(list);
                              },
                              [](const ExperimentConfig& c) {
                                std::string out;
                                for (std::size_t i = 0; i < c.temperatures.size(); ++i) {
                                  if (i) out += ',';
                                  out += format_number(c.temperatures[i]);
                                }
                                return out;
                              }});
    t.emplace_back("attack_samples", number_key(&ExperimentConfig::attack_samples));
    t.emplace_back("gradient_samples", number_key(&ExperimentConfig::gradient_samples));
    t.emplace_back("max_features", number_key(&ExperimentConfig::max_features));
    t.emplace_back("feature_value", number_key(&ExperimentConfig::feature_value));
    t.emplace_back("saliency",
                   KeyHandler{[](ExperimentConfig& c, std::string_view k, std::string_view v) {
                                try {
                                  c.saliency = parse_saliency_variant(trim(v));
                                } catch (const std::invalid_argument&) {
                                  throw ConfigError("invalid value '" + trim(v) + "' for key '" +
                                                    std::string(k) + "'");
                                }
                              },
                              [](const ExperimentConfig& c) {
                                return std::string(saliency_variant_name(c.saliency));
                              }});
    t.emplace_back("output_dir", path_key(&ExperimentConfig::output_dir));
    t.emplace_back("seed", number_key(&ExperimentConfig::seed));
    t.emplace_back("jobs", number_key(&ExperimentConfig::jobs));
    return t;
  }();
  return table;
}

const KeyHandler* find_handler(std::string_view key) {
  for (const auto& [name, handler] : handlers()) {
    if (name == key) return &handler;
  }
  return nullptr;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void write_json(const fs::path& path, const json& value) { write_text(path, value.dump(2) + "\n"); }

fs::path prepare_output(const ExperimentConfig& config) {
  fs::create_directories(config.output_dir);
  write_text(config.output_dir / "config.txt", to_config_text(config));
  return config.output_dir;
}

void write_manifest(const ExperimentConfig& config, std::string_view command,
                    std::chrono::steady_clock::time_point start, const std::vector<std::string>& artifacts,
                    std::uint64_t checksum_train, std::uint64_t checksum_test) {
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_json(config.output_dir / "manifest.json",
             json{{"command", command},
                  {"config_hash", config_hash(config)},
                  {"config_file", "config.txt"},
                  {"seed", config.seed},
                  {"train_data_checksum", checksum_train},
                  {"test_data_checksum", checksum_test},
                  {"artifacts", artifacts},
                  {"wall_time_seconds", seconds}});
}

std::string metrics_csv(const std::vector<EpochMetrics>& epochs) {
  std::ostringstream out;
  out << "epoch,train_loss,test_accuracy\n";
  for (const auto& m : epochs) {
    out << m.epoch << ',' << format_number(m.train_loss) << ','
        << (m.test_accuracy ? format_number(*m.test_accuracy) : std::string()) << '\n';
  }
  return out.str();
}

struct LoadedData {
  ExperimentData data;
  std::uint64_t train_checksum = 0;
  std::uint64_t test_checksum = 0;
};

LoadedData load_data(const ExperimentConfig& config) {
  config.require_data();
  RawDataset train = load_mnist_idx(config.train_images, config.train_labels, Split::kTrain);
  RawDataset test = load_mnist_idx(config.test_images, config.test_labels, Split::kTest);
  LoadedData out;
  out.train_checksum = train.checksum;
  out.test_checksum = test.checksum;
  if (config.train_count > 0) train = subset(train, config.train_count, derive_seed(config.seed, 0xda7a01));
  if (config.test_count > 0) test = subset(test, config.test_count, derive_seed(config.seed, 0xda7a02));
  out.data = {train.labeled(), test.labeled()};
  return out;
}

Tensor leading_samples(const LabeledDataset& data, std::size_t count, std::string_view what) {
  if (count == 0 || count > data.size()) {
    throw ConfigError(std::string(what) + " must be between 1 and the test subset size (" +
                      std::to_string(data.size()) + ")");
  }
  return data.inputs.slice(0, count);
}

Model model_at_unit_temperature(Model model) {
  model.set_temperature(1.0);
  return model;
}

SweepRow evaluate_row(SweepRow row, const Model& trained, const ExperimentData& data,
                      const ExperimentConfig& config) {
  const Model model = model_at_unit_temperature(trained);
  row.accuracy = accuracy(model, data.test);
  row.mean_confidence = confidence(model, data.test);
  row.mean_max_probability =
      mean_max_probability(trained, data.test.inputs, trained.temperature());
  const GradientHistogram histogram =
      gradient_histogram(model, leading_samples(data.test, config.gradient_samples, "gradient_samples"));
  row.median_gradient_amplitude = histogram.median_amplitude();
  row.median_gradient_bin = histogram.median_bin();
  row.histogram.assign(histogram.counts.begin(), histogram.counts.end());
  const auto campaign = attack_campaign(
      model, leading_samples(data.test, config.attack_samples, "attack_samples"),
      config.attack_config(model.input_size()));
  row.attack_success_rate = success_rate(campaign);
  const RobustnessReport report = robustness(campaign, model.input_size());
  row.robustness = report.robustness;
  row.coverage = report.coverage;
  return row;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string sweep_csv(const SweepReport& report) {
  std::ostringstream out;
  out << "kind,T,seed,status,attack_success_rate,accuracy,accuracy_variation,robustness,coverage,"
         "median_gradient_amplitude,median_gradient_bin,mean_confidence,mean_max_probability\n";
  for (const auto& r : report.rows) {
    out << r.kind << ',' << format_number(r.temperature) << ',' << r.seed << ',';
    if (r.error) {
      out << "error,,,,,,,,,\n";
      continue;
    }
    out << "ok," << format_number(r.attack_success_rate) << ',' << format_number(r.accuracy) << ','
        << format_number(r.accuracy_variation) << ','
        << (r.robustness ? format_number(*r.robustness) : std::string()) << ',' << r.coverage << ','
        << format_number(r.median_gradient_amplitude) << ',' << r.median_gradient_bin << ','
        << format_number(r.mean_confidence) << ',' << format_number(r.mean_max_probability) << '\n';
  }
  return out.str();
}

}  // namespace

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  const KeyHandler* handler = find_handler(trim(key));
  if (!handler) throw ConfigError("unknown config key '" + trim(key) + "'");
  handler->set(*this, trim(key), value);
}

void ExperimentConfig::validate() const {
  try {
    architecture_spec(architecture);
    train.validate();
    distill_config(train.temperature).validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (temperatures.empty()) throw ConfigError("temperatures must not be empty");
  for (double t : temperatures) {
    if (!(t > 0.0)) throw ConfigError("temperatures must be positive");
  }
  if (attack_samples == 0) throw ConfigError("attack_samples must be positive");
  if (gradient_samples == 0) throw ConfigError("gradient_samples must be positive");
  if (jobs == 0) throw ConfigError("jobs must be positive");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

void ExperimentConfig::require_data(std::string_view flag_prefix) const {
  const std::pair<const fs::path*, const char*> required[] = {{&train_images, "train-images"},
                                                             {&train_labels, "train-labels"},
                                                             {&test_images, "test-images"},
                                                             {&test_labels, "test-labels"}};
  for (const auto& [path, flag] : required) {
    if (path->empty()) {
      throw ConfigError("missing dataset path " + std::string(flag_prefix) + flag);
    }
    if (!fs::exists(*path)) {
      throw ConfigError("dataset path " + std::string(flag_prefix) + flag + " does not exist: " +
                        path->string());
    }
  }
}

TrainConfig ExperimentConfig::distill_config(double temperature) const {
  TrainConfig c = train;
  c.temperature = temperature;
  if (distill_epochs) c.epochs = *distill_epochs;
  if (distill_learning_rate) c.learning_rate = *distill_learning_rate;
  if (distill_decay_delay) c.decay_delay = *distill_decay_delay;
  return c;
}

AttackConfig ExperimentConfig::attack_config(std::size_t input_size) const {
  AttackConfig a;
  a.max_features = max_features ? max_features : default_feature_budget(input_size);
  a.feature_value = feature_value;
  a.saliency_variant = saliency;
  return a;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& entry : handlers()) k.push_back(entry.first);
    return k;
  }();
  return keys;
}

void apply_config_text(ExperimentConfig& config, std::string_view text, std::string_view source) {
  std::istringstream in{std::string(text)};
  std::map<std::string, std::size_t> seen;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    const std::string where = std::string(source) + ":" + std::to_string(number) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (const auto [it, fresh] = seen.emplace(key, number); !fresh) {
      throw ConfigError(where + "key '" + key + "' already set on line " + std::to_string(it->second));
    }
    try {
      config.set(key, std::string_view(line).substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  ExperimentConfig config;
  apply_config_text(config, text.str(), path.string());
  return config;
}

std::string to_config_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& [key, handler] : handlers()) out += key + " = " + handler.get(config) + "\n";
  return out;
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_config_text(config)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentData load_experiment_data(const ExperimentConfig& config) { return load_data(config).data; }

void cmd_train(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  const LoadedData loaded = load_data(config);
  const fs::path out = prepare_output(config);
  std::vector<EpochMetrics> epochs;
  TrainHooks hooks;
  hooks.evaluation = &loaded.data.test;
  hooks.on_epoch = [&](const EpochMetrics& m, const Model&) { epochs.push_back(m); };
  TrainConfig train_config = config.train;
  train_config.rng_seed = config.seed;
  const Model model = train(architecture_spec(config.architecture), loaded.data.train, train_config, hooks);
  save_model(model, out / "model.bin");
  write_text(out / "train_metrics.csv", metrics_csv(epochs));
  write_manifest(config, "train", start, {"model.bin", "train_metrics.csv", "config.txt"},
                 loaded.train_checksum, loaded.test_checksum);
}

void cmd_distill(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  const LoadedData loaded = load_data(config);
  const fs::path out = prepare_output(config);
  std::vector<EpochMetrics> teacher_epochs, student_epochs;
  TrainHooks teacher_hooks, student_hooks;
  teacher_hooks.evaluation = student_hooks.evaluation = &loaded.data.test;
  teacher_hooks.on_epoch = [&](const EpochMetrics& m, const Model&) { teacher_epochs.push_back(m); };
  student_hooks.on_epoch = [&](const EpochMetrics& m, const Model&) { student_epochs.push_back(m); };
  TrainConfig train_config = config.distill_config(config.train.temperature);
  train_config.rng_seed = config.seed;
  const Distillation d = distill(architecture_spec(config.architecture), loaded.data.train, train_config,
                                 teacher_hooks, student_hooks);
  save_model(d.teacher, out / "teacher.bin");
  save_model(d.student, out / "student.bin");
  write_text(out / "teacher_metrics.csv", metrics_csv(teacher_epochs));
  write_text(out / "student_metrics.csv", metrics_csv(student_epochs));
  const double teacher_accuracy = accuracy(model_at_unit_temperature(d.teacher), loaded.data.test);
  const double student_accuracy = accuracy(model_at_unit_temperature(d.student), loaded.data.test);
  std::ostringstream comparison;
  comparison << "temperature,teacher_accuracy,student_accuracy,accuracy_variation\n"
             << format_number(train_config.temperature) << ',' << format_number(teacher_accuracy) << ','
             << format_number(student_accuracy) << ','
             << format_number(accuracy_variation(teacher_accuracy, student_accuracy)) << '\n';
  write_text(out / "comparison.csv", comparison.str());
  write_manifest(config, "distill", start,
                 {"teacher.bin", "student.bin", "teacher_metrics.csv", "student_metrics.csv",
                  "comparison.csv", "config.txt"},
                 loaded.train_checksum, loaded.test_checksum);
}

void cmd_attack(const ExperimentConfig& config, const fs::path& model_path) {
  config.validate();
  const Model model = model_at_unit_temperature(load_model(model_path));
  const LoadedData loaded = load_data(config);
  fs::create_directories(config.output_dir);
  const Tensor samples = leading_samples(loaded.data.test, config.attack_samples, "attack_samples");
  const AttackConfig attack = config.attack_config(model.input_size());
  const auto campaign = attack_campaign(model, samples, attack);
  std::ostringstream csv;
  write_campaign_csv(csv, campaign);
  write_text(config.output_dir / "campaign.csv", csv.str());

  std::size_t successes = 0, changed = 0;
  for (const auto& e : campaign) {
    successes += e.result.success;
    changed += e.result.features_changed;
  }
  const RobustnessReport report = robustness(campaign, model.input_size());
  write_json(config.output_dir / "summary.json",
             json{{"model", model_path.string()},
                  {"config_hash", config_hash(config)},
                  {"samples", samples.dim(0)},
                  {"total", campaign.size()},
                  {"successes", successes},
                  {"success_rate", success_rate(campaign)},
                  {"mean_features_changed",
                   campaign.empty() ? 0.0 : static_cast<double>(changed) / campaign.size()},
                  {"max_features", attack.max_features},
                  {"robustness", to_json(report)}});
}

void cmd_evaluate(const ExperimentConfig& config, const fs::path& model_path) {
  config.validate();
  const Model trained = load_model(model_path);
  const Model model = model_at_unit_temperature(trained);
  const LoadedData loaded = load_data(config);
  fs::create_directories(config.output_dir);
  const GradientHistogram histogram = gradient_histogram(
      model, leading_samples(loaded.data.test, config.gradient_samples, "gradient_samples"));
  std::ostringstream csv;
  write_histogram_csv(csv, histogram);
  write_text(config.output_dir / "histogram.csv", csv.str());
  write_json(config.output_dir / "evaluation.json",
             json{{"model", model_path.string()},
                  {"training_temperature", trained.temperature()},
                  {"test_samples", loaded.data.test.size()},
                  {"accuracy", accuracy(model, loaded.data.test)},
                  {"mean_confidence", confidence(model, loaded.data.test)},
                  {"mean_max_probability",
                   mean_max_probability(trained, loaded.data.test.inputs, trained.temperature())},
                  {"median_gradient_amplitude", histogram.median_amplitude()},
                  {"median_gradient_bin", histogram.median_bin()},
                  {"histogram", to_json(histogram)}});
}

std::uint64_t sweep_row_seed(std::uint64_t master_seed, double temperature) {
  return derive_seed(master_seed, std::bit_cast<std::uint64_t>(temperature));
}

json to_json(const SweepRow& row) {
  json j{{"kind", row.kind}, {"T", row.temperature}, {"seed", row.seed}};
  if (row.error) {
    j["status"] = "error";
    j["error"] = *row.error;
    return j;
  }
  j["status"] = "ok";
  j["attack_success_rate"] = row.attack_success_rate;
  j["accuracy"] = row.accuracy;
  j["accuracy_variation"] = row.accuracy_variation;
  j["robustness"] = optional_json(row.robustness);
  j["coverage"] = row.coverage;
  j["median_gradient_amplitude"] = row.median_gradient_amplitude;
  j["median_gradient_bin"] = row.median_gradient_bin;
  j["mean_confidence"] = row.mean_confidence;
  j["mean_max_probability"] = row.mean_max_probability;
  j["histogram"] = row.histogram;
  return j;
}

SweepReport cmd_sweep(const ExperimentConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  const LoadedData loaded = load_data(config);
  const fs::path out = prepare_output(config);
  const ModelSpec spec = architecture_spec(config.architecture);

  auto run_row = [&](std::size_t index) -> SweepRow {
    SweepRow row;
    if (index == 0) {
      row.kind = "baseline";
      row.temperature = 1.0;
      row.seed = config.seed;
    } else {
      row.kind = "distilled";
      row.temperature = config.temperatures[index - 1];
      row.seed = sweep_row_seed(config.seed, row.temperature);
    }
    try {
      TrainConfig c = index == 0 ? config.train : config.distill_config(row.temperature);
      c.temperature = row.temperature;
      c.rng_seed = row.seed;
      if (index == 0) return evaluate_row(row, train(spec, loaded.data.train, c), loaded.data, config);
      const Distillation d = distill(spec, loaded.data.train, c);
      return evaluate_row(row, d.student, loaded.data, config);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      row.error = e.what();
      return row;
    }
  };

  const std::size_t count = config.temperatures.size() + 1;
  SweepReport report;
  report.rows.resize(count);
  for (std::size_t begin = 0; begin < count; begin += config.jobs) {
    const std::size_t end = std::min(count, begin + config.jobs);
    std::vector<std::future<SweepRow>> pending;
    for (std::size_t i = begin + 1; i < end; ++i) pending.push_back(std::async(std::launch::async, run_row, i));
    report.rows[begin] = run_row(begin);
    for (std::size_t i = begin + 1; i < end; ++i) report.rows[i] = pending[i - begin - 1].get();
  }
  const SweepRow& baseline = report.rows.front();
  for (auto& row : report.rows) {
    if (!row.error && !baseline.error) row.accuracy_variation = accuracy_variation(baseline.accuracy, row.accuracy);
  }

  write_text(out / "sweep.csv", sweep_csv(report));
  json rows = json::array();
  for (const auto& row : report.rows) rows.push_back(to_json(row));
  write_json(out / "sweep.json", json{{"config_hash", config_hash(config)},
                                      {"seed", config.seed},
                                      {"architecture", config.architecture},
                                      {"attack_samples", config.attack_samples},
                                      {"gradient_samples", config.gradient_samples},
                                      {"rows", rows}});
  write_manifest(config, "sweep", start, {"sweep.csv", "sweep.json", "config.txt"}, loaded.train_checksum,
                 loaded.test_checksum);
  return report;
}

}  // namespace ddist
