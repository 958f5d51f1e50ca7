// Acceptance gate. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.
//
// usage: acceptance [--mnist DIR] [--config FILE] [--out DIR] [--jobs N]

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>

#include "ddist/attacks.hpp"
#include "ddist/data.hpp"
#include "ddist/experiment.hpp"
#include "ddist/metrics.hpp"
#include "ddist/model_io.hpp"
#include "properties.hpp"

namespace fs = std::filesystem;
using ddist::testing::SuiteResult;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

class Gate {
 public:
  void report(int id, const std::string& name, const Verdict& v) {
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " " << name << ": " << v.detail
              << std::endl;
    failures_ += !v.pass;
  }
  int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream out;
  out.precision(precision);
  out << v;
  return out.str();
}

Verdict timed_suite(const std::function<SuiteResult()>& run, double limit_seconds) {
  const auto start = std::chrono::steady_clock::now();
  const SuiteResult r = run();
  const double elapsed = seconds_since(start);
  const bool in_time = elapsed < limit_seconds;
  return {r.pass && in_time, r.detail + "; " + fmt(elapsed, 3) + " s (limit " + fmt(limit_seconds) + " s)"};
}

/// Non-increasing along `values` except for at most one adjacent rise no
/// larger than `tolerance`.
bool monotone_with_one_inversion(const std::vector<double>& values, double tolerance, bool increasing) {
  int inversions = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double step = increasing ? values[i - 1] - values[i] : values[i] - values[i - 1];
    if (step > 0) {
      if (step > tolerance + 1e-12) return false;
      ++inversions;
    }
  }
  return inversions <= 1;
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? ", " : "") + fmt(values[i]);
  return out;
}

/// Every artifact of a directory; the manifest without its wall time.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    std::string bytes = ddist::read_file(entry.path());
    if (name == "manifest.json") {
      auto manifest = nlohmann::json::parse(bytes);
      manifest.erase("wall_time_seconds");
      bytes = manifest.dump();
    }
    files[name] = bytes;
  }
  return files;
}

Verdict rerun_identical(const std::function<void()>& run, const fs::path& dir) {
  run();
  auto first = snapshot(dir);
  run();
  const auto second = snapshot(dir);
  std::vector<std::string> differ;
  for (const auto& [name, bytes] : first) {
    const auto it = second.find(name);
    if (it == second.end() || it->second != bytes) differ.push_back(name);
  }
  std::string names;
  for (const auto& [name, bytes] : first) names += (names.empty() ? "" : ",") + name;
  if (differ.empty()) return {true, std::to_string(first.size()) + " artifacts identical (" + names + ")"};
  std::string list;
  for (const auto& d : differ) list += " " + d;
  return {false, "differs:" + list};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance gate"};
  std::string mnist_dir = DDIST_MNIST_DIR;
  std::string config_path = std::string(DDIST_SOURCE_DIR) + "/configs/desk.cfg";
  std::string out_dir = "acceptance-out";
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("--mnist", mnist_dir, "Directory with the four MNIST IDX files");
  app.add_option("--config", config_path, "Desk experiment config");
  app.add_option("--out", out_dir, "Scratch output directory");
  app.add_option("--jobs", jobs, "Sweep rows trained concurrently");
  CLI11_PARSE(app, argc, argv);

  Gate gate;
  const auto total_start = std::chrono::steady_clock::now();

  gate.report(1, "gradient check", timed_suite([] { return ddist::testing::gradient_suite(120, 20240601); }, 60));
  gate.report(2, "softmax temperature invariants",
              timed_suite([] { return ddist::testing::softmax_suite(11); }, 60));
  gate.report(3, "loss identities", timed_suite([] { return ddist::testing::loss_suite(12); }, 10));

  ddist::ExperimentConfig desk;
  bool have_data = false;
  std::string data_problem;
  try {
    desk = ddist::load_config(config_path);
    desk.train_images = fs::path(mnist_dir) / "train-images-idx3-ubyte";
    desk.train_labels = fs::path(mnist_dir) / "train-labels-idx1-ubyte";
    desk.test_images = fs::path(mnist_dir) / "t10k-images-idx3-ubyte";
    desk.test_labels = fs::path(mnist_dir) / "t10k-labels-idx1-ubyte";
    desk.jobs = jobs;
    desk.validate();
    desk.require_data("");
    have_data = true;
  } catch (const std::exception& e) {
    data_problem = e.what();
  }
  const fs::path out = out_dir;

  if (!have_data) {
    for (int id : {4, 5, 6, 7, 8, 9, 10}) gate.report(id, "desk-scale run", {false, "not run: " + data_problem});
  } else {
    // Criterion 4: the baseline alone, through the train command.
    ddist::ExperimentConfig train_cfg = desk;
    train_cfg.output_dir = out / "baseline";
    auto start = std::chrono::steady_clock::now();
    ddist::cmd_train(train_cfg);
    const double train_seconds = seconds_since(start);
    const ddist::Model baseline = ddist::load_model(train_cfg.output_dir / "model.bin");
    const ddist::ExperimentData data = ddist::load_experiment_data(desk);
    const double base_accuracy = ddist::accuracy(baseline, data.test);
    gate.report(4, "baseline accuracy",
                {base_accuracy >= 0.95 && train_seconds < 600,
                 desk.architecture + " " + std::to_string(data.train.size()) + "/" +
                     std::to_string(data.test.size()) + ", " + std::to_string(desk.train.epochs) +
                     " epochs: accuracy " + fmt(base_accuracy) + " (need >= 0.95); " + fmt(train_seconds, 3) +
                     " s"});

    // Criterion 6: attack campaign against the baseline, through the attack command.
    ddist::ExperimentConfig attack_cfg = desk;
    attack_cfg.output_dir = out / "baseline-attack";
    start = std::chrono::steady_clock::now();
    ddist::cmd_attack(attack_cfg, train_cfg.output_dir / "model.bin");
    const double attack_seconds = seconds_since(start);
    const auto summary = nlohmann::json::parse(ddist::read_file(attack_cfg.output_dir / "summary.json"));
    const double base_rate = summary["success_rate"].get<double>();

    // Criteria 5, 7-10: the sweep.
    ddist::ExperimentConfig sweep_cfg = desk;
    sweep_cfg.output_dir = out / "sweep";
    start = std::chrono::steady_clock::now();
    const ddist::SweepReport report = ddist::cmd_sweep(sweep_cfg);
    const double sweep_seconds = seconds_since(start);
    std::cout << "sweep: " << report.rows.size() << " rows in " << fmt(sweep_seconds, 4) << " s" << std::endl;
    for (const auto& row : report.rows) {
      std::cout << "  " << row.kind << " T=" << row.temperature;
      if (row.error) {
        std::cout << " error: " << *row.error << std::endl;
        continue;
      }
      std::cout << " accuracy " << fmt(row.accuracy) << " success " << fmt(row.attack_success_rate)
                << " robustness " << (row.robustness ? fmt(*row.robustness) : "none") << " coverage "
                << row.coverage << " median|J| " << fmt(row.median_gradient_amplitude) << " bin "
                << row.median_gradient_bin << " confidence " << fmt(row.mean_confidence)
                << " max-prob@T " << fmt(row.mean_max_probability) << std::endl;
    }

    const ddist::SweepRow& base_row = report.rows.front();
    auto row_at = [&](double t) -> const ddist::SweepRow* {
      for (std::size_t i = 1; i < report.rows.size(); ++i) {
        if (report.rows[i].temperature == t && !report.rows[i].error) return &report.rows[i];
      }
      return nullptr;
    };
    const ddist::SweepRow* t20 = row_at(20);
    const bool rows_ok = !base_row.error && t20;

    if (!rows_ok) {
      for (int id : {5, 7, 8, 9, 10}) gate.report(id, "sweep", {false, "baseline or T=20 row missing"});
      gate.report(6, "baseline attack success", {base_rate >= 0.70, "success " + fmt(base_rate)});
    } else {
      const double variation = t20->accuracy - base_row.accuracy;
      gate.report(5, "distillation accuracy",
                  {std::abs(variation) <= 0.02, "baseline " + fmt(base_row.accuracy) + ", T=20 " +
                                                    fmt(t20->accuracy) + ", variation " + fmt(variation) +
                                                    " (need |.| <= 0.02)"});

      gate.report(6, "baseline attack success",
                  {base_rate >= 0.70 && attack_seconds < 600,
                   std::to_string(summary["successes"].get<int>()) + "/" +
                       std::to_string(summary["total"].get<int>()) + " targets = " + fmt(base_rate) +
                       " (need >= 0.70); " + fmt(attack_seconds, 3) + " s"});

      std::vector<double> rates;
      std::string rate_labels;
      bool all_rows = true;
      for (double t : {1.0, 10.0, 20.0, 100.0}) {
        const ddist::SweepRow* r = row_at(t);
        if (!r) {
          all_rows = false;
          continue;
        }
        rates.push_back(r->attack_success_rate);
      }
      const bool halved = t20->attack_success_rate <= 0.5 * base_row.attack_success_rate;
      const bool trend = all_rows && monotone_with_one_inversion(rates, 0.05, false);
      gate.report(7, "defense effect",
                  {halved && trend, "T=20 success " + fmt(t20->attack_success_rate) + " vs baseline " +
                                        fmt(base_row.attack_success_rate) + " (need <= half); T=1,10,20,100: " +
                                        join(rates) + (trend ? " non-increasing" : " not non-increasing")});

      const bool collapse = t20->median_gradient_amplitude * 10.0 <= base_row.median_gradient_amplitude;
      const bool bin_lower = t20->median_gradient_bin < base_row.median_gradient_bin;
      gate.report(8, "sensitivity collapse",
                  {collapse && bin_lower,
                   "median mean|J| baseline " + fmt(base_row.median_gradient_amplitude) + " (bin " +
                       std::to_string(base_row.median_gradient_bin) + "), T=20 " +
                       fmt(t20->median_gradient_amplitude) + " (bin " +
                       std::to_string(t20->median_gradient_bin) + ")"});

      // No covered sample means every sample resisted the full budget.
      const std::size_t budget = desk.max_features ? desk.max_features : ddist::default_feature_budget(784);
      const double budget_fraction = static_cast<double>(budget) / 784.0;
      const double rho_t20 = t20->robustness.value_or(budget_fraction);
      const bool grew = base_row.robustness && rho_t20 >= 2.0 * *base_row.robustness;
      gate.report(9, "robustness growth",
                  {grew, "rho baseline " + (base_row.robustness ? fmt(*base_row.robustness) : "none") +
                             " (coverage " + std::to_string(base_row.coverage) + "), T=20 " +
                             (t20->robustness ? fmt(*t20->robustness) : "none") + " (coverage " +
                             std::to_string(t20->coverage) + "); need >= 2x"});

      std::vector<double> confidences;
      bool conf_rows = true;
      for (double t : {1.0, 10.0, 20.0}) {
        const ddist::SweepRow* r = row_at(t);
        if (!r) {
          conf_rows = false;
          continue;
        }
        confidences.push_back(r->mean_confidence);
      }
      gate.report(10, "confidence monotonicity",
                  {conf_rows && monotone_with_one_inversion(confidences, 0.02, true),
                   "mean C(X) at T=1,10,20: " + join(confidences)});
    }
  }

  gate.report(11, "saliency oracle equivalence",
              timed_suite([] { return ddist::testing::saliency_oracle_suite(20, 13); }, 60));

  // Criterion 12: reduced runs of the same commands, each repeated into the
  // same directory.
  {
    ddist::ExperimentConfig small = desk;
    Verdict v{false, "not run: " + data_problem};
    if (have_data) {
      small.train_count = 500;
      small.test_count = 100;
      small.train.epochs = 2;
      small.distill_epochs = 2;
      small.temperatures = {1, 20};
      small.attack_samples = 2;
      small.gradient_samples = 20;
      small.output_dir = out / "determinism-train";
      const Verdict train_v = rerun_identical([&] { ddist::cmd_train(small); }, small.output_dir);
      ddist::ExperimentConfig sweep_small = small;
      sweep_small.output_dir = out / "determinism-sweep";
      const Verdict sweep_v = rerun_identical([&] { ddist::cmd_sweep(sweep_small); }, sweep_small.output_dir);
      v = {train_v.pass && sweep_v.pass, "train: " + train_v.detail + "; sweep: " + sweep_v.detail};
    }
    gate.report(12, "determinism", v);
  }

  std::cout << "total " << fmt(seconds_since(total_start), 4) << " s, " << gate.failures() << " failed"
            << std::endl;
  return gate.failures() == 0 ? 0 : 1;
}
