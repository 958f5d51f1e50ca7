#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddist/attacks.hpp"
#include "ddist/dataset.hpp"
#include "ddist/model.hpp"

namespace ddist {

struct SampleMinimum {
  std::size_t sample_id;
  /// min over successful targets of features_changed / M; empty when no
  /// target succeeded.
  std::optional<double> min_perturbation;
};

struct RobustnessReport {
  std::vector<SampleMinimum> samples;  // ascending sample_id
  /// Mean of the per-sample minima over covered samples; empty when no
  /// sample was covered.
  std::optional<double> robustness;
  std::size_t coverage = 0;
  std::size_t sample_count = 0;
};

/// Empirical robustness from a campaign using the changed-feature count as
/// the distance. Throws std::invalid_argument on an empty result set.
RobustnessReport robustness(std::span<const CampaignEntry> results, std::size_t input_dimension);

/// Ten amplitude bins for mean |dF/dX|, indexed from the smallest
/// amplitudes (bin 0: < 1e-40) to the largest (bin 9: >= 1e-3).
struct GradientHistogram {
  /// Lower edges of bins 1..9; bin 0 starts at 0.
  static constexpr std::array<double, 9> kLowerEdges = {1e-40, 1e-35, 1e-30, 1e-25, 1e-20,
                                                        1e-15, 1e-10, 1e-6,  1e-3};
  static constexpr std::size_t kBins = 10;

  std::array<std::size_t, kBins> counts{};
  std::size_t sample_count = 0;
  std::vector<double> amplitudes;  // per sample, input order

  static std::size_t bin_of(double amplitude);
  static std::string bin_label(std::size_t bin);
  /// Bin holding the lower median sample.
  std::size_t median_bin() const;
  double median_amplitude() const;
};

GradientHistogram gradient_histogram(const Model& model, const Tensor& samples);

/// Mean C(X): 0 when argmax F(X) != label, else max_i F_i(X), at T = 1.
double confidence(const Model& model, const LabeledDataset& data);

/// argmax-at-T=1 match rate against the label argmax.
double accuracy(const Model& model, const LabeledDataset& data);

inline double accuracy_variation(double baseline_accuracy, double distilled_accuracy) {
  return distilled_accuracy - baseline_accuracy;
}

/// Mean of max_i F_i(X) evaluated at `temperature`.
double mean_max_probability(const Model& model, const Tensor& samples, double temperature);

double median(std::vector<double> values);

nlohmann::json to_json(const RobustnessReport& report);
nlohmann::json to_json(const GradientHistogram& histogram);

/// CSV: bin,label,count
void write_histogram_csv(std::ostream& out, const GradientHistogram& histogram);
/// CSV: sample_id,covered,min_perturbation
void write_robustness_csv(std::ostream& out, const RobustnessReport& report);

}  // namespace ddist
