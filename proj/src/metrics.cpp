#include "ddist/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ddist {

RobustnessReport robustness(std::span<const CampaignEntry> results, std::size_t input_dimension) {
  if (results.empty()) throw std::invalid_argument("robustness: empty result set");
  if (input_dimension == 0) throw std::invalid_argument("robustness: zero input dimension");
  std::map<std::size_t, std::optional<double>> minima;
  for (const auto& e : results) {
    auto& slot = minima[e.sample_id];
    if (!e.result.success) continue;
    const double fraction =
        static_cast<double>(e.result.features_changed) / static_cast<double>(input_dimension);
    if (!slot || fraction < *slot) slot = fraction;
  }
  RobustnessReport report;
  report.sample_count = minima.size();
  double total = 0.0;
  for (const auto& [id, value] : minima) {
    report.samples.push_back({id, value});
    if (value) {
      ++report.coverage;
      total += *value;
    }
  }
  if (report.coverage > 0) report.robustness = total / static_cast<double>(report.coverage);
  return report;
}

std::size_t GradientHistogram::bin_of(double amplitude) {
  std::size_t bin = 0;
  for (double edge : kLowerEdges) {
    if (amplitude >= edge) ++bin;
  }
  return bin;
}

std::string GradientHistogram::bin_label(std::size_t bin) {
  auto sci = [](double v) {
    std::ostringstream s;
    s << v;
    return s.str();
  };
  if (bin == 0) return "<" + sci(kLowerEdges.front());
  if (bin == kBins - 1) return ">=" + sci(kLowerEdges.back());
  return "[" + sci(kLowerEdges[bin - 1]) + "," + sci(kLowerEdges[bin]) + ")";
}

std::size_t GradientHistogram::median_bin() const {
  if (amplitudes.empty()) throw std::logic_error("median_bin of an empty histogram");
  std::vector<double> sorted = amplitudes;
  std::sort(sorted.begin(), sorted.end());
  return bin_of(sorted[(sorted.size() - 1) / 2]);
}

double GradientHistogram::median_amplitude() const { return median(amplitudes); }

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

GradientHistogram gradient_histogram(const Model& model, const Tensor& samples) {
  if (samples.empty()) throw std::invalid_argument("gradient_histogram: no samples");
  GradientHistogram h;
  h.sample_count = samples.dim(0);
  for (std::size_t s = 0; s < h.sample_count; ++s) {
    const double amplitude = model.mean_abs_input_gradient(samples.row(s));
    h.amplitudes.push_back(amplitude);
    ++h.counts[GradientHistogram::bin_of(amplitude)];
  }
  return h;
}

double confidence(const Model& model, const LabeledDataset& data) {
  if (data.size() == 0) throw std::invalid_argument("confidence: empty dataset");
  const Tensor probs = model.predict_batch(data.inputs, 1.0);
  const std::size_t n = model.class_count();
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = probs.data().subspan(i * n, n);
    const std::size_t predicted = argmax(row);
    if (predicted == argmax(data.label(i))) total += row[predicted];
  }
  return total / static_cast<double>(data.size());
}

double accuracy(const Model& model, const LabeledDataset& data) {
  if (data.size() == 0) throw std::invalid_argument("accuracy: empty dataset");
  const Tensor z = model.logits_batch(data.inputs);
  const std::size_t n = model.class_count();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (argmax(z.data().subspan(i * n, n)) == argmax(data.label(i))) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

double mean_max_probability(const Model& model, const Tensor& samples, double temperature) {
  const Tensor probs = model.predict_batch(samples, temperature);
  const std::size_t n = model.class_count();
  const std::size_t rows = probs.dim(0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const auto row = probs.data().subspan(i * n, n);
    total += *std::max_element(row.begin(), row.end());
  }
  return total / static_cast<double>(rows);
}

nlohmann::json to_json(const RobustnessReport& report) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : report.samples) {
    samples.push_back({{"sample_id", s.sample_id},
                       {"min_perturbation", s.min_perturbation ? nlohmann::json(*s.min_perturbation)
                                                               : nlohmann::json(nullptr)}});
  }
  return {{"robustness", report.robustness ? nlohmann::json(*report.robustness) : nlohmann::json(nullptr)},
          {"coverage", report.coverage},
          {"sample_count", report.sample_count},
          {"samples", samples}};
}

nlohmann::json to_json(const GradientHistogram& histogram) {
  nlohmann::json bins = nlohmann::json::array();
  for (std::size_t b = 0; b < GradientHistogram::kBins; ++b) {
    bins.push_back({{"bin", b}, {"label", GradientHistogram::bin_label(b)}, {"count", histogram.counts[b]}});
  }
  nlohmann::json out{{"sample_count", histogram.sample_count}, {"bins", bins}};
  if (!histogram.amplitudes.empty()) {
    out["median_bin"] = histogram.median_bin();
    out["median_amplitude"] = histogram.median_amplitude();
  }
  return out;
}

void write_histogram_csv(std::ostream& out, const GradientHistogram& histogram) {
  out << "bin,label,count\n";
  for (std::size_t b = 0; b < GradientHistogram::kBins; ++b) {
    out << b << ",\"" << GradientHistogram::bin_label(b) << "\"," << histogram.counts[b] << '\n';
  }
}

void write_robustness_csv(std::ostream& out, const RobustnessReport& report) {
  out << "sample_id,covered,min_perturbation\n";
  for (const auto& s : report.samples) {
    out << s.sample_id << ',' << (s.min_perturbation ? 1 : 0) << ',';
    if (s.min_perturbation) out << *s.min_perturbation;
    out << '\n';
  }
}

}  // namespace ddist
