#include "ddist/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

namespace ddist {

std::string_view saliency_variant_name(SaliencyVariant v) {
  return v == SaliencyVariant::kPixelPair ? "pixel-pair" : "single-feature";
}

SaliencyVariant parse_saliency_variant(std::string_view name) {
  if (name == "pixel-pair") return SaliencyVariant::kPixelPair;
  if (name == "single-feature") return SaliencyVariant::kSingleFeature;
  throw std::invalid_argument("unknown saliency variant '" + std::string(name) + "'");
}

std::size_t default_feature_budget(std::size_t input_size) {
  return static_cast<std::size_t>(std::ceil(0.143 * static_cast<double>(input_size)));
}

std::optional<SaliencyChoice> select_features(const Tensor& jacobian, std::size_t target,
                                              std::span<const std::size_t> candidates,
                                              SaliencyVariant variant) {
  if (jacobian.rank() != 2 || target >= jacobian.dim(0)) {
    throw DimensionError("select_features", "target " + std::to_string(target) + " vs jacobian " +
                                                shape_string(jacobian.shape()));
  }
  const std::size_t classes = jacobian.dim(0), m = jacobian.dim(1);
  const std::size_t k = candidates.size();
  std::vector<double> alpha(k), beta(k);
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t j = candidates[c];
    if (j >= m) throw std::out_of_range("select_features: feature " + std::to_string(j));
    alpha[c] = jacobian.at(target, j);
    double others = 0.0;
    for (std::size_t i = 0; i < classes; ++i) {
      if (i != target) others += jacobian.at(i, j);
    }
    beta[c] = others;
  }

  std::optional<SaliencyChoice> best_admissible, best_raw;
  auto consider = [&](double a, double b, std::size_t p, std::optional<std::size_t> q) {
    const double score = a * std::fabs(b);
    const bool admissible = a > 0.0 && b < 0.0;
    auto make = [&] {
      SaliencyChoice c{{candidates[p]}, score, admissible};
      if (q) c.features.push_back(candidates[*q]);
      return c;
    };
    if (admissible && (!best_admissible || score > best_admissible->score)) best_admissible = make();
    if (!best_raw || score > best_raw->score) best_raw = make();
  };

  if (variant == SaliencyVariant::kSingleFeature) {
    for (std::size_t p = 0; p < k; ++p) consider(alpha[p], beta[p], p, std::nullopt);
  } else {
    for (std::size_t p = 0; p < k; ++p) {
      for (std::size_t q = p + 1; q < k; ++q) consider(alpha[p] + alpha[q], beta[p] + beta[q], p, q);
    }
  }
  return best_admissible ? best_admissible : best_raw;
}

AttackResult jsma_attack(const Model& model, const Tensor& x, const AttackConfig& config) {
  const std::size_t m = model.input_size();
  if (config.target_class >= model.class_count()) {
    throw std::invalid_argument("jsma: target class " + std::to_string(config.target_class) +
                                " out of range for " + std::to_string(model.class_count()) + " classes");
  }
  if (config.max_features > m) {
    throw std::invalid_argument("jsma: budget " + std::to_string(config.max_features) +
                                " exceeds input dimension " + std::to_string(m));
  }
  if (x.size() != m) throw DimensionError("jsma input", model.spec().input_shape, x.shape());

  AttackResult result;
  result.target_class = config.target_class;
  Tensor adv = x;
  std::vector<bool> exhausted(m);
  for (std::size_t j = 0; j < m; ++j) exhausted[j] = adv[j] == config.feature_value;

  std::size_t changed = 0;
  while (true) {
    if (model.classify(adv) == config.target_class) break;
    const std::size_t remaining = config.max_features - changed;
    if (remaining == 0) break;
    std::vector<std::size_t> candidates;
    for (std::size_t j = 0; j < m; ++j) {
      if (!exhausted[j]) candidates.push_back(j);
    }
    if (candidates.empty()) break;
    SaliencyVariant variant = config.saliency_variant;
    if (variant == SaliencyVariant::kPixelPair && (remaining < 2 || candidates.size() < 2)) {
      variant = SaliencyVariant::kSingleFeature;
    }
    const Tensor jacobian = model.input_jacobian(adv, 1.0);
    ++result.queries;
    const auto choice = select_features(jacobian, config.target_class, candidates, variant);
    if (!choice) break;
    for (auto j : choice->features) {
      adv[j] = config.feature_value;
      exhausted[j] = true;
      ++changed;
    }
    result.selections.push_back(choice->features);
  }

  result.final_class = model.classify(adv);
  result.success = result.final_class == config.target_class;
  result.perturbation = adv;
  for (std::size_t j = 0; j < m; ++j) {
    result.perturbation[j] = adv[j] - x[j];
    if (result.perturbation[j] != 0.0f) ++result.features_changed;
  }
  return result;
}

AttackResult fgsm_attack(const Model& model, const Tensor& x, std::size_t true_label, float epsilon,
                         float input_min, float input_max) {
  if (!(epsilon >= 0.0f)) throw std::invalid_argument("fgsm: epsilon must be nonnegative");
  if (true_label >= model.class_count()) throw std::invalid_argument("fgsm: label out of range");
  const std::size_t m = model.input_size();
  if (x.size() != m) throw DimensionError("fgsm input", model.spec().input_shape, x.shape());

  Shape batch_shape{1};
  batch_shape.insert(batch_shape.end(), model.spec().input_shape.begin(), model.spec().input_shape.end());
  Graph graph;
  const NodeId in = graph.input(x.reshaped(batch_shape), true);
  const auto fwd = model.build(graph, in, false);
  Tensor label({1, model.class_count()});
  label[true_label] = 1.0f;
  const NodeId loss = graph.softmax_cross_entropy(fwd.logits, std::move(label));
  const Tensor grad = graph.backward(loss)[in];

  AttackResult result;
  result.queries = 1;
  result.target_class = true_label;
  Tensor adv = x;
  for (std::size_t j = 0; j < m; ++j) {
    const float g = grad[j];
    const float sign = g > 0.0f ? 1.0f : (g < 0.0f ? -1.0f : 0.0f);
    adv[j] = std::clamp(x[j] + epsilon * sign, input_min, input_max);
  }
  result.final_class = model.classify(adv);
  result.success = result.final_class != true_label;
  result.perturbation = adv;
  for (std::size_t j = 0; j < m; ++j) {
    result.perturbation[j] = adv[j] - x[j];
    if (result.perturbation[j] != 0.0f) ++result.features_changed;
  }
  return result;
}

std::vector<CampaignEntry> attack_campaign(const Model& model, const Tensor& samples,
                                           const AttackConfig& base) {
  std::vector<CampaignEntry> entries;
  if (samples.empty()) return entries;
  const std::size_t count = samples.dim(0);
  for (std::size_t s = 0; s < count; ++s) {
    const Tensor x = samples.row(s);
    const std::size_t source = model.classify(x);
    for (std::size_t target = 0; target < model.class_count(); ++target) {
      if (target == source) continue;
      AttackConfig config = base;
      config.target_class = target;
      entries.push_back({s, source, jsma_attack(model, x, config)});
    }
  }
  return entries;
}

double success_rate(std::span<const CampaignEntry> entries) {
  if (entries.empty()) return 0.0;
  std::size_t wins = 0;
  for (const auto& e : entries) wins += e.result.success ? 1 : 0;
  return static_cast<double>(wins) / static_cast<double>(entries.size());
}

void write_campaign_csv(std::ostream& out, std::span<const CampaignEntry> entries) {
  out << "sample_id,source_class,target_class,success,features_changed,queries\n";
  for (const auto& e : entries) {
    out << e.sample_id << ',' << e.source_class << ',' << e.result.target_class << ','
        << (e.result.success ? 1 : 0) << ',' << e.result.features_changed << ',' << e.result.queries
        << '\n';
  }
}

}  // namespace ddist
