#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ddist/model.hpp"
#include "ddist/tensor.hpp"

namespace ddist {

enum class SaliencyVariant { kPixelPair, kSingleFeature };

std::string_view saliency_variant_name(SaliencyVariant v);
SaliencyVariant parse_saliency_variant(std::string_view name);

/// Feature budget ceil(0.143 * M) (112 of 784 rounded up to 113).
std::size_t default_feature_budget(std::size_t input_size);

struct AttackConfig {
  std::size_t max_features = 0;
  float feature_value = 1.0f;  // value a selected feature is set to
  std::size_t target_class = 0;
  SaliencyVariant saliency_variant = SaliencyVariant::kPixelPair;
  float input_min = 0.0f;
  float input_max = 1.0f;
};

struct AttackResult {
  bool success = false;
  std::size_t features_changed = 0;
  Tensor perturbation;  // X* - X, same shape as X
  std::size_t final_class = 0;
  std::size_t queries = 0;  // Jacobian evaluations
  std::size_t target_class = 0;
  /// Features chosen at each iteration (one or two indices per step).
  std::vector<std::vector<std::size_t>> selections;
};

/// Saliency score of a candidate set given the target-class gradient sum
/// `alpha` and the other-classes gradient sum `beta`.
struct SaliencyChoice {
  std::vector<std::size_t> features;
  double score = 0.0;
  bool admissible = false;  // alpha > 0 and beta < 0
};

/// Best pair (p < q) or single feature among `candidates` for `target`
/// given an [N, M] Jacobian. Admissible choices maximize
/// alpha * |beta|; when none is admissible the raw maximum of the same
/// score is returned. Ties keep the first candidate in index order.
std::optional<SaliencyChoice> select_features(const Tensor& jacobian, std::size_t target,
                                              std::span<const std::size_t> candidates,
                                              SaliencyVariant variant);

/// Iterative saliency-map attack at T = 1. Features already at
/// feature_value are never candidates, and no feature is changed twice.
AttackResult jsma_attack(const Model& model, const Tensor& x, const AttackConfig& config);

/// X* = clamp(X + epsilon * sign(dLoss/dX), [input_min, input_max]) with
/// the T = 1 cross-entropy against `true_label`; sign(0) = 0.
AttackResult fgsm_attack(const Model& model, const Tensor& x, std::size_t true_label, float epsilon,
                         float input_min = 0.0f, float input_max = 1.0f);

struct CampaignEntry {
  std::size_t sample_id;
  std::size_t source_class;  // model prediction on the clean sample
  AttackResult result;
};

/// JSMA against every class other than the source class, sample-major and
/// target-ascending. `base` supplies budget, feature value and variant.
std::vector<CampaignEntry> attack_campaign(const Model& model, const Tensor& samples,
                                           const AttackConfig& base);

double success_rate(std::span<const CampaignEntry> entries);

/// CSV: sample_id,source_class,target_class,success,features_changed,queries
void write_campaign_csv(std::ostream& out, std::span<const CampaignEntry> entries);

}  // namespace ddist
