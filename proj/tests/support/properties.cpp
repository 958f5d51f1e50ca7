#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "ddist/attacks.hpp"
#include "ddist/model.hpp"
#include "ddist/training.hpp"
#include "reference_net.hpp"

namespace ddist::testing {
namespace {

std::string format(const char* fmt, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, fmt, args...);
  return buffer;
}

std::vector<double> reference_softmax(const std::vector<double>& z, double t) {
  const double top = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) total += p[i] = std::exp((z[i] - top) / t);
  for (auto& v : p) v /= total;
  return p;
}

std::vector<float> random_distribution(std::mt19937_64& rng, std::size_t n) {
  std::gamma_distribution<double> gamma(0.5, 1.0);
  std::vector<double> raw(n);
  double total = 0.0;
  for (auto& v : raw) total += v = gamma(rng) + 1e-6;
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(raw[i] / total);
  return out;
}

/// Dense-linear + softmax model with logits = X, X of shape [1, 1, n].
Model identity_model(std::size_t n) {
  ModelSpec spec{{1, 1, n}, {LayerSpec::dense_linear(static_cast<std::uint32_t>(n)), LayerSpec::softmax()}};
  Tensor w({n, n});
  for (std::size_t i = 0; i < n; ++i) w.at(i, i) = 1.0f;
  return Model(spec, {w, Tensor({n})}, 1.0, 0);
}

}  // namespace

SuiteResult gradient_suite(std::size_t graphs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::size_t checked = 0, skipped = 0, failures = 0, conv_graphs = 0;
  double worst = 0.0, worst_abs = 0.0;
  for (std::size_t g = 0; g < graphs; ++g) {
    const RandomNet net = make_random_net(rng);
    if (net.input_shape.size() == 4) ++conv_graphs;
    const GradCheckStats stats = check_gradients(net, 1e-3, 1e-3, 1e-5);
    checked += stats.checked;
    skipped += stats.skipped_kinks;
    failures += stats.failures;
    worst = std::max(worst, stats.max_rel_error);
    worst_abs = std::max(worst_abs, stats.max_abs_error);
  }
  // Kink skips must stay rare or the check loses its teeth.
  const bool pass = failures == 0 && conv_graphs > 0 && conv_graphs < graphs && skipped * 20 < checked;
  return {pass, format("%zu graphs (%zu conv), %zu entries, %zu skipped at kinks, %zu failures, worst abs err %.2e, worst rel err above the floor %.2e",
                       graphs, conv_graphs, checked, skipped, failures, worst_abs, worst)};
}

SuiteResult softmax_suite(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double temperatures[] = {0.5, 1.0, 5.0, 20.0, 100.0};
  std::uniform_int_distribution<int> sixty_fourths(-64 * 64, 64 * 64);
  std::uniform_int_distribution<std::size_t> classes(2, 10);

  double norm_err = 0.0, shift_err = 0.0, jac_err = 0.0, scale_err = 0.0;
  std::size_t argmax_flips = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = classes(rng);
    std::vector<float> z(n);
    for (auto& v : z) v = static_cast<float>(sixty_fourths(rng)) / 64.0f;
    std::vector<float> sorted = z;
    std::sort(sorted.begin(), sorted.end());
    const bool clear_winner = sorted[n - 1] - sorted[n - 2] >= 0.25f;
    for (double t : temperatures) {
      const auto p = softmax_with_temperature(z, t);
      double total = 0.0;
      for (float v : p) total += v;
      norm_err = std::max(norm_err, std::abs(total - 1.0));
      if (clear_winner && argmax(p) != argmax(z)) ++argmax_flips;
      for (float shift : {-64.0f, 17.0f, 512.0f}) {
        std::vector<float> moved = z;
        for (auto& v : moved) v += shift;
        const auto q = softmax_with_temperature(moved, t);
        for (std::size_t i = 0; i < n; ++i) shift_err = std::max(shift_err, std::abs(double{p[i]} - q[i]));
      }
    }
  }

  std::uniform_real_distribution<double> unit(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = classes(rng);
    const Model model = identity_model(n);
    std::vector<float> x(n);
    for (auto& v : x) v = static_cast<float>(unit(rng));
    const Tensor input({1, 1, n}, x);
    const std::vector<double> z(x.begin(), x.end());
    const Tensor base = model.input_jacobian(input, 1.0);
    for (double t : temperatures) {
      const Tensor jac = model.input_jacobian(input, t);
      const auto f = reference_softmax(z, t);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t l = 0; l < n; ++l) {
          const double expected = f[i] * ((i == l ? 1.0 : 0.0) - f[l]) / t;
          jac_err = std::max(jac_err, std::abs(jac.at(i, l) - expected));
        }
      }
      // Logits scaled by T keep F fixed, so the Jacobian shrinks by exactly 1/T.
      std::vector<float> scaled(n);
      for (std::size_t i = 0; i < n; ++i) scaled[i] = static_cast<float>(z[i] * t);
      const Tensor scaled_jac = model.input_jacobian(Tensor({1, 1, n}, scaled), t);
      for (std::size_t k = 0; k < scaled_jac.size(); ++k) {
        scale_err = std::max(scale_err, std::abs(scaled_jac[k] * t - base[k]));
      }
    }
  }

  const Model pair = identity_model(2);
  double probe_err = 0.0;
  double previous = INFINITY;
  bool decreasing = true;
  for (double t : temperatures) {
    const double j00 = pair.input_jacobian(Tensor({1, 1, 2}), t).at(0, 0);
    probe_err = std::max(probe_err, std::abs(j00 - 0.25 / t));
    decreasing = decreasing && j00 < previous;
    previous = j00;
  }

  const bool pass = norm_err <= 1e-5 && argmax_flips == 0 && shift_err <= 1e-6 && jac_err <= 1e-5 &&
                    scale_err <= 1e-5 && probe_err <= 1e-6 && decreasing;
  return {pass, format("norm err %.1e, argmax flips %zu, shift err %.1e, jacobian err %.1e, "
                       "1/T scaling err %.1e, 0.25/T probe err %.1e",
                       norm_err, argmax_flips, shift_err, jac_err, scale_err, probe_err)};
}

SuiteResult loss_suite(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> classes(2, 10);
  double hard_err = 0.0, decomposition_err = 0.0, min_kl = INFINITY;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = classes(rng);
    const auto q = random_distribution(rng, n);
    const auto p = random_distribution(rng, n);

    const std::size_t target = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    std::vector<float> onehot(n, 0.0f);
    onehot[target] = 1.0f;
    const double ce = cross_entropy_loss(Tensor({n}, q), Tensor({n}, onehot));
    hard_err = std::max(hard_err, std::abs(ce + std::log(std::max(double{q[target]}, 1e-12))));

    const KlDecomposition d = kl_decomposition_check(p, q);
    decomposition_err = std::max(decomposition_err, std::abs(d.cross_entropy - (d.entropy + d.kl)));
    min_kl = std::min(min_kl, d.kl);
  }
  const bool pass = hard_err <= 1e-6 && decomposition_err <= 1e-5 && min_kl >= 0.0;
  return {pass, format("hard-label err %.1e, CE-(H+KL) err %.1e, min KL %.2e over 1000 pairs",
                       hard_err, decomposition_err, min_kl)};
}

SuiteResult saliency_oracle_suite(std::size_t instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr std::size_t kSide = 6, kM = kSide * kSide;

  std::size_t done = 0, iterations = 0, mismatches = 0, successes = 0;
  double jac_err = 0.0;
  while (done < instances) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(3, 6)(rng);
    ModelSpec spec{{1, kSide, kSide},
                   {LayerSpec::dense_linear(static_cast<std::uint32_t>(n)), LayerSpec::softmax()}};
    Tensor w({kM, n}), b({n});
    for (auto& v : w.data()) v = static_cast<float>(0.5 * normal(rng));
    for (auto& v : b.data()) v = static_cast<float>(0.5 * normal(rng));
    const Model model(spec, {w, b}, 1.0, 0);

    Tensor x({1, kSide, kSide});
    for (auto& v : x.data()) v = unit(rng) < 0.3 ? 0.0f : static_cast<float>(unit(rng));
    const std::size_t target = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    if (model.classify(x) == target) continue;

    AttackConfig config;
    config.max_features = 18;
    config.target_class = target;
    const AttackResult result = jsma_attack(model, x, config);
    if (result.success) ++successes;

    Tensor adv = x;
    std::vector<bool> exhausted(kM);
    for (std::size_t j = 0; j < kM; ++j) exhausted[j] = adv[j] == config.feature_value;
    std::size_t changed = 0;
    for (const auto& chosen : result.selections) {
      ++iterations;
      const Tensor jac = model.input_jacobian(adv, 1.0);

      // Analytic Jacobian of a linear-softmax model: F_i (w_ji - sum_l F_l w_jl).
      std::vector<double> z(n);
      for (std::size_t i = 0; i < n; ++i) {
        z[i] = b[i];
        for (std::size_t j = 0; j < kM; ++j) z[i] += double{adv[j]} * w.at(j, i);
      }
      const auto f = reference_softmax(z, 1.0);
      for (std::size_t j = 0; j < kM; ++j) {
        double mix = 0.0;
        for (std::size_t l = 0; l < n; ++l) mix += f[l] * w.at(j, l);
        for (std::size_t i = 0; i < n; ++i) {
          jac_err = std::max(jac_err, std::abs(jac.at(i, j) - f[i] * (w.at(j, i) - mix)));
        }
      }

      std::vector<std::size_t> candidates;
      for (std::size_t j = 0; j < kM; ++j) {
        if (!exhausted[j]) candidates.push_back(j);
      }
      std::vector<double> alpha(kM), beta(kM);
      for (std::size_t j = 0; j < kM; ++j) {
        alpha[j] = jac.at(target, j);
        for (std::size_t i = 0; i < n; ++i) {
          if (i != target) beta[j] += jac.at(i, j);
        }
      }
      const bool pairs = config.max_features - changed >= 2 && candidates.size() >= 2;
      std::vector<std::size_t> best_ok, best_any;
      double score_ok = -INFINITY, score_any = -INFINITY;
      auto offer = [&](double a, double bsum, std::vector<std::size_t> set) {
        const double score = a * std::abs(bsum);
        if (a > 0.0 && bsum < 0.0 && score > score_ok) {
          score_ok = score;
          best_ok = set;
        }
        if (score > score_any) {
          score_any = score;
          best_any = std::move(set);
        }
      };
      for (std::size_t pi = 0; pi < candidates.size(); ++pi) {
        const std::size_t p = candidates[pi];
        if (!pairs) {
          offer(alpha[p], beta[p], {p});
          continue;
        }
        for (std::size_t qi = pi + 1; qi < candidates.size(); ++qi) {
          const std::size_t q = candidates[qi];
          offer(alpha[p] + alpha[q], beta[p] + beta[q], {p, q});
        }
      }
      if ((best_ok.empty() ? best_any : best_ok) != chosen) ++mismatches;

      for (auto j : chosen) {
        adv[j] = config.feature_value;
        exhausted[j] = true;
        ++changed;
      }
    }
    if ((model.classify(adv) == target) != result.success) ++mismatches;
    ++done;
  }
  const bool pass = mismatches == 0 && iterations > 0 && jac_err <= 1e-5;
  return {pass, format("%zu instances, %zu selections compared, %zu mismatches, %zu successes, "
                       "jacobian err %.1e",
                       done, iterations, mismatches, successes, jac_err)};
}

}  // namespace ddist::testing
