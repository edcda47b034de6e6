#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "terra_risk/gp.hpp"
#include "terra_risk/rng.hpp"

namespace terra_risk {

struct MixtureComponent {
    int class_id = 0;
    double weight = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};

/// Likelihood-weighted sum of class-conditional Gaussian slip predictions.
struct MixtureSlipDistribution {
    std::vector<MixtureComponent> components;

    double mean() const noexcept;
    /// Law of total variance.
    double variance() const noexcept;
    /// Throws InputError unless weights form a distribution and variances are positive.
    void validate() const;
};

struct RiskConfig {
    double alpha = 0.99;
    std::size_t mc_samples = 20000;
    std::uint64_t seed = 0;
    bool shared_class_draw = true;

    /// Throws ParameterError; alpha > 0.9 needs at least 1000 samples.
    void validate() const;
};

inline constexpr double kMixtureWeightFloor = 1e-12;

/// Mixture at pitch `pitch`: component c = (P(c), mu_c(pitch), sigma_c^2(pitch)).
/// Components below kMixtureWeightFloor are dropped and the rest renormalized.
MixtureSlipDistribution mixture_at_edge(std::span<const double> class_probs, const SlipModelSet& models, double pitch);

/// Same, from precomputed per-class predictions (indexed by class id).
MixtureSlipDistribution mixture_from_predictions(std::span<const double> class_probs,
                                                 std::span<const GPPrediction> predictions);

/// Standard normal quantile, relative error below 1.2e-9 on (0, 1).
double normal_quantile(double p) noexcept;

/// Samples of the slip-as-risk variable: S(phi) when ascending, 2 S(0) - S(phi) when descending.
/// With `shared_class` one class per sample feeds both S(0) and S(phi); the samples are then
/// stratified: each class receives a systematic share of n and its draws are spread one per
/// quantile stratum. Without it, S(0) and S(phi) are plain independent Monte-Carlo draws.
void slip_as_risk_samples(const MixtureSlipDistribution& at_pitch, const MixtureSlipDistribution& at_zero,
                          double pitch, CounterRng& rng, std::size_t n, std::vector<double>& out,
                          bool shared_class = true);
std::vector<double> slip_as_risk_samples(const MixtureSlipDistribution& at_pitch,
                                         const MixtureSlipDistribution& at_zero, double pitch, CounterRng& rng,
                                         std::size_t n, bool shared_class = true);

/// Closed-form mean of the slip-as-risk variable.
double risk_expected_value(const MixtureSlipDistribution& at_pitch, const MixtureSlipDistribution& at_zero,
                           double pitch) noexcept;

double expected_value(std::span<const double> samples);

/// Empirical alpha-quantile: sorted[ceil(alpha n) - 1], clamped; alpha = 0 gives the minimum.
double value_at_risk(std::span<const double> samples, double alpha);

/// Mean of the samples strictly above VaR_alpha (VaR_alpha itself when none are);
/// alpha = 0 returns the plain sample mean.
double conditional_value_at_risk(std::span<const double> samples, double alpha);

struct TailRisk {
    double var = 0.0;
    double cvar = 0.0;
};

/// VaR/CVaR for several levels at once; identical results to the single-level functions.
std::vector<TailRisk> tail_risk(std::span<const double> samples, std::span<const double> alphas,
                                std::vector<double>& scratch);

}  // namespace terra_risk
