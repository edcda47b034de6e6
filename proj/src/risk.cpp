#include "terra_risk/risk.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "terra_risk/error.hpp"

namespace terra_risk {

double MixtureSlipDistribution::mean() const noexcept {
    double m = 0.0;
    for (const auto& c : components) m += c.weight * c.mean;
    return m;
}

double MixtureSlipDistribution::variance() const noexcept {
    const double m = mean();
    double v = 0.0;
    for (const auto& c : components) v += c.weight * (c.variance + (c.mean - m) * (c.mean - m));
    return v;
}

void MixtureSlipDistribution::validate() const {
    if (components.empty()) throw InputError("mixture has no components");
    double total = 0.0;
    for (const auto& c : components) {
        if (!(c.weight >= 0.0)) throw InputError("mixture weight must be >= 0");
        if (!(c.variance > 0.0)) throw InputError("mixture component variance must be > 0");
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InputError("mixture weights must sum to 1");
}

void RiskConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in [0, 1]");
    if (mc_samples < 1) throw ParameterError("mc_samples must be >= 1");
    if (alpha > 0.9 && mc_samples < 1000) throw ParameterError("alpha > 0.9 needs mc_samples >= 1000");
}

MixtureSlipDistribution mixture_from_predictions(std::span<const double> class_probs,
                                                 std::span<const GPPrediction> predictions) {
    MixtureSlipDistribution mix;
    double kept = 0.0;
    for (std::size_t c = 0; c < class_probs.size(); ++c) {
        const double w = class_probs[c];
        if (!(w >= kMixtureWeightFloor)) continue;
        if (c >= predictions.size()) throw ConfigError("no slip prediction for class " + std::to_string(c));
        mix.components.push_back({static_cast<int>(c), w, predictions[c].mean, predictions[c].variance});
        kept += w;
    }
    if (mix.components.empty()) throw InputError("class likelihoods carry no mass");
    if (kept != 1.0) {
        for (auto& comp : mix.components) comp.weight /= kept;
    }
    return mix;
}

MixtureSlipDistribution mixture_at_edge(std::span<const double> class_probs, const SlipModelSet& models, double pitch) {
    std::vector<GPPrediction> predictions(class_probs.size());
    for (std::size_t c = 0; c < class_probs.size(); ++c) {
        if (class_probs[c] >= kMixtureWeightFloor) predictions[c] = models.at(static_cast<int>(c)).predict(pitch);
    }
    return mixture_from_predictions(class_probs, predictions);
}

namespace {

struct ComponentTable {
    std::vector<double> cumulative;
    std::vector<double> mean_pitch, sd_pitch, mean_zero, sd_zero;

    std::size_t pick(CounterRng& rng) const noexcept {
        if (cumulative.size() == 1) return 0;
        const double u = rng.uniform();
        for (std::size_t i = 0; i + 1 < cumulative.size(); ++i) {
            if (u < cumulative[i]) return i;
        }
        return cumulative.size() - 1;
    }
};

ComponentTable build_table(const MixtureSlipDistribution& at_pitch, const MixtureSlipDistribution* at_zero) {
    ComponentTable t;
    double running = 0.0;
    for (std::size_t i = 0; i < at_pitch.components.size(); ++i) {
        const auto& c = at_pitch.components[i];
        running += c.weight;
        t.cumulative.push_back(running);
        t.mean_pitch.push_back(c.mean);
        t.sd_pitch.push_back(std::sqrt(c.variance));
        if (at_zero) {
            t.mean_zero.push_back(at_zero->components[i].mean);
            t.sd_zero.push_back(std::sqrt(at_zero->components[i].variance));
        }
    }
    return t;
}

}  // namespace

double normal_quantile(double p) noexcept {
    // Acklam's rational approximation.
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double low = 0.02425;
    if (p < low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - low) {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

namespace {

// Systematic class counts, then one draw per quantile stratum within each class.
// Strata run from the top down so the upper tail comes first.
void stratified_samples(std::span<const double> cumulative, std::span<const double> mean, std::span<const double> sd,
                        CounterRng& rng, std::size_t n, std::vector<double>& out) {
    const double nd = static_cast<double>(n);
    const double offset = rng.uniform();
    std::size_t filled = 0;
    std::size_t previous = 0;
    for (std::size_t c = 0; c < cumulative.size(); ++c) {
        const double edge = c + 1 == cumulative.size() ? nd : nd * cumulative[c];
        const auto upto = std::min(n, static_cast<std::size_t>(std::floor(edge + offset)));
        const std::size_t count = upto - std::min(upto, previous);
        previous = std::max(previous, upto);
        const double inv = 1.0 / static_cast<double>(count);
        for (std::size_t j = count; j-- > 0;) {
            out[filled++] = mean[c] + sd[c] * normal_quantile((static_cast<double>(j) + rng.uniform_open()) * inv);
        }
    }
}

}  // namespace

void slip_as_risk_samples(const MixtureSlipDistribution& at_pitch, const MixtureSlipDistribution& at_zero,
                          double pitch, CounterRng& rng, std::size_t n, std::vector<double>& out, bool shared_class) {
    if (n < 1) throw ParameterError("slip_as_risk_samples needs n >= 1");
    if (at_pitch.components.empty()) throw InputError("slip_as_risk_samples: empty mixture");
    out.resize(n);

    if (pitch >= 0.0 && shared_class) {
        const ComponentTable t = build_table(at_pitch, nullptr);
        stratified_samples(t.cumulative, t.mean_pitch, t.sd_pitch, rng, n, out);
        return;
    }
    if (pitch >= 0.0) {
        const ComponentTable t = build_table(at_pitch, nullptr);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = t.pick(rng);
            out[i] = t.mean_pitch[c] + t.sd_pitch[c] * rng.normal();
        }
        return;
    }

    if (at_zero.components.size() != at_pitch.components.size()) {
        throw InputError("slip_as_risk_samples: mixtures at pitch and at zero cover different classes");
    }
    for (std::size_t i = 0; i < at_pitch.components.size(); ++i) {
        if (at_zero.components[i].class_id != at_pitch.components[i].class_id) {
            throw InputError("slip_as_risk_samples: mixtures at pitch and at zero cover different classes");
        }
    }
    const ComponentTable t = build_table(at_pitch, &at_zero);
    if (shared_class) {
        // Given the class, 2 S(0) - S(phi) is Gaussian with mean 2 mu0 - mu and
        // variance 4 var0 + var.
        std::vector<double> mean(t.cumulative.size());
        std::vector<double> sd(t.cumulative.size());
        for (std::size_t c = 0; c < mean.size(); ++c) {
            mean[c] = 2.0 * t.mean_zero[c] - t.mean_pitch[c];
            sd[c] = std::sqrt(4.0 * t.sd_zero[c] * t.sd_zero[c] + t.sd_pitch[c] * t.sd_pitch[c]);
        }
        stratified_samples(t.cumulative, mean, sd, rng, n, out);
    } else {
        const ComponentTable tz = build_table(at_zero, nullptr);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c0 = tz.pick(rng);
            const std::size_t c = t.pick(rng);
            const double s0 = tz.mean_pitch[c0] + tz.sd_pitch[c0] * rng.normal();
            const double sp = t.mean_pitch[c] + t.sd_pitch[c] * rng.normal();
            out[i] = 2.0 * s0 - sp;
        }
    }
}

std::vector<double> slip_as_risk_samples(const MixtureSlipDistribution& at_pitch,
                                         const MixtureSlipDistribution& at_zero, double pitch, CounterRng& rng,
                                         std::size_t n, bool shared_class) {
    std::vector<double> out;
    slip_as_risk_samples(at_pitch, at_zero, pitch, rng, n, out, shared_class);
    return out;
}

double risk_expected_value(const MixtureSlipDistribution& at_pitch, const MixtureSlipDistribution& at_zero,
                           double pitch) noexcept {
    if (pitch >= 0.0) return at_pitch.mean();
    return 2.0 * at_zero.mean() - at_pitch.mean();
}

double expected_value(std::span<const double> samples) {
    if (samples.empty()) throw InputError("expected_value of an empty sample");
    // Shifted by the first sample, which keeps a constant sample exact.
    const double shift = samples.front();
    double sum = 0.0;
    for (double s : samples) sum += s - shift;
    return shift + sum / static_cast<double>(samples.size());
}

namespace {

void check_alpha(double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in [0, 1]");
}

std::size_t quantile_index(double alpha, std::size_t n) {
    // The 1e-9 guard keeps alpha*n that is integral in exact arithmetic from rounding up.
    const double k = std::ceil(alpha * static_cast<double>(n) - 1e-9) - 1.0;
    if (k <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(k), n - 1);
}

/// Mean of the samples strictly above `threshold`, summed in input order.
double mean_above(std::span<const double> samples, double threshold) {
    double sum = 0.0;
    std::size_t count = 0;
    for (double s : samples) {
        if (s > threshold) {
            sum += s;
            ++count;
        }
    }
    return count == 0 ? threshold : sum / static_cast<double>(count);
}

}  // namespace

namespace {

// Value of rank k (0-based, ascending). High ranks go through a small min-heap of
// the n - k largest values, which is much cheaper than a full selection.
double select_rank(std::span<const double> samples, std::size_t k, std::vector<double>& scratch) {
    const std::size_t n = samples.size();
    const std::size_t m = n - k;
    if (m <= 64 && m * 16 <= n) {
        scratch.assign(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(m));
        std::make_heap(scratch.begin(), scratch.end(), std::greater<>());
        for (std::size_t i = m; i < n; ++i) {
            if (samples[i] > scratch.front()) {
                std::pop_heap(scratch.begin(), scratch.end(), std::greater<>());
                scratch.back() = samples[i];
                std::push_heap(scratch.begin(), scratch.end(), std::greater<>());
            }
        }
        return scratch.front();
    }
    scratch.assign(samples.begin(), samples.end());
    std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k), scratch.end());
    return scratch[k];
}

}  // namespace

double value_at_risk(std::span<const double> samples, double alpha) {
    if (samples.empty()) throw InputError("value_at_risk of an empty sample");
    check_alpha(alpha);
    std::vector<double> scratch;
    return select_rank(samples, quantile_index(alpha, samples.size()), scratch);
}

double conditional_value_at_risk(std::span<const double> samples, double alpha) {
    if (samples.empty()) throw InputError("conditional_value_at_risk of an empty sample");
    check_alpha(alpha);
    if (alpha == 0.0) return expected_value(samples);
    return mean_above(samples, value_at_risk(samples, alpha));
}

std::vector<TailRisk> tail_risk(std::span<const double> samples, std::span<const double> alphas,
                                std::vector<double>& scratch) {
    if (samples.empty()) throw InputError("tail_risk of an empty sample");
    for (double a : alphas) check_alpha(a);
    std::vector<TailRisk> out(alphas.size());
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        out[i].var = select_rank(samples, quantile_index(alphas[i], samples.size()), scratch);
        out[i].cvar = alphas[i] == 0.0 ? expected_value(samples) : mean_above(samples, out[i].var);
    }
    return out;
}

}  // namespace terra_risk
