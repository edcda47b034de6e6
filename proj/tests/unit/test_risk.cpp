#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "terra_risk/error.hpp"
#include "terra_risk/risk.hpp"

using namespace terra_risk;

namespace {

constexpr double kPi = 3.14159265358979323846;

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi); }

double normal_quantile_oracle(double p) {
    if (p <= 0.0) return -INFINITY;
    if (p >= 1.0) return INFINITY;
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

MixtureSlipDistribution single(double mean, double variance, int id = 0) {
    return MixtureSlipDistribution{{{id, 1.0, mean, variance}}};
}

std::vector<double> gaussian_samples(double mu, double sigma, std::size_t n, std::uint64_t seed) {
    CounterRng rng(seed);
    const auto mix = single(mu, sigma * sigma);
    return slip_as_risk_samples(mix, mix, 0.1, rng, n);
}

}  // namespace

TEST_CASE("mixture moments") {
    MixtureSlipDistribution m{{{0, 0.5, 0.0, 1.0}, {1, 0.5, 1.0, 1.0}}};
    CHECK(m.mean() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m.variance() == doctest::Approx(1.25).epsilon(1e-15));
    m.validate();
    MixtureSlipDistribution bad{{{0, 0.6, 0.0, 1.0}}};
    CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("mixture at an edge drops tiny weights") {
    std::vector<GPPrediction> preds{{0.1, 0.01}, {0.2, 0.02}, {0.3, 0.03}};
    const std::vector<double> probs{0.5, 1e-13, 0.499};
    const auto mix = mixture_from_predictions(probs, preds);
    REQUIRE(mix.components.size() == 2);
    double total = 0;
    for (const auto& c : mix.components) total += c.weight;
    CHECK(std::abs(total - 1.0) <= 1e-9);
    CHECK(mix.components[1].class_id == 2);

    const std::vector<double> one_hot{0, 1, 0};
    const auto reduced = mixture_from_predictions(one_hot, preds);
    REQUIRE(reduced.components.size() == 1);
    CHECK(reduced.mean() == 0.2);
    CHECK(reduced.variance() == 0.02);

    const std::vector<double> four{0.25, 0.25, 0.25, 0.25};
    CHECK_THROWS_AS(mixture_from_predictions(four, preds), ConfigError);
}

TEST_CASE("slip as risk sampling") {
    SUBCASE("degenerate descending") {
        const auto at_zero = single(0.1, 1e-18);
        const auto at_pitch = single(-0.3, 1e-18);
        CounterRng rng(3);
        for (bool shared : {true, false}) {
            for (double s : slip_as_risk_samples(at_pitch, at_zero, -0.2, rng, 100, shared)) {
                CHECK(s == doctest::Approx(0.5).epsilon(1e-6));
            }
        }
    }
    SUBCASE("ascending mean") {
        MixtureSlipDistribution m{{{0, 0.3, 0.2, 0.01}, {1, 0.7, 0.5, 0.04}}};
        CounterRng rng(5);
        const auto s = slip_as_risk_samples(m, m, 0.3, rng, 200000);
        const double se = std::sqrt(m.variance() / 200000.0);
        CHECK(std::abs(expected_value(s) - m.mean()) < 4 * se);
    }
    SUBCASE("descending moments under both class modes") {
        MixtureSlipDistribution z{{{0, 0.4, 0.05, 0.01}, {1, 0.6, 0.1, 0.02}}};
        MixtureSlipDistribution p{{{0, 0.4, -0.2, 0.02}, {1, 0.6, -0.4, 0.03}}};
        const double ev = risk_expected_value(p, z, -0.3);
        CHECK(ev == doctest::Approx(2 * z.mean() - p.mean()));
        for (bool shared : {true, false}) {
            CounterRng rng(7);
            const auto s = slip_as_risk_samples(p, z, -0.3, rng, 200000, shared);
            double var = 0;
            const double mean = expected_value(s);
            for (double v : s) var += (v - mean) * (v - mean);
            var /= static_cast<double>(s.size());
            CHECK(std::abs(mean - ev) < 4 * std::sqrt(var / 200000.0));
        }
    }
    SUBCASE("class mismatch") {
        CounterRng rng(1);
        CHECK_THROWS_AS(slip_as_risk_samples(single(0, 1, 0), single(0, 1, 1), -0.1, rng, 10), InputError);
        CHECK_THROWS_AS(slip_as_risk_samples(single(0, 1), single(0, 1), 0.1, rng, 0), ParameterError);
    }
    SUBCASE("determinism") {
        MixtureSlipDistribution m{{{0, 0.3, 0.2, 0.01}, {1, 0.7, 0.5, 0.04}}};
        CounterRng a(11, StreamDomain::RiskSampling, {42});
        CounterRng b(11, StreamDomain::RiskSampling, {42});
        CHECK(slip_as_risk_samples(m, m, -0.1, a, 1000) == slip_as_risk_samples(m, m, -0.1, b, 1000));
    }
}

TEST_CASE("normal quantile") {
    for (double p : {1e-12, 1e-6, 0.001, 0.02, 0.025, 0.3, 0.5, 0.77, 0.975, 0.99, 0.999999}) {
        CHECK(std::abs(normal_quantile(p) - normal_quantile_oracle(p)) <= 1e-8 * std::max(1.0, std::abs(normal_quantile_oracle(p))));
    }
    CHECK(normal_quantile(0.5) == 0.0);
    CHECK(normal_quantile(0.2) == doctest::Approx(-normal_quantile(0.8)).epsilon(1e-12));
}

TEST_CASE("shared-class samples are stratified by class and quantile") {
    MixtureSlipDistribution m{{{0, 0.3, 0.2, 1e-18}, {1, 0.7, 0.5, 1e-18}}};
    CounterRng rng(4);
    const auto s = slip_as_risk_samples(m, m, 0.2, rng, 1000);
    std::size_t low = 0;
    for (double v : s) low += std::abs(v - 0.2) < 1e-6;
    CHECK(low == 300);

    // One draw per stratum: the k-th largest of n standard normals sits in stratum n - 1 - k.
    CounterRng g(9);
    const auto z = slip_as_risk_samples(single(0.0, 1.0), single(0.0, 1.0), 0.0, g, 200);
    auto sorted = z;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        CHECK(sorted[k] >= normal_quantile_oracle(static_cast<double>(k) / 200.0) - 1e-8);
        CHECK(sorted[k] <= normal_quantile_oracle(static_cast<double>(k + 1) / 200.0) + 1e-8);
    }
}

TEST_CASE("value at risk on explicit lists") {
    std::vector<double> s(100);
    std::iota(s.begin(), s.end(), 1.0);
    std::reverse(s.begin(), s.end());
    CHECK(value_at_risk(s, 0.9) == 90.0);
    CHECK(value_at_risk(s, 1.0) == 100.0);
    CHECK(value_at_risk(s, 0.0) == 1.0);
    CHECK(value_at_risk(s, 0.99) == 99.0);
    CHECK(value_at_risk(s, 0.995) == 100.0);
    // CVaR at 0.9 averages 91..100.
    CHECK(conditional_value_at_risk(s, 0.9) == 95.5);
    CHECK(conditional_value_at_risk(s, 1.0) == 100.0);
    CHECK(conditional_value_at_risk(s, 0.0) == 50.5);

    const std::vector<double> flat(50, 0.3);
    for (double a : {0.0, 0.5, 0.99, 1.0}) {
        CHECK(value_at_risk(flat, a) == 0.3);
        CHECK(conditional_value_at_risk(flat, a) == 0.3);
    }
    CHECK(expected_value(flat) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK_THROWS_AS(value_at_risk(s, 1.5), ParameterError);
    CHECK_THROWS_AS(conditional_value_at_risk(s, -0.1), ParameterError);
    CHECK_THROWS_AS(value_at_risk(std::vector<double>{}, 0.5), InputError);
    CHECK_THROWS_AS(expected_value(std::vector<double>{}), InputError);
}

TEST_CASE("quantile agrees with a sort oracle") {
    CounterRng rng(21);
    for (std::size_t n : {1u, 7u, 100u, 1000u, 2000u, 5000u}) {
        std::vector<double> s(n);
        for (double& v : s) v = rng.normal();
        auto sorted = s;
        std::sort(sorted.begin(), sorted.end());
        for (double a : {0.0, 0.3, 0.6, 0.9, 0.95, 0.99, 0.999, 1.0}) {
            const auto k = static_cast<std::size_t>(std::clamp(std::ceil(a * static_cast<double>(n) - 1e-9) - 1.0, 0.0, static_cast<double>(n - 1)));
            CHECK(value_at_risk(s, a) == sorted[k]);
        }
    }
}

TEST_CASE("tail risk matches single-level estimators") {
    CounterRng rng(8);
    std::vector<double> s(2000);
    for (double& v : s) v = rng.normal() * 0.2 + 0.1;
    const std::vector<double> alphas{0.0, 0.6, 0.9, 0.99, 1.0};
    std::vector<double> scratch;
    const auto t = tail_risk(s, alphas, scratch);
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        CHECK(t[i].var == value_at_risk(s, alphas[i]));
        CHECK(t[i].cvar == conditional_value_at_risk(s, alphas[i]));
        CHECK(t[i].cvar >= t[i].var);
    }
    CHECK(t[0].cvar == expected_value(s));
}

TEST_CASE("Gaussian CVaR against the closed form") {
    const auto s = gaussian_samples(0.0, 1.0, 1000000, 99);
    CHECK(std::abs(conditional_value_at_risk(s, 0.99) - 2.665) < 0.03);
    const auto t = gaussian_samples(0.2, 0.5, 100000, 100);
    for (double a : {0.6, 0.9, 0.99}) {
        const double exact = 0.2 + 0.5 * normal_pdf(normal_quantile_oracle(a)) / (1.0 - a);
        CHECK(std::abs(conditional_value_at_risk(t, a) - exact) <= 0.01 * std::abs(exact));
    }
}

TEST_CASE("risk config validation") {
    RiskConfig c;
    c.validate();
    c.mc_samples = 999;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c.alpha = 0.9;
    c.validate();
    c.alpha = 1.1;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c.alpha = 0.5;
    c.mc_samples = 0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
}
