#pragma once

// Portable, splittable random streams.
//
// Every random quantity in the toolkit is drawn from a CounterRng whose key is
// derived from (seed, domain, ids...). Output i of a stream is the SplitMix64
// finalizer applied to key + (i+1)*golden, so a stream is fully described by
// its key and position, and results never depend on the order in which
// independent streams are consumed. Distributions are implemented here rather
// than taken from <random>, whose algorithms are implementation-defined.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace terra_risk {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix_finalize(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Hashes a seed and a list of stream identifiers into a stream key.
constexpr std::uint64_t derive_key(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) noexcept {
    std::uint64_t h = splitmix_finalize(seed + kGolden);
    for (std::uint64_t id : ids) {
        h = splitmix_finalize(h ^ splitmix_finalize(id + 0x632BE59BD9B4E019ULL));
    }
    return h;
}

/// Stream domains keep draws for different purposes statistically separate.
enum class StreamDomain : std::uint64_t {
    Heightmap = 1,
    ClassNoise = 2,
    Groups = 3,
    Instance = 4,
    Training = 5,
    Execution = 6,
    RiskSampling = 7,
    Classifier = 8,
};

class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}
    CounterRng(std::uint64_t seed, StreamDomain domain, std::initializer_list<std::uint64_t> ids = {}) noexcept
        : key_(derive_key(seed ^ (static_cast<std::uint64_t>(domain) * kGolden), ids)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return next_u64(); }

    std::uint64_t next_u64() noexcept { return splitmix_finalize(key_ + (++counter_) * kGolden); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_open_low() noexcept { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

    /// Uniform on (0, 1).
    double uniform_open() noexcept { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound) noexcept {
        if (bound <= 1) return 0;
        const std::uint64_t limit = max() - (max() % bound);
        std::uint64_t r;
        do {
            r = next_u64();
        } while (r >= limit);
        return r % bound;
    }

    /// Standard normal by the Marsaglia-Tsang ziggurat (128 layers). The layer
    /// index and the 32-bit abscissa come from disjoint bits of one draw.
    double normal() noexcept;

    double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t position() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

namespace detail {

struct ZigguratTables {
    std::uint32_t kn[128];
    double wn[128];
    double fn[128];

    ZigguratTables() noexcept {
        const double m1 = 2147483648.0;
        const double vn = 9.91256303526217e-3;
        double dn = 3.442619855899;
        double tn = dn;
        const double q = vn / std::exp(-0.5 * dn * dn);
        kn[0] = static_cast<std::uint32_t>((dn / q) * m1);
        kn[1] = 0;
        wn[0] = q / m1;
        wn[127] = dn / m1;
        fn[0] = 1.0;
        fn[127] = std::exp(-0.5 * dn * dn);
        for (int i = 126; i >= 1; --i) {
            dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
            kn[i + 1] = static_cast<std::uint32_t>((dn / tn) * m1);
            tn = dn;
            fn[i] = std::exp(-0.5 * dn * dn);
            wn[i] = dn / m1;
        }
    }
};

inline const ZigguratTables& ziggurat_tables() noexcept {
    static const ZigguratTables tables;
    return tables;
}

}  // namespace detail

inline double CounterRng::normal() noexcept {
    constexpr double r = 3.442619855899;
    const auto& t = detail::ziggurat_tables();
    for (;;) {
        const std::uint64_t bits = next_u64();
        const auto hz = static_cast<std::int32_t>(static_cast<std::uint32_t>(bits >> 32));
        const auto iz = static_cast<unsigned>(bits & 127u);
        const auto mag = static_cast<std::uint32_t>(hz < 0 ? -static_cast<std::int64_t>(hz) : hz);
        const double x = hz * t.wn[iz];
        if (mag < t.kn[iz]) return x;
        if (iz == 0) {
            double tail;
            double y;
            do {
                tail = -std::log(uniform_open_low()) / r;
                y = -std::log(uniform_open_low());
            } while (y + y < tail * tail);
            return hz > 0 ? r + tail : -r - tail;
        }
        if (t.fn[iz] + uniform() * (t.fn[iz - 1] - t.fn[iz]) < std::exp(-0.5 * x * x)) return x;
    }
}

/// Fisher-Yates shuffle driven by CounterRng (std::shuffle is not portable).
template <class RandomIt>
void portable_shuffle(RandomIt first, RandomIt last, CounterRng& rng) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
        const std::uint64_t j = rng.below(i);
        using std::swap;
        swap(first[i - 1], first[j]);
    }
}

}  // namespace terra_risk
