#include "terra_risk/training.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <optional>
#include <thread>

#include "terra_risk/error.hpp"

namespace terra_risk {

TrainingSet simulate_training_set(const SlipGroundTruth& truth, int samples, double pitch_limit_rad, CounterRng& rng) {
    if (samples < 1) throw ParameterError("training set needs at least one sample");
    if (!(pitch_limit_rad > 0.0) || pitch_limit_rad > kMaxPitchRad) {
        throw ParameterError("training pitch limit must lie in (0, 45] deg");
    }
    TrainingSet set;
    set.class_id = truth.class_id;
    for (int i = 0; i < samples; ++i) {
        const double pitch = rng.uniform(-pitch_limit_rad, pitch_limit_rad);
        set.pitches.push_back(pitch);
        set.slips.push_back(truth.mean(pitch) + truth.noise_at(pitch) * rng.normal());
    }
    return set;
}

std::vector<GPModel> train_slip_models(const ClassCatalog& catalog, std::uint64_t seed, const TrainingOptions& options,
                                       int threads) {
    const auto n = static_cast<std::size_t>(catalog.num_classes());
    std::vector<std::optional<GPModel>> fitted(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t c = next++; c < n; c = next++) {
            try {
                CounterRng rng(seed, StreamDomain::Training, {static_cast<std::uint64_t>(catalog.kind), c});
                const auto data = simulate_training_set(catalog.ground_truth(static_cast<int>(c)),
                                                        options.samples_per_class,
                                                        options.pitch_limit_deg * kDegToRad, rng);
                fitted[c] = GPModel::fit(data, options.grid);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), 1, std::max<std::size_t>(n, 1));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::vector<GPModel> out;
    for (auto& m : fitted) out.push_back(std::move(*m));
    return out;
}

}  // namespace terra_risk
