#pragma once

#include <cstdint>
#include <vector>

#include "terra_risk/gp.hpp"
#include "terra_risk/rng.hpp"
#include "terra_risk/terrain.hpp"

namespace terra_risk {

struct TrainingOptions {
    int samples_per_class = 50;
    double pitch_limit_deg = 30.0; // pitches drawn uniformly from [-limit, limit]
    HyperGrid grid = HyperGrid::default_grid();
};

/// Noisy slip measurements of one class, drawn the same way execution draws slips.
TrainingSet simulate_training_set(const SlipGroundTruth& truth, int samples, double pitch_limit_rad, CounterRng& rng);

/// One fitted GP per catalog class. Class c uses the stream (seed, kind, c), so the
/// result does not depend on `threads`.
std::vector<GPModel> train_slip_models(const ClassCatalog& catalog, std::uint64_t seed, const TrainingOptions& options,
                                       int threads = 1);

}  // namespace terra_risk
