#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "terra_risk/grid.hpp"
#include "terra_risk/terrain.hpp"

namespace terra_risk {

/// Per-cell categorical distribution over terrain classes, stored class-major
/// (plane c holds P(c) for every cell in row-major order) like likelihood.f32.
struct LikelihoodMap {
    int width = 0;
    int height = 0;
    int num_classes = 0;
    std::vector<double> probs;

    GridShape shape() const noexcept { return {width, height}; }
    std::size_t plane_size() const noexcept { return shape().num_cells(); }
    double at(int class_id, std::size_t cell) const { return probs[static_cast<std::size_t>(class_id) * plane_size() + cell]; }
    double& at(int class_id, std::size_t cell) { return probs[static_cast<std::size_t>(class_id) * plane_size() + cell]; }

    /// Copies the distribution of one cell into `out` (resized to num_classes).
    void cell_distribution(std::size_t cell, std::vector<double>& out) const;
    /// Most likely class at a cell; ties go to the lowest class id.
    int argmax(std::size_t cell) const;
    /// Throws InputError when any cell leaves the probability simplex (tolerance 1e-6).
    void validate() const;
};

/// Numerically stable softmax of a single logit vector.
std::vector<double> softmax(std::span<const double> logits);

/// Softmax over class-major logit planes; rejects NaN/Inf.
LikelihoodMap softmax_from_logits(int width, int height, int num_classes, std::span<const double> logits);

struct SyntheticClassifierParams {
    double accuracy = 0.95;      // mass on the true class (Std/ES) or true appearance (AA)
    double smoothing = 0.0;      // box-blur radius in cells
    double mislabel_rate = 0.0;  // fraction of 8x8 blocks whose mass goes to a wrong label
    std::uint64_t seed = 0;
};

/// Error-injecting stand-in for a per-pixel segmentation network.
LikelihoodMap synthetic_classify(const ProblemInstance& instance, const SyntheticClassifierParams& params);

/// One-hot map of a class map (used to build SGP-equivalent inputs).
LikelihoodMap one_hot_likelihoods(const ClassMap& classmap, int num_classes);

/// Header-free little-endian float32 planes, class-major.
void save_likelihoods(const std::filesystem::path& path, const LikelihoodMap& map);
LikelihoodMap load_likelihoods(const std::filesystem::path& path, int width, int height, int num_classes);

}  // namespace terra_risk
