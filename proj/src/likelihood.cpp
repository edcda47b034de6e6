#include "terra_risk/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "terra_risk/error.hpp"
#include "terra_risk/raster_io.hpp"
#include "terra_risk/rng.hpp"

namespace terra_risk {

void LikelihoodMap::cell_distribution(std::size_t cell, std::vector<double>& out) const {
    out.resize(static_cast<std::size_t>(num_classes));
    for (int c = 0; c < num_classes; ++c) out[static_cast<std::size_t>(c)] = at(c, cell);
}

int LikelihoodMap::argmax(std::size_t cell) const {
    int best = 0;
    double best_p = at(0, cell);
    for (int c = 1; c < num_classes; ++c) {
        if (at(c, cell) > best_p) {
            best_p = at(c, cell);
            best = c;
        }
    }
    return best;
}

void LikelihoodMap::validate() const {
    if (width < 1 || height < 1 || num_classes < 1) throw InputError("likelihood map has empty dimensions");
    if (probs.size() != plane_size() * static_cast<std::size_t>(num_classes)) {
        throw InputError("likelihood map storage does not match its dimensions");
    }
    for (std::size_t cell = 0; cell < plane_size(); ++cell) {
        double total = 0.0;
        for (int c = 0; c < num_classes; ++c) {
            const double p = at(c, cell);
            if (!(p >= 0.0) || !std::isfinite(p)) throw InputError("likelihood map has a negative or non-finite entry");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-6) {
            throw InputError("likelihood map cell " + std::to_string(cell) + " sums to " + std::to_string(total));
        }
    }
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw InputError("softmax of an empty logit vector");
    double peak = -std::numeric_limits<double>::infinity();
    for (double a : logits) {
        if (!std::isfinite(a)) throw InputError("softmax: logits must be finite");
        peak = std::max(peak, a);
    }
    std::vector<double> out(logits.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - peak);
        total += out[i];
    }
    for (double& p : out) p /= total;
    return out;
}

LikelihoodMap softmax_from_logits(int width, int height, int num_classes, std::span<const double> logits) {
    LikelihoodMap map;
    map.width = width;
    map.height = height;
    map.num_classes = num_classes;
    if (width < 1 || height < 1 || num_classes < 1) throw InputError("softmax_from_logits: empty dimensions");
    const std::size_t plane = map.plane_size();
    if (logits.size() != plane * static_cast<std::size_t>(num_classes)) {
        throw InputError("softmax_from_logits: logit count does not match dimensions");
    }
    map.probs.resize(logits.size());
    std::vector<double> cell_logits(static_cast<std::size_t>(num_classes));
    for (std::size_t cell = 0; cell < plane; ++cell) {
        for (int c = 0; c < num_classes; ++c) cell_logits[static_cast<std::size_t>(c)] = logits[static_cast<std::size_t>(c) * plane + cell];
        const auto p = softmax(cell_logits);
        for (int c = 0; c < num_classes; ++c) map.at(c, cell) = p[static_cast<std::size_t>(c)];
    }
    return map;
}

namespace {

constexpr int kMislabelBlock = 8;

/// Separable box blur of one plane with a clamped window (average over in-bounds cells).
void box_blur(std::span<double> plane, int width, int height, int radius) {
    std::vector<double> tmp(plane.size());
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double sum = 0.0;
            int count = 0;
            for (int k = std::max(0, x - radius); k <= std::min(width - 1, x + radius); ++k) {
                sum += plane[static_cast<std::size_t>(y * width + k)];
                ++count;
            }
            tmp[static_cast<std::size_t>(y * width + x)] = sum / count;
        }
    }
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double sum = 0.0;
            int count = 0;
            for (int k = std::max(0, y - radius); k <= std::min(height - 1, y + radius); ++k) {
                sum += tmp[static_cast<std::size_t>(k * width + x)];
                ++count;
            }
            plane[static_cast<std::size_t>(y * width + x)] = sum / count;
        }
    }
}

void renormalize_cells(LikelihoodMap& map) {
    const std::size_t plane = map.plane_size();
    for (std::size_t cell = 0; cell < plane; ++cell) {
        double total = 0.0;
        for (int c = 0; c < map.num_classes; ++c) total += map.at(c, cell);
        for (int c = 0; c < map.num_classes; ++c) map.at(c, cell) /= total;
    }
}

}  // namespace

LikelihoodMap synthetic_classify(const ProblemInstance& instance, const SyntheticClassifierParams& params) {
    const int k = instance.num_classes;
    if (k < 2) throw ParameterError("synthetic_classify needs at least two classes");
    if (!(params.accuracy > 1.0 / k && params.accuracy <= 1.0)) {
        throw ParameterError("classifier accuracy must lie in (1/|C|, 1]");
    }
    if (!(params.smoothing >= 0.0)) throw ParameterError("classifier smoothing must be >= 0");
    if (!(params.mislabel_rate >= 0.0 && params.mislabel_rate <= 1.0)) {
        throw ParameterError("classifier mislabel_rate must lie in [0, 1]");
    }
    if (static_cast<int>(instance.appearance_key.size()) != k) {
        throw InputError("instance " + instance.id + ": appearance keys do not cover every class");
    }

    const GridShape shape = instance.shape();
    const bool by_appearance = instance.kind == DatasetKind::AA;

    // Labels the classifier "sees": class ids for Std/ES, appearance keys for AA.
    std::vector<int> label_of_class(static_cast<std::size_t>(k));
    int num_labels = 0;
    for (int c = 0; c < k; ++c) {
        label_of_class[static_cast<std::size_t>(c)] = by_appearance ? instance.appearance_key[static_cast<std::size_t>(c)] : c;
        num_labels = std::max(num_labels, label_of_class[static_cast<std::size_t>(c)] + 1);
    }
    std::vector<int> label_size(static_cast<std::size_t>(num_labels), 0);
    for (int c = 0; c < k; ++c) ++label_size[static_cast<std::size_t>(label_of_class[static_cast<std::size_t>(c)])];

    // Block-wise confusions.
    const int blocks_x = (shape.width + kMislabelBlock - 1) / kMislabelBlock;
    const int blocks_y = (shape.height + kMislabelBlock - 1) / kMislabelBlock;
    std::vector<int> block_shift(static_cast<std::size_t>(blocks_x * blocks_y), 0);
    if (params.mislabel_rate > 0.0 && num_labels > 1) {
        CounterRng rng(params.seed, StreamDomain::Classifier, {instance.seed});
        for (int& shift : block_shift) {
            if (rng.uniform() < params.mislabel_rate) shift = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(num_labels - 1)));
        }
    }

    LikelihoodMap map;
    map.width = shape.width;
    map.height = shape.height;
    map.num_classes = k;
    map.probs.assign(shape.num_cells() * static_cast<std::size_t>(k), 0.0);

    for (std::size_t cell = 0; cell < shape.num_cells(); ++cell) {
        const Cell c = shape.cell(cell);
        int seen = label_of_class[static_cast<std::size_t>(instance.classmap.class_id[cell])];
        const int shift = block_shift[static_cast<std::size_t>((c.y / kMislabelBlock) * blocks_x + c.x / kMislabelBlock)];
        seen = (seen + shift) % num_labels;
        const int on_label = label_size[static_cast<std::size_t>(seen)];
        const double rest = (1.0 - params.accuracy) / (k - on_label);
        for (int cls = 0; cls < k; ++cls) {
            map.at(cls, cell) = label_of_class[static_cast<std::size_t>(cls)] == seen ? params.accuracy / on_label : rest;
        }
    }

    const int radius = static_cast<int>(std::lround(params.smoothing));
    if (radius > 0) {
        for (int cls = 0; cls < k; ++cls) {
            box_blur(std::span<double>(map.probs).subspan(static_cast<std::size_t>(cls) * map.plane_size(), map.plane_size()),
                     shape.width, shape.height, radius);
        }
        renormalize_cells(map);
    }
    return map;
}

LikelihoodMap one_hot_likelihoods(const ClassMap& classmap, int num_classes) {
    LikelihoodMap map;
    map.width = classmap.width;
    map.height = classmap.height;
    map.num_classes = num_classes;
    map.probs.assign(map.plane_size() * static_cast<std::size_t>(num_classes), 0.0);
    for (std::size_t cell = 0; cell < map.plane_size(); ++cell) {
        const int c = classmap.class_id[cell];
        if (c < 0 || c >= num_classes) throw InputError("class map entry outside [0, num_classes)");
        map.at(c, cell) = 1.0;
    }
    return map;
}

void save_likelihoods(const std::filesystem::path& path, const LikelihoodMap& map) {
    write_f32(path, std::span<const double>(map.probs));
}

LikelihoodMap load_likelihoods(const std::filesystem::path& path, int width, int height, int num_classes) {
    LikelihoodMap map;
    map.width = width;
    map.height = height;
    map.num_classes = num_classes;
    const auto raw = read_f32(path, map.plane_size() * static_cast<std::size_t>(num_classes));
    map.probs.assign(raw.begin(), raw.end());
    for (std::size_t cell = 0; cell < map.plane_size(); ++cell) {
        double total = 0.0;
        for (int c = 0; c < num_classes; ++c) {
            const double p = map.at(c, cell);
            if (!std::isfinite(p) || p < 0.0) throw DataError(path.string() + ": negative or non-finite likelihood");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-3) {
            throw DataError(path.string() + ": cell " + std::to_string(cell) + " sums to " + std::to_string(total));
        }
        // float32 storage leaves ~1e-7 slack; only visibly off rows are rescaled.
        if (std::abs(total - 1.0) > 1e-6) {
            for (int c = 0; c < num_classes; ++c) map.at(c, cell) /= total;
        }
    }
    return map;
}

}  // namespace terra_risk
