#include "terra_risk/terrain.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "builtin_data.hpp"
#include "terra_risk/error.hpp"

namespace terra_risk {

std::string_view to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::Std: return "std";
        case DatasetKind::ES: return "es";
        case DatasetKind::AA: return "aa";
    }
    return "?";
}

std::string_view to_string(Split split) {
    switch (split) {
        case Split::Train: return "train";
        case Split::Valid: return "valid";
        case Split::Test: return "test";
    }
    return "?";
}

DatasetKind parse_dataset_kind(std::string_view text) {
    if (text == "std") return DatasetKind::Std;
    if (text == "es") return DatasetKind::ES;
    if (text == "aa") return DatasetKind::AA;
    throw ParameterError("unknown dataset kind '" + std::string(text) + "' (expected std, es or aa)");
}

Split parse_split(std::string_view text) {
    if (text == "train") return Split::Train;
    if (text == "valid") return Split::Valid;
    if (text == "test") return Split::Test;
    throw ParameterError("unknown split '" + std::string(text) + "' (expected train, valid or test)");
}

// ---------------------------------------------------------------------------
// Ground-truth slip

double SlipGroundTruth::mean(double pitch) const noexcept {
    return params.offset + params.amplitude * std::tanh(params.steepness * pitch);
}

double SlipGroundTruth::slope(double pitch) const noexcept {
    const double t = std::tanh(params.steepness * pitch);
    return params.amplitude * params.steepness * (1.0 - t * t);
}

double SlipGroundTruth::noise_at(double pitch) const noexcept {
    if (!noise_scales_with_gradient) return noise_sigma;
    const double max_slope = std::abs(params.amplitude * params.steepness);
    if (max_slope == 0.0) return noise_sigma;
    return noise_sigma * (1.0 + gradient_noise_gain * std::abs(slope(pitch)) / max_slope);
}

SlipGroundTruth ClassCatalog::ground_truth(int class_id) const {
    if (class_id < 0 || class_id >= num_classes()) {
        throw ParameterError("class id " + std::to_string(class_id) + " outside catalog");
    }
    SlipGroundTruth gt;
    gt.class_id = class_id;
    gt.params = classes[static_cast<std::size_t>(class_id)].params;
    gt.noise_sigma = noise.sigma_base;
    gt.noise_scales_with_gradient = noise.scales_with_gradient;
    gt.gradient_noise_gain = noise.gradient_gain;
    return gt;
}

namespace {

void check_slip_params(const SlipParams& p, const std::string& name) {
    if (!(p.amplitude >= 0.0) || !(p.steepness > 0.0)) {
        throw ParameterError("class '" + name + "': amplitude must be >= 0 and steepness > 0");
    }
    // The mean curve must stay within (-1, 1.5] over the pitch envelope.
    const double lo = p.offset - p.amplitude * std::tanh(p.steepness * kMaxPitchRad);
    const double hi = p.offset + p.amplitude * std::tanh(p.steepness * kMaxPitchRad);
    if (!(lo > -1.0) || !(hi <= 1.5)) {
        throw ParameterError("class '" + name + "': mean slip leaves (-1, 1.5] within +-45 deg");
    }
}

}  // namespace

ClassCatalog parse_catalog(std::string_view json_text, DatasetKind kind) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("slip class table: ") + e.what());
    }
    const std::string key(to_string(kind));
    if (!doc.contains(key)) throw ConfigError("slip class table has no entry for '" + key + "'");
    const auto& entry = doc.at(key);

    ClassCatalog catalog;
    catalog.kind = kind;
    try {
        catalog.group_size = entry.at("group_size").get<int>();
        const auto& noise = entry.at("noise");
        catalog.noise.sigma_base = noise.at("sigma_base").get<double>();
        catalog.noise.scales_with_gradient = noise.at("scales_with_gradient").get<bool>();
        catalog.noise.gradient_gain = noise.at("gradient_gain").get<double>();

        const auto* class_list = &entry;
        if (entry.contains("classes_from")) class_list = &doc.at(entry.at("classes_from").get<std::string>());
        int id = 0;
        for (const auto& c : class_list->at("classes")) {
            SlipClass sc;
            sc.id = id++;
            sc.name = c.at("name").get<std::string>();
            sc.params = {c.at("offset").get<double>(), c.at("amplitude").get<double>(),
                         c.at("steepness").get<double>()};
            sc.appearance_key = c.at("appearance").get<int>();
            check_slip_params(sc.params, sc.name);
            catalog.classes.push_back(std::move(sc));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("slip class table '" + key + "': " + e.what());
    }
    if (catalog.noise.sigma_base < 0.0) throw ConfigError("slip class table: negative sigma_base");
    if (catalog.group_size < 1 || catalog.group_size > catalog.num_classes()) {
        throw ConfigError("slip class table: group_size outside [1, #classes]");
    }
    return catalog;
}

const ClassCatalog& builtin_catalog(DatasetKind kind) {
    static const std::array<ClassCatalog, 3> catalogs{
        parse_catalog(detail::kBuiltinSlipClassesJson, DatasetKind::Std),
        parse_catalog(detail::kBuiltinSlipClassesJson, DatasetKind::ES),
        parse_catalog(detail::kBuiltinSlipClassesJson, DatasetKind::AA),
    };
    return catalogs[static_cast<std::size_t>(kind)];
}

void EnvironmentGroup::validate() const {
    if (members.empty()) throw ParameterError("environment group has no members");
    if (members.size() != occupancy.size()) throw ParameterError("environment group: members/occupancy size mismatch");
    std::set<int> unique(members.begin(), members.end());
    if (unique.size() != members.size()) throw ParameterError("environment group: duplicate members");
    double total = 0.0;
    for (double o : occupancy) {
        if (!(o > 0.0)) throw ParameterError("environment group: occupancy entries must be > 0");
        if (o >= 1.0 && members.size() > 1) throw ParameterError("environment group: degenerate occupancy");
        total += o;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ParameterError("environment group: occupancy must sum to 1");
}

const SlipGroundTruth& ProblemInstance::slip_model(int class_id) const {
    for (const auto& m : slip_models) {
        if (m.class_id == class_id) return m;
    }
    throw InputError("instance " + id + " has no slip model for class " + std::to_string(class_id));
}

// ---------------------------------------------------------------------------
// Heightmap: diamond-square on a (2^k + 1) lattice, bilinearly resampled.

namespace {

std::vector<double> diamond_square(int size, double roughness, CounterRng& rng) {
    const auto n = static_cast<std::size_t>(size);
    std::vector<double> z(n * n, 0.0);
    auto at = [&](int x, int y) -> double& { return z[static_cast<std::size_t>(y) * n + static_cast<std::size_t>(x)]; };

    double scale = 1.0;
    at(0, 0) = rng.uniform(-scale, scale);
    at(size - 1, 0) = rng.uniform(-scale, scale);
    at(0, size - 1) = rng.uniform(-scale, scale);
    at(size - 1, size - 1) = rng.uniform(-scale, scale);

    for (int step = size - 1; step > 1; step /= 2) {
        const int half = step / 2;
        scale *= roughness;
        // diamond
        for (int y = half; y < size; y += step) {
            for (int x = half; x < size; x += step) {
                const double avg =
                    (at(x - half, y - half) + at(x + half, y - half) + at(x - half, y + half) + at(x + half, y + half)) / 4.0;
                at(x, y) = avg + rng.uniform(-scale, scale);
            }
        }
        // square
        for (int y = 0; y < size; y += half) {
            for (int x = (y / half) % 2 == 0 ? half : 0; x < size; x += step) {
                double sum = 0.0;
                int count = 0;
                if (x - half >= 0) { sum += at(x - half, y); ++count; }
                if (x + half < size) { sum += at(x + half, y); ++count; }
                if (y - half >= 0) { sum += at(x, y - half); ++count; }
                if (y + half < size) { sum += at(x, y + half); ++count; }
                at(x, y) = sum / count + rng.uniform(-scale, scale);
            }
        }
    }
    return z;
}

double sample_bilinear(const std::vector<double>& z, int size, double fx, double fy) {
    const int x0 = std::min(static_cast<int>(fx), size - 2);
    const int y0 = std::min(static_cast<int>(fy), size - 2);
    const double tx = fx - x0;
    const double ty = fy - y0;
    const auto n = static_cast<std::size_t>(size);
    auto v = [&](int x, int y) { return z[static_cast<std::size_t>(y) * n + static_cast<std::size_t>(x)]; };
    const double top = v(x0, y0) * (1.0 - tx) + v(x0 + 1, y0) * tx;
    const double bottom = v(x0, y0 + 1) * (1.0 - tx) + v(x0 + 1, y0 + 1) * tx;
    return top * (1.0 - ty) + bottom * ty;
}

template <class Elevation>
double max_abs_slope(const Elevation& elev, int width, int height, double resolution) {
    const GridShape shape{width, height};
    double worst = 0.0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const Cell c{x, y};
            // Directions 0..3 cover every undirected edge once.
            for (int d = 0; d < 4; ++d) {
                const Cell nb = shape.neighbor(c, d);
                if (!shape.contains(nb)) continue;
                const double rise = std::abs(static_cast<double>(elev[shape.index(nb)]) - static_cast<double>(elev[shape.index(c)]));
                worst = std::max(worst, rise / horizontal_run(d, resolution));
            }
        }
    }
    return worst;
}

}  // namespace

HeightMap generate_heightmap(std::uint64_t seed, int width, int height, double roughness) {
    HeightmapParams params;
    params.roughness = roughness;
    return generate_heightmap(seed, width, height, params);
}

HeightMap generate_heightmap(std::uint64_t seed, int width, int height, const HeightmapParams& params) {
    if (width < 2 || height < 2) throw ParameterError("heightmap dimensions must be >= 2");
    if (!(params.roughness > 0.0 && params.roughness <= 1.0)) throw ParameterError("roughness must lie in (0, 1]");
    if (!(params.max_pitch_deg > 0.0 && params.max_pitch_deg <= 45.0)) {
        throw ParameterError("max_pitch_deg must lie in (0, 45]");
    }
    if (!(params.resolution > 0.0)) throw ParameterError("resolution must be > 0");

    int lattice = 2;
    while (lattice + 1 < std::max(width, height)) lattice *= 2;
    const int size = lattice + 1;

    CounterRng rng(seed, StreamDomain::Heightmap);
    const std::vector<double> raw = diamond_square(size, params.roughness, rng);

    std::vector<double> resampled(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) {
        const double fy = static_cast<double>(y) * (size - 1) / (height - 1);
        for (int x = 0; x < width; ++x) {
            const double fx = static_cast<double>(x) * (size - 1) / (width - 1);
            resampled[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] =
                sample_bilinear(raw, size, fx, fy);
        }
    }
    const double lowest = *std::min_element(resampled.begin(), resampled.end());
    for (double& v : resampled) v -= lowest;

    const double slope = max_abs_slope(resampled, width, height, params.resolution);
    // Slight margin so float rounding cannot push an edge past the cap.
    const double target = std::tan(params.max_pitch_deg * kDegToRad) * (1.0 - 1e-6);
    const double gain = slope > 0.0 ? target / slope : 0.0;

    HeightMap hm;
    hm.width = width;
    hm.height = height;
    hm.resolution = params.resolution;
    hm.elevation.resize(resampled.size());
    for (std::size_t i = 0; i < resampled.size(); ++i) hm.elevation[i] = static_cast<float>(resampled[i] * gain);
    return hm;
}

// ---------------------------------------------------------------------------
// Class map: fractal Perlin noise thresholded at occupancy quantiles.

namespace {

class PerlinNoise {
public:
    explicit PerlinNoise(CounterRng& rng) {
        std::array<int, 256> p{};
        std::iota(p.begin(), p.end(), 0);
        portable_shuffle(p.begin(), p.end(), rng);
        for (int i = 0; i < 512; ++i) perm_[static_cast<std::size_t>(i)] = p[static_cast<std::size_t>(i & 255)];
    }

    double operator()(double x, double y) const {
        const double fx = std::floor(x);
        const double fy = std::floor(y);
        const int xi = static_cast<int>(fx) & 255;
        const int yi = static_cast<int>(fy) & 255;
        const double xf = x - fx;
        const double yf = y - fy;
        const double u = fade(xf);
        const double v = fade(yf);
        const int aa = perm_[static_cast<std::size_t>(perm_[static_cast<std::size_t>(xi)] + yi)];
        const int ab = perm_[static_cast<std::size_t>(perm_[static_cast<std::size_t>(xi)] + yi + 1)];
        const int ba = perm_[static_cast<std::size_t>(perm_[static_cast<std::size_t>(xi + 1)] + yi)];
        const int bb = perm_[static_cast<std::size_t>(perm_[static_cast<std::size_t>(xi + 1)] + yi + 1)];
        const double x1 = lerp(grad(aa, xf, yf), grad(ba, xf - 1.0, yf), u);
        const double x2 = lerp(grad(ab, xf, yf - 1.0), grad(bb, xf - 1.0, yf - 1.0), u);
        return lerp(x1, x2, v);
    }

private:
    static double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }
    static double lerp(double a, double b, double t) { return a + t * (b - a); }
    static double grad(int hash, double x, double y) {
        switch (hash & 7) {
            case 0: return x + y;
            case 1: return -x + y;
            case 2: return x - y;
            case 3: return -x - y;
            case 4: return x;
            case 5: return -x;
            case 6: return y;
            default: return -y;
        }
    }

    std::array<int, 512> perm_{};
};

}  // namespace

ClassMap generate_classmap(std::uint64_t seed, const EnvironmentGroup& group, int width, int height,
                           double feature_scale) {
    group.validate();
    if (width < 1 || height < 1) throw ParameterError("class map dimensions must be >= 1");
    if (!(feature_scale > 0.0)) throw ParameterError("feature_scale must be > 0");

    ClassMap map;
    map.width = width;
    map.height = height;
    const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    map.class_id.assign(n, static_cast<std::uint16_t>(group.members.front()));
    if (group.members.size() == 1) return map;

    CounterRng rng(seed, StreamDomain::ClassNoise);
    const PerlinNoise noise(rng);
    const double ox = rng.uniform(0.0, 256.0);
    const double oy = rng.uniform(0.0, 256.0);

    std::vector<double> value(n);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double sum = 0.0;
            double amp = 1.0;
            double freq = 1.0 / feature_scale;
            for (int octave = 0; octave < 3; ++octave) {
                sum += amp * noise(ox + x * freq, oy + y * freq);
                amp *= 0.5;
                freq *= 2.0;
            }
            value[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)] = sum;
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });

    double cumulative = 0.0;
    std::size_t begin = 0;
    for (std::size_t m = 0; m < group.members.size(); ++m) {
        cumulative += group.occupancy[m];
        const std::size_t end =
            m + 1 == group.members.size() ? n : std::min(n, static_cast<std::size_t>(std::llround(cumulative * n)));
        for (std::size_t k = begin; k < end; ++k) map.class_id[order[k]] = static_cast<std::uint16_t>(group.members[m]);
        begin = std::max(begin, end);
    }
    return map;
}

// ---------------------------------------------------------------------------
// Edge geometry and slip measurement

double pitch_at_edge(const HeightMap& heightmap, Cell from, Cell to) {
    const auto dir = direction_between(from, to);
    if (!dir || !heightmap.shape().contains(from) || !heightmap.shape().contains(to)) {
        throw GraphError("pitch_at_edge: cells are not in-bounds 8-neighbors");
    }
    const double rise = heightmap.at(to) - heightmap.at(from);
    return std::atan2(rise, horizontal_run(*dir, heightmap.resolution));
}

double edge_length(const HeightMap& heightmap, Cell from, Cell to) {
    const auto dir = direction_between(from, to);
    if (!dir || !heightmap.shape().contains(from) || !heightmap.shape().contains(to)) {
        throw GraphError("edge_length: cells are not in-bounds 8-neighbors");
    }
    const double run = horizontal_run(*dir, heightmap.resolution);
    const double rise = heightmap.at(to) - heightmap.at(from);
    return std::sqrt(run * run + rise * rise);
}

double sample_slip(const ProblemInstance& instance, Cell from, Cell to, CounterRng& rng) {
    const double pitch = pitch_at_edge(instance.heightmap, from, to);
    const SlipGroundTruth& model = instance.slip_model(instance.classmap.at(from));
    return model.mean(pitch) + model.noise_at(pitch) * rng.normal();
}

// ---------------------------------------------------------------------------
// Datasets

int DatasetOptions::instances_per_group(Split split) const noexcept {
    switch (split) {
        case Split::Train: return train_instances_per_group;
        case Split::Valid: return valid_instances_per_group;
        case Split::Test: return test_instances_per_group;
    }
    return 0;
}

std::vector<EnvironmentGroup> make_environment_groups(const ClassCatalog& catalog, Split split, std::uint64_t seed,
                                                      int count) {
    CounterRng rng(seed, StreamDomain::Groups, {static_cast<std::uint64_t>(split)});
    std::vector<EnvironmentGroup> groups;
    std::set<std::vector<int>> seen;
    const int size = catalog.group_size;

    int attempts = 0;
    while (static_cast<int>(groups.size()) < count) {
        if (++attempts > 10000) throw ParameterError("cannot draw enough distinct environment groups");
        EnvironmentGroup g;
        if (catalog.kind == DatasetKind::AA) {
            // One class per appearance key so every color shows up exactly once.
            std::map<int, std::vector<int>> by_key;
            for (const auto& c : catalog.classes) by_key[c.appearance_key].push_back(c.id);
            for (const auto& [key, ids] : by_key) g.members.push_back(ids[rng.below(ids.size())]);
            portable_shuffle(g.members.begin(), g.members.end(), rng);
        } else {
            std::vector<int> all(static_cast<std::size_t>(catalog.num_classes()));
            std::iota(all.begin(), all.end(), 0);
            portable_shuffle(all.begin(), all.end(), rng);
            g.members.assign(all.begin(), all.begin() + size);
        }
        double total = 0.0;
        for (std::size_t i = 0; i < g.members.size(); ++i) {
            g.occupancy.push_back(rng.uniform(0.2, 1.0));
            total += g.occupancy.back();
        }
        for (double& o : g.occupancy) o /= total;
        // Force an exact partition of 1 on the last entry.
        g.occupancy.back() = 1.0 - std::accumulate(g.occupancy.begin(), g.occupancy.end() - 1, 0.0);

        std::vector<int> key = g.members;
        std::sort(key.begin(), key.end());
        if (!seen.insert(key).second) continue;
        g.validate();
        groups.push_back(std::move(g));
    }
    return groups;
}

ProblemInstance make_instance(const ClassCatalog& catalog, const EnvironmentGroup& group, Split split,
                              std::uint64_t dataset_seed, int group_index, int instance_index,
                              const DatasetOptions& options) {
    ProblemInstance inst;
    inst.kind = catalog.kind;
    inst.seed = derive_key(dataset_seed, {static_cast<std::uint64_t>(StreamDomain::Instance),
                                          static_cast<std::uint64_t>(catalog.kind), static_cast<std::uint64_t>(split),
                                          static_cast<std::uint64_t>(group_index),
                                          static_cast<std::uint64_t>(instance_index)});
    char id[64];
    std::snprintf(id, sizeof id, "%s-%s-g%02d-i%03d", std::string(to_string(catalog.kind)).c_str(),
                  std::string(to_string(split)).c_str(), group_index, instance_index);
    inst.id = id;
    inst.group = group;
    inst.num_classes = catalog.num_classes();
    inst.heightmap = generate_heightmap(derive_key(inst.seed, {1}), options.width, options.height, options.terrain);
    inst.classmap = generate_classmap(derive_key(inst.seed, {2}), group, options.width, options.height,
                                      options.feature_scale);
    for (int member : group.members) inst.slip_models.push_back(catalog.ground_truth(member));
    for (const auto& c : catalog.classes) inst.appearance_key.push_back(c.appearance_key);
    return inst;
}

std::vector<ProblemInstance> make_dataset(DatasetKind kind, Split split, std::uint64_t seed,
                                          const DatasetOptions& options) {
    return make_dataset(builtin_catalog(kind), split, seed, options);
}

std::vector<ProblemInstance> make_dataset(const ClassCatalog& catalog, Split split, std::uint64_t seed,
                                          const DatasetOptions& options) {
    if (options.groups_per_split < 1) throw ParameterError("groups_per_split must be >= 1");
    const int per_group = options.instances_per_group(split);
    if (per_group < 0) throw ParameterError("instances per group must be >= 0");
    const auto groups = make_environment_groups(catalog, split, seed, options.groups_per_split);
    std::vector<ProblemInstance> out;
    out.reserve(static_cast<std::size_t>(per_group) * groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (int i = 0; i < per_group; ++i) {
            out.push_back(make_instance(catalog, groups[g], split, seed, static_cast<int>(g), i, options));
        }
    }
    return out;
}

}  // namespace terra_risk
