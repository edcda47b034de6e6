#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "terra_risk/grid.hpp"
#include "terra_risk/rng.hpp"

namespace terra_risk {

enum class DatasetKind { Std, ES, AA };
enum class Split { Train, Valid, Test };

std::string_view to_string(DatasetKind kind);
std::string_view to_string(Split split);
DatasetKind parse_dataset_kind(std::string_view text);
Split parse_split(std::string_view text);

inline constexpr double kDegToRad = 0.017453292519943295;
inline constexpr double kMaxPitchRad = 45.0 * kDegToRad;

struct HeightMap {
    int width = 0;
    int height = 0;
    double resolution = 1.0;      // meters per cell
    std::vector<float> elevation; // meters, row-major

    GridShape shape() const noexcept { return {width, height}; }
    double at(Cell c) const { return elevation[shape().index(c)]; }
};

struct ClassMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> class_id; // row-major

    GridShape shape() const noexcept { return {width, height}; }
    int at(Cell c) const { return class_id[shape().index(c)]; }
};

/// Parameters of the ground-truth mean slip curve f(phi) = offset + amplitude * tanh(steepness * phi).
struct SlipParams {
    double offset = 0.0;     // s0, dimensionless
    double amplitude = 0.0;  // dimensionless
    double steepness = 1.0;  // 1/rad
    friend bool operator==(const SlipParams&, const SlipParams&) = default;
};

/// Measurement noise model shared by all classes of a dataset kind.
struct NoiseModel {
    double sigma_base = 0.05;
    bool scales_with_gradient = false;
    double gradient_gain = 0.0; // k in sigma(phi) = sigma_base * (1 + k |f'(phi)| / max|f'|)
};

struct SlipGroundTruth {
    int class_id = 0;
    SlipParams params;
    double noise_sigma = 0.0;
    bool noise_scales_with_gradient = false;
    double gradient_noise_gain = 0.0;

    double mean(double pitch) const noexcept;
    double slope(double pitch) const noexcept;
    /// Standard deviation of the additive measurement noise at `pitch`.
    double noise_at(double pitch) const noexcept;
};

struct SlipClass {
    int id = 0;
    std::string name;
    SlipParams params;
    int appearance_key = 0;
};

/// Terrain-class universe of one dataset kind (checked in as data/slip_classes.json).
struct ClassCatalog {
    DatasetKind kind = DatasetKind::Std;
    std::vector<SlipClass> classes;
    NoiseModel noise;
    int group_size = 4;

    int num_classes() const noexcept { return static_cast<int>(classes.size()); }
    SlipGroundTruth ground_truth(int class_id) const;
};

/// Catalog for `kind` parsed from the built-in table.
const ClassCatalog& builtin_catalog(DatasetKind kind);
/// Catalog for `kind` parsed from a JSON document with the layout of data/slip_classes.json.
ClassCatalog parse_catalog(std::string_view json_text, DatasetKind kind);

struct EnvironmentGroup {
    std::vector<int> members;
    std::vector<double> occupancy;

    /// Throws ParameterError unless members are distinct and occupancy is a positive partition of 1.
    void validate() const;
};

struct ProblemInstance {
    std::string id;
    DatasetKind kind = DatasetKind::Std;
    HeightMap heightmap;
    ClassMap classmap;
    EnvironmentGroup group;
    std::vector<SlipGroundTruth> slip_models; // one per group member
    std::vector<int> appearance_key;          // indexed by class id over the whole catalog
    int num_classes = 0;
    std::uint64_t seed = 0;

    GridShape shape() const noexcept { return heightmap.shape(); }
    const SlipGroundTruth& slip_model(int class_id) const;
};

struct HeightmapParams {
    double roughness = 0.5;      // amplitude decay per diamond-square level, (0, 1]
    double max_pitch_deg = 45.0; // elevation is scaled so the steepest edge has this pitch
    double resolution = 1.0;
};

HeightMap generate_heightmap(std::uint64_t seed, int width, int height, double roughness);
HeightMap generate_heightmap(std::uint64_t seed, int width, int height, const HeightmapParams& params);

ClassMap generate_classmap(std::uint64_t seed, const EnvironmentGroup& group, int width, int height,
                           double feature_scale);

/// Pitch (rad) of the step from `from` to its 8-neighbor `to`; positive when ascending.
double pitch_at_edge(const HeightMap& heightmap, Cell from, Cell to);

/// 3-D Euclidean length (m) of the step from `from` to its 8-neighbor `to`.
double edge_length(const HeightMap& heightmap, Cell from, Cell to);

/// Draws s = f_c(phi_e) + noise using the ground-truth class of the source cell.
double sample_slip(const ProblemInstance& instance, Cell from, Cell to, CounterRng& rng);

struct DatasetOptions {
    int groups_per_split = 10;
    int train_instances_per_group = 100;
    int valid_instances_per_group = 50;
    int test_instances_per_group = 10;
    int width = 96;
    int height = 96;
    HeightmapParams terrain;
    double feature_scale = 24.0; // Perlin wavelength in cells

    int instances_per_group(Split split) const noexcept;
};

std::vector<EnvironmentGroup> make_environment_groups(const ClassCatalog& catalog, Split split, std::uint64_t seed,
                                                      int count);

std::vector<ProblemInstance> make_dataset(DatasetKind kind, Split split, std::uint64_t seed,
                                          const DatasetOptions& options = {});
std::vector<ProblemInstance> make_dataset(const ClassCatalog& catalog, Split split, std::uint64_t seed,
                                          const DatasetOptions& options);

/// Builds one instance of environment group `group_index`; make_dataset is a loop over this.
ProblemInstance make_instance(const ClassCatalog& catalog, const EnvironmentGroup& group, Split split,
                              std::uint64_t dataset_seed, int group_index, int instance_index,
                              const DatasetOptions& options);

}  // namespace terra_risk
