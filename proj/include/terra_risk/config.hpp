#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "terra_risk/gp.hpp"
#include "terra_risk/grid.hpp"
#include "terra_risk/likelihood.hpp"
#include "terra_risk/planner.hpp"
#include "terra_risk/risk.hpp"
#include "terra_risk/terrain.hpp"
#include "terra_risk/training.hpp"

namespace terra_risk {

struct ClassifierConfig {
    double accuracy_std = 0.95;
    double accuracy_es = 0.90;
    double accuracy_aa = 1.0; // on appearance
    double smoothing = 0.0;
    double mislabel_rate = 0.0;

    double accuracy(DatasetKind kind) const noexcept;
};

/// Everything a pipeline run depends on. Loaded from JSON; unknown keys are errors.
struct ExperimentConfig {
    std::vector<DatasetKind> kinds{DatasetKind::Std, DatasetKind::ES, DatasetKind::AA};
    Split split = Split::Test;
    int groups = 10;
    int instances_per_group = 2;
    int width = 96;
    int height = 96;
    HeightmapParams terrain;
    double feature_scale = 24.0;
    std::optional<std::string> slip_classes; // path to a class table; built-in when unset

    TrainingOptions training;
    ClassifierConfig classifier;

    RiskConfig risk; // risk.seed is derived from `seed`
    std::vector<std::string> methods{"sgp+ev", "sgp+var", "sgp+cvar", "mgp+ev", "mgp+var", "mgp+cvar"};
    std::vector<double> sweep_alphas{0.0, 0.6, 0.9, 0.99};

    HeuristicMode heuristic = HeuristicMode::Zero;
    double u_ref = 0.1;
    Cell start{8, 8};
    Cell goal{88, 88};

    std::uint64_t seed = 0;
    int threads = 1;
    std::string output_dir = "terra-risk-out";

    /// Throws ConfigError on any invalid value.
    void validate() const;

    DatasetOptions dataset_options() const;
    std::vector<PlanningMethod> planning_methods() const;
    /// Catalog for `kind`, from `slip_classes` when set.
    ClassCatalog catalog(DatasetKind kind) const;
    SyntheticClassifierParams classifier_params(DatasetKind kind) const;
    /// Risk settings with the Monte-Carlo seed derived from `seed`.
    RiskConfig risk_config() const;
};

ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);

std::vector<std::string> split_list(std::string_view text);
std::vector<double> parse_alpha_list(std::string_view text);

}  // namespace terra_risk
