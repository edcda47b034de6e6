#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "terra_risk/config.hpp"
#include "terra_risk/executor.hpp"

namespace terra_risk {

// Workspace layout under the output directory:
//   <kind>/dataset.json, <kind>/instances/<id>/   gen-dataset
//   <kind>/models/                                 train
//   plans/<kind>/plans.json, plans/<kind>/<id>/    plan
//   execute/, evaluate/, sweep/                    results.csv + summary.json
// Each stage validates its inputs before writing anything.

struct StageOptions {
    bool force = false;
    std::optional<std::filesystem::path> likelihoods; // <dir>/<instance id>.f32 instead of the synthetic classifier
    bool export_cost_maps = false;
};

void run_gen_dataset(const ExperimentConfig& config, const std::filesystem::path& out, const StageOptions& stage = {});
void run_train(const ExperimentConfig& config, const std::filesystem::path& out);
void run_plan(const ExperimentConfig& config, const std::filesystem::path& out, const StageOptions& stage = {});
std::vector<RunRecord> run_execute(const ExperimentConfig& config, const std::filesystem::path& out);
std::vector<RunRecord> run_evaluate(const ExperimentConfig& config, const std::filesystem::path& out,
                                    const StageOptions& stage = {});
std::vector<RunRecord> run_sweep_alpha(const ExperimentConfig& config, const std::filesystem::path& out,
                                       const StageOptions& stage = {});

/// Likelihood source for one dataset kind: synthetic classifier or rasters on disk.
LikelihoodProvider make_likelihood_provider(const ExperimentConfig& config, DatasetKind kind,
                                            const std::optional<std::filesystem::path>& directory);

SuiteOptions suite_options(const ExperimentConfig& config);

}  // namespace terra_risk
