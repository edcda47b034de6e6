#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "terra_risk/gp.hpp"
#include "terra_risk/likelihood.hpp"
#include "terra_risk/planner.hpp"
#include "terra_risk/terrain.hpp"

namespace terra_risk {

struct ExecutionResult {
    std::vector<double> per_edge_slips; // experienced slips up to and including a failing edge
    bool success = false;
    std::optional<Cell> failure_position;  // source cell of the failing edge
    std::optional<std::size_t> failure_edge;
    double total_time = 0.0;   // seconds, valid when success
    double max_slip_pct = 0.0; // 100 * max(s_e)
};

/// Experienced slip on edge `index` of a path, stepping from `from` to `to`.
using SlipSource = std::function<double(std::size_t index, Cell from, Cell to)>;

/// Follows `path` at u_ref; aborts at the first |s_e| >= 1.
ExecutionResult execute_path(const HeightMap& heightmap, const Path& path, double u_ref, const SlipSource& slips);

/// Ground-truth execution: the slip of directed edge e is drawn from the stream
/// (instance seed, e), so every method crossing e sees the same draw.
ExecutionResult execute_path(const ProblemInstance& instance, const Path& path, double u_ref);

/// One instance x method outcome.
struct RunRecord {
    std::string dataset;
    std::string instance_id;
    std::string method;
    bool solved = false;
    bool success = false;
    double planned_cost_s = 0.0;  // valid when solved
    std::size_t path_edges = 0;
    double total_time_s = 0.0;    // valid when success
    double max_slip_pct = 0.0;    // valid when solved
    std::optional<std::size_t> failure_edge;
};

struct Moments {
    double mean = 0.0;
    double std = 0.0; // population standard deviation
    std::size_t count = 0;
};

/// Population mean/std; NaN moments for an empty sample.
Moments moments(std::span<const double> values);

struct MetricsSummary {
    std::string dataset;
    std::string method;
    std::size_t instances = 0;
    double solved_rate_pct = 0.0;
    double success_rate_pct = 0.0;
    Moments total_time_min; // over successful runs
    Moments max_slip_pct;   // over solved (executed) runs
};

MetricsSummary summarize(std::span<const RunRecord> runs, const std::string& dataset, const std::string& method);

/// Produces the likelihood map the planners see for an instance.
using LikelihoodProvider = std::function<LikelihoodMap(const ProblemInstance&)>;

struct SuiteOptions {
    RiskConfig risk;
    double u_ref = 0.1;
    Cell start{8, 8};
    Cell goal{88, 88};
    HeuristicMode heuristic = HeuristicMode::Zero;
    int threads = 1;
};

struct InstancePlans {
    std::vector<CostMap> cost_maps;        // dropped unless requested
    std::vector<std::optional<Path>> paths; // nullopt: no solution
};

/// Builds the cost maps of all methods in one pass and searches each.
InstancePlans plan_instance(const ProblemInstance& instance, const LikelihoodMap& likelihoods,
                            const SlipModelSet& models, std::span<const PlanningMethod> methods,
                            const SuiteOptions& options, bool keep_cost_maps = false);

/// Executes `path` (when present) and fills in the record for one instance x method.
RunRecord execute_plan(const ProblemInstance& instance, const PlanningMethod& method, const std::optional<Path>& path,
                       const SuiteOptions& options, ExecutionResult* execution = nullptr);

/// Called once per solved instance x method, serialized, in deterministic order.
using PathSink = std::function<void(const ProblemInstance&, const PlanningMethod&, const Path&, const ExecutionResult&)>;

/// Plans and executes every method on every instance. Records are ordered
/// instance-major, methods in the order given.
std::vector<RunRecord> evaluate_suite(std::span<const ProblemInstance> instances, const SlipModelSet& models,
                                      const LikelihoodProvider& likelihoods, std::span<const PlanningMethod> methods,
                                      const SuiteOptions& options, const PathSink& sink = {});

/// Summaries per method, in method order.
std::vector<MetricsSummary> summarize_suite(std::span<const RunRecord> runs, std::span<const PlanningMethod> methods);

/// MGP+CVaR at each alpha; the returned records carry labels "mgp+cvar@<alpha>".
std::vector<RunRecord> alpha_sweep(std::span<const ProblemInstance> instances, const SlipModelSet& models,
                                   const LikelihoodProvider& likelihoods, std::span<const double> alphas,
                                   const SuiteOptions& options);

std::string results_csv(std::span<const RunRecord> runs);
void write_results_csv(const std::filesystem::path& path, std::span<const RunRecord> runs);
void write_summary_json(const std::filesystem::path& path, std::span<const MetricsSummary> summaries);

}  // namespace terra_risk
