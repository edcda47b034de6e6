#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "terra_risk/gp.hpp"
#include "terra_risk/grid.hpp"
#include "terra_risk/likelihood.hpp"
#include "terra_risk/risk.hpp"
#include "terra_risk/terrain.hpp"

namespace terra_risk {

enum class SlipModelKind { SGP, MGP };
enum class RiskMetric { EV, VaR, CVaR };
enum class HeuristicMode { Zero, EuclidOverUmax };

/// A traversability model paired with a risk statistic, e.g. "mgp+cvar" at alpha 0.99.
struct PlanningMethod {
    SlipModelKind model = SlipModelKind::MGP;
    RiskMetric metric = RiskMetric::CVaR;
    double alpha = 0.99;

    /// "sgp+ev", "mgp+cvar", ...; alpha is not part of the name.
    std::string name() const;
    /// name() plus "@<alpha>" for VaR/CVaR.
    std::string label() const;
    /// Parses "sgp+ev", "mgp+var", ...; throws ConfigError.
    static PlanningMethod parse(std::string_view text, double alpha);
};

HeuristicMode parse_heuristic(std::string_view text);
std::string_view to_string(HeuristicMode mode);

/// Rover speed for risk slip `slip` on an edge of pitch `pitch`:
/// (1 - s) u_ref ascending, u_ref / (1 + s) descending. Returns 0 when the edge is
/// impassable (s >= 1 ascending, s <= -1 descending).
double risk_velocity(double slip, double pitch, double u_ref);

/// Directed 8-neighbor travel costs in seconds; +inf marks impassable or off-map edges.
struct CostMap {
    int width = 0;
    int height = 0;
    std::vector<double> cost; // cell index * 8 + direction

    GridShape shape() const noexcept { return {width, height}; }
    double at(Cell from, int dir) const { return cost[shape().index(from) * kNumDirections + static_cast<std::size_t>(dir)]; }
};

struct CostModelOptions {
    RiskConfig risk;     // alpha unused here; each PlanningMethod carries its own
    double u_ref = 0.1;  // m/s
};

/// Evaluates risk-aware travel times for several methods at once, sharing GP
/// predictions and Monte-Carlo samples between methods of the same model kind.
/// Samples for edge e are always drawn from the stream (risk seed, e), so SGP and
/// MGP see the same random numbers and both endpoint evaluations of an edge too.
class CostModel {
public:
    CostModel(const HeightMap& heightmap, const LikelihoodMap& likelihoods, const SlipModelSet& models,
              CostModelOptions options);

    /// Travel time of the directed edge from `from` along `dir` for each method.
    std::vector<double> edge_costs(Cell from, int dir, std::span<const PlanningMethod> methods) const;
    double edge_cost(Cell from, int dir, const PlanningMethod& method) const;

    /// Full cost maps, one per method; rows are split across `threads` workers.
    std::vector<CostMap> build(std::span<const PlanningMethod> methods, int threads = 1) const;

private:
    const HeightMap& heightmap_;
    const LikelihoodMap& likelihoods_;
    const SlipModelSet& models_;
    CostModelOptions options_;
    std::vector<GPPrediction> at_zero_;
};

struct PlanningGraph {
    const HeightMap* heightmap = nullptr;
    CostMap costs;
    double u_max = 0.0; // largest realized edge velocity length/cost

    PlanningGraph(const HeightMap& hm, CostMap cost_map);
    GridShape shape() const noexcept { return costs.shape(); }
};

struct Path {
    std::vector<Cell> vertices;
    std::vector<double> edge_costs;
    double total_cost = 0.0;
};

/// Minimum-cost path; nullopt when the goal is unreachable through finite-cost edges.
std::optional<Path> astar(const PlanningGraph& graph, Cell start, Cell goal, HeuristicMode mode = HeuristicMode::Zero);

/// Throws GraphError unless consecutive vertices are in-bounds 8-neighbors from start to goal.
void validate_path(const Path& path, const GridShape& shape, Cell start, Cell goal);

/// cost.f32: 8 float32 planes (one per direction), row-major within each plane.
void save_cost_map(const std::filesystem::path& path, const CostMap& costs);
CostMap load_cost_map(const std::filesystem::path& path, int width, int height);

void save_path_json(const std::filesystem::path& file, const Path& path, const std::string& instance_id,
                    const std::string& method);
Path load_path_json(const std::filesystem::path& file);

}  // namespace terra_risk
