#include "terra_risk/planner.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <queue>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "terra_risk/error.hpp"
#include "terra_risk/raster_io.hpp"

namespace terra_risk {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string PlanningMethod::name() const {
    std::string out = model == SlipModelKind::SGP ? "sgp" : "mgp";
    switch (metric) {
        case RiskMetric::EV: out += "+ev"; break;
        case RiskMetric::VaR: out += "+var"; break;
        case RiskMetric::CVaR: out += "+cvar"; break;
    }
    return out;
}

std::string PlanningMethod::label() const {
    if (metric == RiskMetric::EV) return name();
    char buf[32];
    std::snprintf(buf, sizeof buf, "@%.2f", alpha);
    if (std::strtod(buf + 1, nullptr) != alpha) std::snprintf(buf, sizeof buf, "@%.9g", alpha);
    return name() + buf;
}

PlanningMethod PlanningMethod::parse(std::string_view text, double alpha) {
    const auto plus = text.find('+');
    if (plus == std::string_view::npos) throw ConfigError("method '" + std::string(text) + "' is not <model>+<metric>");
    const auto model = text.substr(0, plus);
    const auto metric = text.substr(plus + 1);
    PlanningMethod m;
    m.alpha = alpha;
    if (model == "sgp") m.model = SlipModelKind::SGP;
    else if (model == "mgp") m.model = SlipModelKind::MGP;
    else throw ConfigError("unknown slip model '" + std::string(model) + "' (expected sgp or mgp)");
    if (metric == "ev") m.metric = RiskMetric::EV;
    else if (metric == "var") m.metric = RiskMetric::VaR;
    else if (metric == "cvar") m.metric = RiskMetric::CVaR;
    else throw ConfigError("unknown risk metric '" + std::string(metric) + "' (expected ev, var or cvar)");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
    return m;
}

HeuristicMode parse_heuristic(std::string_view text) {
    if (text == "zero") return HeuristicMode::Zero;
    if (text == "euclid" || text == "euclid_over_umax") return HeuristicMode::EuclidOverUmax;
    throw ConfigError("unknown heuristic '" + std::string(text) + "' (expected zero or euclid)");
}

std::string_view to_string(HeuristicMode mode) {
    return mode == HeuristicMode::Zero ? "zero" : "euclid_over_umax";
}

double risk_velocity(double slip, double pitch, double u_ref) {
    if (!(u_ref > 0.0)) throw ParameterError("u_ref must be > 0");
    if (pitch >= 0.0) {
        if (!(slip < 1.0)) return 0.0;
        return (1.0 - slip) * u_ref;
    }
    if (!(slip > -1.0)) return 0.0;
    return u_ref / (1.0 + slip);
}

// ---------------------------------------------------------------------------
// Cost model

CostModel::CostModel(const HeightMap& heightmap, const LikelihoodMap& likelihoods, const SlipModelSet& models,
                     CostModelOptions options)
    : heightmap_(heightmap), likelihoods_(likelihoods), models_(models), options_(options) {
    if (heightmap.shape() != likelihoods.shape()) throw InputError("likelihood map does not match the heightmap");
    if (!(options_.u_ref > 0.0)) throw ParameterError("u_ref must be > 0");
    if (options_.risk.mc_samples < 1) throw ParameterError("mc_samples must be >= 1");
    at_zero_.resize(static_cast<std::size_t>(likelihoods.num_classes));
    for (int c = 0; c < likelihoods.num_classes; ++c) {
        if (const GPModel* m = models.find(c)) at_zero_[static_cast<std::size_t>(c)] = m->predict(0.0);
    }
}

namespace {

struct SideStats {
    double ev = 0.0;
    std::vector<TailRisk> tails; // aligned with the family's alpha list
};

struct Family {
    bool used = false;
    std::vector<double> alphas; // MC levels requested by this family's methods
};

bool needs_samples(const PlanningMethod& m) {
    if (m.metric == RiskMetric::EV) return false;
    // CVaR at alpha = 0 is the expectation, taken in closed form.
    return !(m.metric == RiskMetric::CVaR && m.alpha == 0.0);
}

std::size_t family_index(SlipModelKind k) { return k == SlipModelKind::SGP ? 0 : 1; }

}  // namespace

std::vector<double> CostModel::edge_costs(Cell from, int dir, std::span<const PlanningMethod> methods) const {
    const GridShape shape = heightmap_.shape();
    std::vector<double> result(methods.size(), kInf);
    const Cell to = shape.neighbor(from, dir);
    if (!shape.contains(from) || !shape.contains(to)) return result;

    const double pitch = pitch_at_edge(heightmap_, from, to);
    const double length = edge_length(heightmap_, from, to);
    const int num_classes = likelihoods_.num_classes;

    std::array<Family, 2> families;
    for (const auto& m : methods) {
        auto& f = families[family_index(m.model)];
        f.used = true;
        if (needs_samples(m) && std::find(f.alphas.begin(), f.alphas.end(), m.alpha) == f.alphas.end()) {
            f.alphas.push_back(m.alpha);
        }
    }

    std::vector<GPPrediction> at_pitch(static_cast<std::size_t>(num_classes));
    std::vector<char> predicted(static_cast<std::size_t>(num_classes), 0);
    std::vector<double> samples;
    std::vector<double> scratch;
    const Cell ends[2] = {from, to};

    std::array<std::array<SideStats, 2>, 2> stats; // [family][side]
    for (std::size_t fi = 0; fi < 2; ++fi) {
        if (!families[fi].used) continue;
        const bool sgp = fi == 0;
        std::array<std::vector<double>, 2> weights;
        for (int side = 0; side < 2; ++side) {
            const std::size_t cell = shape.index(ends[side]);
            if (sgp) {
                weights[side].assign(static_cast<std::size_t>(num_classes), 0.0);
                weights[side][static_cast<std::size_t>(likelihoods_.argmax(cell))] = 1.0;
            } else {
                likelihoods_.cell_distribution(cell, weights[side]);
            }
            if (side == 1 && weights[1] == weights[0]) {
                stats[fi][1] = stats[fi][0];
                continue;
            }
            for (int c = 0; c < num_classes; ++c) {
                if (weights[side][static_cast<std::size_t>(c)] < kMixtureWeightFloor || predicted[static_cast<std::size_t>(c)]) continue;
                at_pitch[static_cast<std::size_t>(c)] = models_.at(c).predict(pitch);
                predicted[static_cast<std::size_t>(c)] = 1;
            }
            const auto mix_pitch = mixture_from_predictions(weights[side], at_pitch);
            const auto mix_zero = mixture_from_predictions(weights[side], at_zero_);
            auto& st = stats[fi][side];
            st.ev = risk_expected_value(mix_pitch, mix_zero, pitch);
            if (!families[fi].alphas.empty()) {
                CounterRng rng(options_.risk.seed, StreamDomain::RiskSampling, {shape.edge_id(from, dir)});
                slip_as_risk_samples(mix_pitch, mix_zero, pitch, rng, options_.risk.mc_samples, samples,
                                     options_.risk.shared_class_draw);
                st.tails = tail_risk(samples, families[fi].alphas, scratch);
            }
        }
    }

    for (std::size_t i = 0; i < methods.size(); ++i) {
        const auto& m = methods[i];
        const std::size_t fi = family_index(m.model);
        double time_sum = 0.0;
        for (int side = 0; side < 2; ++side) {
            const auto& st = stats[fi][side];
            double slip = st.ev;
            if (needs_samples(m)) {
                const auto& alphas = families[fi].alphas;
                const auto pos = static_cast<std::size_t>(std::find(alphas.begin(), alphas.end(), m.alpha) - alphas.begin());
                slip = m.metric == RiskMetric::VaR ? st.tails[pos].var : st.tails[pos].cvar;
            }
            const double u = risk_velocity(slip, pitch, options_.u_ref);
            time_sum += u > 0.0 ? length / u : kInf;
        }
        result[i] = 0.5 * time_sum;
    }
    return result;
}

double CostModel::edge_cost(Cell from, int dir, const PlanningMethod& method) const {
    return edge_costs(from, dir, std::span<const PlanningMethod>(&method, 1)).front();
}

std::vector<CostMap> CostModel::build(std::span<const PlanningMethod> methods, int threads) const {
    const GridShape shape = heightmap_.shape();
    std::vector<CostMap> maps(methods.size());
    for (auto& m : maps) {
        m.width = shape.width;
        m.height = shape.height;
        m.cost.assign(shape.num_cells() * kNumDirections, kInf);
    }
    // Each row is written by exactly one worker, so the result does not depend on scheduling.
    std::atomic<int> next_row{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(std::max(threads, 1)));
    auto worker = [&](std::size_t slot) {
        try {
            for (int y = next_row++; y < shape.height; y = next_row++) {
                for (int x = 0; x < shape.width; ++x) {
                    const Cell from{x, y};
                    const std::size_t cell = shape.index(from);
                    for (int dir = 0; dir < kNumDirections; ++dir) {
                        if (!shape.contains(shape.neighbor(from, dir))) continue;
                        const auto costs = edge_costs(from, dir, methods);
                        for (std::size_t i = 0; i < methods.size(); ++i) {
                            maps[i].cost[cell * kNumDirections + static_cast<std::size_t>(dir)] = costs[i];
                        }
                    }
                }
            }
        } catch (...) {
            errors[slot] = std::current_exception();
        }
    };
    if (errors.size() == 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < errors.size(); ++t) pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return maps;
}

// ---------------------------------------------------------------------------
// Search

PlanningGraph::PlanningGraph(const HeightMap& hm, CostMap cost_map) : heightmap(&hm), costs(std::move(cost_map)) {
    if (hm.shape() != costs.shape()) throw InputError("cost map does not match the heightmap");
    const GridShape shape = costs.shape();
    for (std::size_t cell = 0; cell < shape.num_cells(); ++cell) {
        const Cell from = shape.cell(cell);
        for (int dir = 0; dir < kNumDirections; ++dir) {
            const double c = costs.cost[cell * kNumDirections + static_cast<std::size_t>(dir)];
            const Cell to = shape.neighbor(from, dir);
            if (!std::isfinite(c) || !shape.contains(to)) continue;
            if (!(c > 0.0)) throw InputError("edge costs must be strictly positive");
            u_max = std::max(u_max, edge_length(hm, from, to) / c);
        }
    }
}

namespace {

double straight_line(const HeightMap& hm, Cell a, Cell b) {
    const double dx = (a.x - b.x) * hm.resolution;
    const double dy = (a.y - b.y) * hm.resolution;
    const double dz = hm.at(a) - hm.at(b);
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace

std::optional<Path> astar(const PlanningGraph& graph, Cell start, Cell goal, HeuristicMode mode) {
    const GridShape shape = graph.shape();
    if (!shape.contains(start) || !shape.contains(goal)) throw GraphError("astar: start or goal outside the map");

    const bool informed = mode == HeuristicMode::EuclidOverUmax && graph.u_max > 0.0;
    // Shrunk slightly so round-off cannot make the heuristic overestimate.
    const double h_scale = informed ? (1.0 - 1e-9) / graph.u_max : 0.0;
    auto heuristic = [&](Cell c) { return informed ? straight_line(*graph.heightmap, c, goal) * h_scale : 0.0; };

    const std::size_t n = shape.num_cells();
    std::vector<double> g(n, kInf);
    std::vector<std::size_t> parent(n, n);

    // (f, h, vertex, g); g only identifies stale entries.
    using Entry = std::tuple<double, double, std::size_t, double>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    const std::size_t s = shape.index(start);
    const std::size_t t = shape.index(goal);
    g[s] = 0.0;
    open.emplace(heuristic(start), heuristic(start), s, 0.0);

    while (!open.empty()) {
        const auto [f, h, v, gv] = open.top();
        open.pop();
        if (gv > g[v]) continue;
        if (v == t) break;
        const Cell cv = shape.cell(v);
        for (int dir = 0; dir < kNumDirections; ++dir) {
            const Cell cw = shape.neighbor(cv, dir);
            if (!shape.contains(cw)) continue;
            const double c = graph.costs.cost[v * kNumDirections + static_cast<std::size_t>(dir)];
            if (!std::isfinite(c)) continue;
            const std::size_t w = shape.index(cw);
            const double candidate = g[v] + c;
            if (candidate < g[w]) {
                g[w] = candidate;
                parent[w] = v;
                const double hw = heuristic(cw);
                open.emplace(candidate + hw, hw, w, candidate);
            }
        }
    }
    if (!std::isfinite(g[t])) return std::nullopt;

    Path path;
    for (std::size_t v = t; v != n; v = parent[v]) {
        path.vertices.push_back(shape.cell(v));
        if (v == s) break;
    }
    std::reverse(path.vertices.begin(), path.vertices.end());
    for (std::size_t i = 0; i + 1 < path.vertices.size(); ++i) {
        const int dir = *direction_between(path.vertices[i], path.vertices[i + 1]);
        path.edge_costs.push_back(graph.costs.at(path.vertices[i], dir));
    }
    path.total_cost = g[t];
    return path;
}

void validate_path(const Path& path, const GridShape& shape, Cell start, Cell goal) {
    if (path.vertices.empty()) throw GraphError("path is empty");
    if (!(path.vertices.front() == start) || !(path.vertices.back() == goal)) {
        throw GraphError("path does not run from start to goal");
    }
    for (const Cell& c : path.vertices) {
        if (!shape.contains(c)) throw GraphError("path leaves the map");
    }
    for (std::size_t i = 0; i + 1 < path.vertices.size(); ++i) {
        if (!direction_between(path.vertices[i], path.vertices[i + 1])) throw GraphError("path has non-adjacent vertices");
    }
}

// ---------------------------------------------------------------------------
// Export

void save_cost_map(const std::filesystem::path& path, const CostMap& costs) {
    const std::size_t plane = costs.shape().num_cells();
    std::vector<float> planes(plane * kNumDirections);
    for (std::size_t cell = 0; cell < plane; ++cell) {
        for (int d = 0; d < kNumDirections; ++d) {
            planes[static_cast<std::size_t>(d) * plane + cell] = static_cast<float>(costs.cost[cell * kNumDirections + static_cast<std::size_t>(d)]);
        }
    }
    write_f32(path, std::span<const float>(planes));
}

CostMap load_cost_map(const std::filesystem::path& path, int width, int height) {
    CostMap costs;
    costs.width = width;
    costs.height = height;
    const std::size_t plane = costs.shape().num_cells();
    const auto planes = read_f32(path, plane * kNumDirections);
    costs.cost.resize(plane * kNumDirections);
    for (std::size_t cell = 0; cell < plane; ++cell) {
        for (int d = 0; d < kNumDirections; ++d) {
            costs.cost[cell * kNumDirections + static_cast<std::size_t>(d)] = planes[static_cast<std::size_t>(d) * plane + cell];
        }
    }
    return costs;
}

void save_path_json(const std::filesystem::path& file, const Path& path, const std::string& instance_id,
                    const std::string& method) {
    nlohmann::json j;
    j["instance"] = instance_id;
    j["method"] = method;
    j["total_cost_s"] = path.total_cost;
    auto& verts = j["vertices"] = nlohmann::json::array();
    for (const Cell& c : path.vertices) verts.push_back({c.x, c.y});
    j["edge_costs_s"] = path.edge_costs;
    write_text_atomic(file, j.dump(2) + "\n");
}

Path load_path_json(const std::filesystem::path& file) {
    try {
        const auto j = nlohmann::json::parse(read_text(file));
        Path path;
        for (const auto& v : j.at("vertices")) path.vertices.push_back({v.at(0).get<int>(), v.at(1).get<int>()});
        path.edge_costs = j.at("edge_costs_s").get<std::vector<double>>();
        path.total_cost = j.at("total_cost_s").get<double>();
        return path;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed path file " + file.string() + ": " + e.what());
    }
}

}  // namespace terra_risk
