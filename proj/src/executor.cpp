#include "terra_risk/executor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <thread>

#include <json.hpp>

#include "terra_risk/error.hpp"
#include "terra_risk/raster_io.hpp"

namespace terra_risk {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

ExecutionResult execute_path(const HeightMap& heightmap, const Path& path, double u_ref, const SlipSource& slips) {
    if (!(u_ref > 0.0)) throw ParameterError("u_ref must be > 0");
    if (path.vertices.empty()) throw InputError("cannot execute an empty path");
    const GridShape shape = heightmap.shape();
    for (std::size_t i = 0; i < path.vertices.size(); ++i) {
        if (!shape.contains(path.vertices[i])) throw InputError("path leaves the map");
        if (i > 0 && !direction_between(path.vertices[i - 1], path.vertices[i])) {
            throw InputError("path has non-adjacent vertices");
        }
    }

    ExecutionResult r;
    r.success = true;
    double max_slip = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < path.vertices.size(); ++i) {
        const Cell from = path.vertices[i];
        const Cell to = path.vertices[i + 1];
        const double s = slips(i, from, to);
        r.per_edge_slips.push_back(s);
        max_slip = std::max(max_slip, s);
        if (!(std::abs(s) < 1.0)) {
            r.success = false;
            r.failure_position = from;
            r.failure_edge = i;
            break;
        }
        const double u = risk_velocity(s, pitch_at_edge(heightmap, from, to), u_ref);
        r.total_time += edge_length(heightmap, from, to) / u;
    }
    r.max_slip_pct = r.per_edge_slips.empty() ? 0.0 : 100.0 * max_slip;
    if (!r.success) r.total_time = kNaN;
    return r;
}

ExecutionResult execute_path(const ProblemInstance& instance, const Path& path, double u_ref) {
    const GridShape shape = instance.shape();
    return execute_path(instance.heightmap, path, u_ref, [&](std::size_t, Cell from, Cell to) {
        CounterRng rng(instance.seed, StreamDomain::Execution, {shape.edge_id(from, *direction_between(from, to))});
        return sample_slip(instance, from, to, rng);
    });
}

Moments moments(std::span<const double> values) {
    Moments m;
    m.count = values.size();
    if (values.empty()) {
        m.mean = m.std = kNaN;
        return m;
    }
    double sum = 0.0;
    for (double v : values) sum += v;
    m.mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(values.size()));
    return m;
}

MetricsSummary summarize(std::span<const RunRecord> runs, const std::string& dataset, const std::string& method) {
    MetricsSummary s;
    s.dataset = dataset;
    s.method = method;
    std::size_t solved = 0;
    std::size_t success = 0;
    std::vector<double> times;
    std::vector<double> slips;
    for (const auto& r : runs) {
        if (r.dataset != dataset || r.method != method) continue;
        ++s.instances;
        if (!r.solved) continue;
        ++solved;
        slips.push_back(r.max_slip_pct);
        if (!r.success) continue;
        ++success;
        times.push_back(r.total_time_s / 60.0);
    }
    if (s.instances > 0) {
        s.solved_rate_pct = 100.0 * static_cast<double>(solved) / static_cast<double>(s.instances);
        s.success_rate_pct = 100.0 * static_cast<double>(success) / static_cast<double>(s.instances);
    }
    s.total_time_min = moments(times);
    s.max_slip_pct = moments(slips);
    return s;
}

InstancePlans plan_instance(const ProblemInstance& instance, const LikelihoodMap& likelihoods,
                            const SlipModelSet& models, std::span<const PlanningMethod> methods,
                            const SuiteOptions& options, bool keep_cost_maps) {
    const CostModel model(instance.heightmap, likelihoods, models, CostModelOptions{options.risk, options.u_ref});
    auto maps = model.build(methods);
    InstancePlans out;
    for (auto& map : maps) {
        const PlanningGraph graph(instance.heightmap, keep_cost_maps ? map : std::move(map));
        auto path = astar(graph, options.start, options.goal, options.heuristic);
        if (path) validate_path(*path, instance.shape(), options.start, options.goal);
        out.paths.push_back(std::move(path));
    }
    if (keep_cost_maps) out.cost_maps = std::move(maps);
    return out;
}

RunRecord execute_plan(const ProblemInstance& instance, const PlanningMethod& method, const std::optional<Path>& path,
                       const SuiteOptions& options, ExecutionResult* execution) {
    RunRecord rec;
    rec.dataset = std::string(to_string(instance.kind));
    rec.instance_id = instance.id;
    rec.method = method.label();
    rec.planned_cost_s = rec.total_time_s = rec.max_slip_pct = kNaN;
    if (!path) return rec;
    ExecutionResult exec = execute_path(instance, *path, options.u_ref);
    rec.solved = true;
    rec.success = exec.success;
    rec.planned_cost_s = path->total_cost;
    rec.path_edges = path->vertices.size() - 1;
    rec.max_slip_pct = exec.max_slip_pct;
    rec.failure_edge = exec.failure_edge;
    if (exec.success) rec.total_time_s = exec.total_time;
    if (execution) *execution = std::move(exec);
    return rec;
}

namespace {

struct InstanceRuns {
    std::vector<RunRecord> records;
    std::vector<std::optional<Path>> paths;
    std::vector<ExecutionResult> executions;
};

InstanceRuns run_instance(const ProblemInstance& instance, const SlipModelSet& models,
                          const LikelihoodProvider& likelihoods, std::span<const PlanningMethod> methods,
                          const SuiteOptions& options) {
    InstanceRuns out;
    out.paths = plan_instance(instance, likelihoods(instance), models, methods, options).paths;
    out.executions.resize(methods.size());
    for (std::size_t m = 0; m < methods.size(); ++m) {
        out.records.push_back(execute_plan(instance, methods[m], out.paths[m], options, &out.executions[m]));
    }
    return out;
}

}  // namespace

std::vector<RunRecord> evaluate_suite(std::span<const ProblemInstance> instances, const SlipModelSet& models,
                                      const LikelihoodProvider& likelihoods, std::span<const PlanningMethod> methods,
                                      const SuiteOptions& options, const PathSink& sink) {
    if (methods.empty()) throw ConfigError("no planning methods given");
    std::vector<InstanceRuns> results(instances.size());
    std::vector<std::exception_ptr> errors(instances.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < instances.size(); i = next++) {
            try {
                results[i] = run_instance(instances[i], models, likelihoods, methods, options);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(options.threads, 1)), 1,
                                                        std::max<std::size_t>(instances.size(), 1));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::vector<RunRecord> records;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        for (std::size_t m = 0; m < methods.size(); ++m) {
            if (sink && results[i].paths[m]) sink(instances[i], methods[m], *results[i].paths[m], results[i].executions[m]);
            records.push_back(std::move(results[i].records[m]));
        }
    }
    return records;
}

std::vector<MetricsSummary> summarize_suite(std::span<const RunRecord> runs, std::span<const PlanningMethod> methods) {
    std::vector<std::string> datasets;
    for (const auto& r : runs) {
        if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) datasets.push_back(r.dataset);
    }
    std::vector<MetricsSummary> out;
    for (const auto& d : datasets) {
        for (const auto& m : methods) out.push_back(summarize(runs, d, m.label()));
    }
    return out;
}

std::vector<RunRecord> alpha_sweep(std::span<const ProblemInstance> instances, const SlipModelSet& models,
                                   const LikelihoodProvider& likelihoods, std::span<const double> alphas,
                                   const SuiteOptions& options) {
    if (alphas.empty()) throw ConfigError("alpha sweep needs at least one alpha");
    std::vector<PlanningMethod> methods;
    for (double a : alphas) {
        if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
        methods.push_back({SlipModelKind::MGP, RiskMetric::CVaR, a});
    }
    return evaluate_suite(instances, models, likelihoods, methods, options);
}

namespace {

std::string fmt(double v) {
    if (!std::isfinite(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

nlohmann::json moments_json(const Moments& m) {
    nlohmann::json j;
    j["mean"] = std::isfinite(m.mean) ? nlohmann::json(m.mean) : nlohmann::json(nullptr);
    j["std"] = std::isfinite(m.std) ? nlohmann::json(m.std) : nlohmann::json(nullptr);
    j["count"] = m.count;
    return j;
}

}  // namespace

std::string results_csv(std::span<const RunRecord> runs) {
    std::string out = "dataset,instance,method,solved,success,planned_cost_s,path_edges,total_time_s,max_slip_pct,failure_edge\n";
    for (const auto& r : runs) {
        out += r.dataset + ',' + r.instance_id + ',' + r.method + ',' + (r.solved ? "1" : "0") + ',' +
               (r.success ? "1" : "0") + ',' + fmt(r.planned_cost_s) + ',' +
               (r.solved ? std::to_string(r.path_edges) : "") + ',' + fmt(r.total_time_s) + ',' +
               fmt(r.max_slip_pct) + ',' + (r.failure_edge ? std::to_string(*r.failure_edge) : "") + '\n';
    }
    return out;
}

void write_results_csv(const std::filesystem::path& path, std::span<const RunRecord> runs) {
    write_text_atomic(path, results_csv(runs));
}

void write_summary_json(const std::filesystem::path& path, std::span<const MetricsSummary> summaries) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& s : summaries) {
        rows.push_back({{"dataset", s.dataset},
                        {"method", s.method},
                        {"instances", s.instances},
                        {"solved_rate_pct", s.solved_rate_pct},
                        {"success_rate_pct", s.success_rate_pct},
                        {"total_time_min", moments_json(s.total_time_min)},
                        {"max_slip_pct", moments_json(s.max_slip_pct)}});
    }
    nlohmann::json j;
    j["summaries"] = std::move(rows);
    write_text_atomic(path, j.dump(2) + "\n");
}

}  // namespace terra_risk
