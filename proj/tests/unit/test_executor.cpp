#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include <json.hpp>

#include "terra_risk/error.hpp"
#include "terra_risk/executor.hpp"
#include "terra_risk/raster_io.hpp"
#include "terra_risk/training.hpp"

using namespace terra_risk;

namespace {

ProblemInstance flat_instance(int size, double offset, double noise) {
    ProblemInstance inst;
    inst.id = "flat";
    inst.num_classes = 1;
    inst.appearance_key = {0};
    inst.seed = 77;
    inst.heightmap.width = inst.heightmap.height = size;
    inst.heightmap.elevation.assign(static_cast<std::size_t>(size * size), 0.0f);
    inst.classmap.width = inst.classmap.height = size;
    inst.classmap.class_id.assign(static_cast<std::size_t>(size * size), 0);
    SlipGroundTruth gt;
    gt.params.offset = offset;
    gt.noise_sigma = noise;
    inst.slip_models = {gt};
    return inst;
}

Path straight_path(int edges) {
    Path p;
    for (int x = 0; x <= edges; ++x) p.vertices.push_back({x, 0});
    return p;
}

RunRecord record(const char* method, bool solved, bool success, double time_s, double slip) {
    RunRecord r;
    r.dataset = "AA";
    r.instance_id = "i";
    r.method = method;
    r.solved = solved;
    r.success = success;
    r.total_time_s = success ? time_s : std::nan("");
    r.max_slip_pct = solved ? slip : std::nan("");
    r.planned_cost_s = solved ? 1.0 : std::nan("");
    return r;
}

}  // namespace

TEST_CASE("zero-noise flat run takes 100 s") {
    const auto inst = flat_instance(12, 0.0, 0.0);
    const auto r = execute_path(inst, straight_path(10), 0.1);
    CHECK(r.success);
    CHECK(r.total_time == 100.0);
    CHECK(r.max_slip_pct == 0.0);
    CHECK(r.per_edge_slips.size() == 10);
    CHECK_FALSE(r.failure_edge);
}

TEST_CASE("forced slips flag failure at the offending edge") {
    const auto inst = flat_instance(12, 0.0, 0.0);
    for (double s : {1.0, -1.0, 1.5, -2.0}) {
        const auto r = execute_path(inst.heightmap, straight_path(10), 0.1,
                                    [&](std::size_t i, Cell, Cell) { return i == 3 ? s : 0.0; });
        CHECK_FALSE(r.success);
        REQUIRE(r.failure_edge);
        CHECK(*r.failure_edge == 3);
        CHECK(*r.failure_position == Cell{3, 0});
        CHECK(r.per_edge_slips.size() == 4);
        CHECK(std::isnan(r.total_time));
        CHECK(r.max_slip_pct == (s > 0 ? 100.0 * s : 0.0));
    }
    const auto nearly = execute_path(inst.heightmap, straight_path(4), 0.1, [](std::size_t, Cell, Cell) { return 0.999; });
    CHECK(nearly.success);
}

TEST_CASE("execution uses experienced slip") {
    const auto inst = flat_instance(6, 0.5, 0.0);
    const auto r = execute_path(inst, straight_path(2), 0.1);
    CHECK(r.success);
    CHECK(r.total_time == doctest::Approx(40.0).epsilon(1e-14));
    CHECK(r.max_slip_pct == 50.0);
}

TEST_CASE("execution draws depend on the edge, not the path") {
    const auto inst = flat_instance(8, 0.0, 0.1);
    Path a = straight_path(4);
    Path b;
    b.vertices = {{0, 1}, {1, 0}, {2, 0}, {3, 0}};
    const auto ra = execute_path(inst, a, 0.1);
    const auto rb = execute_path(inst, b, 0.1);
    REQUIRE(ra.per_edge_slips.size() >= 3);
    REQUIRE(rb.per_edge_slips.size() == 3);
    CHECK(ra.per_edge_slips[1] == rb.per_edge_slips[1]);
    CHECK(ra.per_edge_slips[2] == rb.per_edge_slips[2]);
    CHECK(ra.per_edge_slips[0] != rb.per_edge_slips[0]);
    CHECK(execute_path(inst, a, 0.1).per_edge_slips == ra.per_edge_slips);
}

TEST_CASE("invalid paths are rejected") {
    const auto inst = flat_instance(4, 0.0, 0.0);
    Path gap;
    gap.vertices = {{0, 0}, {2, 0}};
    CHECK_THROWS_AS(execute_path(inst, gap, 0.1), InputError);
    Path outside;
    outside.vertices = {{3, 0}, {4, 0}};
    CHECK_THROWS_AS(execute_path(inst, outside, 0.1), InputError);
    CHECK_THROWS_AS(execute_path(inst, Path{}, 0.1), InputError);
    CHECK_THROWS_AS(execute_path(inst, straight_path(2), 0.0), ParameterError);
}

TEST_CASE("metrics aggregate like a spreadsheet") {
    // Five instances: two successes, one failure, two without a plan.
    std::vector<RunRecord> runs{
        record("m", true, true, 600.0, 20.0),
        record("m", true, true, 1200.0, 40.0),
        record("m", true, false, 0.0, 120.0),
        record("m", false, false, 0.0, 0.0),
        record("m", false, false, 0.0, 0.0),
        record("other", true, true, 60.0, 1.0),
    };
    const auto s = summarize(runs, "AA", "m");
    CHECK(s.instances == 5);
    CHECK(s.solved_rate_pct == 60.0);
    CHECK(s.success_rate_pct == 40.0);
    CHECK(s.total_time_min.count == 2);
    CHECK(s.total_time_min.mean == 15.0);
    CHECK(s.total_time_min.std == 5.0);
    CHECK(s.max_slip_pct.count == 3);
    CHECK(s.max_slip_pct.mean == 60.0);
    CHECK(s.max_slip_pct.std == doctest::Approx(std::sqrt((1600.0 + 400.0 + 3600.0) / 3.0)).epsilon(1e-15));
    CHECK(s.success_rate_pct <= s.solved_rate_pct);

    const auto none = summarize(runs, "Std", "m");
    CHECK(none.instances == 0);
    CHECK(std::isnan(none.total_time_min.mean));
}

TEST_CASE("result files") {
    std::vector<RunRecord> runs{record("sgp+ev", true, true, 600.0, 20.0), record("sgp+ev", false, false, 0, 0)};
    runs[0].path_edges = 80;
    const std::string csv = results_csv(runs);
    CHECK(csv ==
          "dataset,instance,method,solved,success,planned_cost_s,path_edges,total_time_s,max_slip_pct,failure_edge\n"
          "AA,i,sgp+ev,1,1,1,80,600,20,\n"
          "AA,i,sgp+ev,0,0,,,,,\n");

    const auto dir = std::filesystem::temp_directory_path() / "terra_risk_exec_io";
    std::filesystem::create_directories(dir);
    const std::vector<MetricsSummary> summaries{summarize(runs, "AA", "sgp+ev")};
    write_summary_json(dir / "summary.json", summaries);
    const auto j = nlohmann::json::parse(read_text(dir / "summary.json"));
    const auto& row = j.at("summaries").at(0);
    CHECK(row.at("solved_rate_pct") == 50.0);
    CHECK(row.at("total_time_min").at("mean") == 10.0);
    CHECK(row.at("total_time_min").at("std") == 0.0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("suite evaluation is deterministic across thread counts") {
    DatasetOptions opt;
    opt.width = opt.height = 24;
    opt.groups_per_split = 3;
    opt.test_instances_per_group = 1;
    const auto instances = make_dataset(DatasetKind::AA, Split::Test, 3, opt);
    TrainingOptions topt;
    topt.samples_per_class = 20;
    const SlipModelSet models(train_slip_models(builtin_catalog(DatasetKind::AA), 3, topt));
    const LikelihoodProvider lik = [](const ProblemInstance& inst) {
        SyntheticClassifierParams p;
        p.accuracy = 1.0;
        return synthetic_classify(inst, p);
    };
    SuiteOptions so;
    so.risk.mc_samples = 1000;
    so.risk.seed = 5;
    so.start = {2, 2};
    so.goal = {21, 21};
    const std::vector<PlanningMethod> methods{{SlipModelKind::SGP, RiskMetric::EV, 0.0},
                                              {SlipModelKind::MGP, RiskMetric::CVaR, 0.99}};
    const auto one = evaluate_suite(instances, models, lik, methods, so);
    so.threads = 3;
    std::size_t sunk = 0;
    const auto three = evaluate_suite(instances, models, lik, methods, so,
                                      [&](const ProblemInstance&, const PlanningMethod&, const Path&, const ExecutionResult&) { ++sunk; });
    CHECK(results_csv(one) == results_csv(three));
    REQUIRE(one.size() == 6);
    CHECK(one[0].instance_id == instances[0].id);
    CHECK(one[1].method == "mgp+cvar@0.99");
    std::size_t solved = 0;
    for (const auto& r : one) solved += r.solved;
    CHECK(sunk == solved);

    const std::vector<double> alphas{0.0};
    const auto sweep = alpha_sweep(instances, models, lik, alphas, so);
    const std::vector<PlanningMethod> ev{{SlipModelKind::MGP, RiskMetric::EV, 0.0}};
    const auto ev_runs = evaluate_suite(instances, models, lik, ev, so);
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        CHECK(sweep[i].solved == ev_runs[i].solved);
        CHECK(sweep[i].success == ev_runs[i].success);
        CHECK(std::isnan(sweep[i].planned_cost_s) == std::isnan(ev_runs[i].planned_cost_s));
        if (sweep[i].solved) CHECK(sweep[i].planned_cost_s == ev_runs[i].planned_cost_s);
    }
    CHECK_THROWS_AS(evaluate_suite(instances, models, lik, std::vector<PlanningMethod>{}, so), ConfigError);
}
