#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "terra_risk/error.hpp"
#include "terra_risk/terrain.hpp"

using namespace terra_risk;

namespace {

double max_abs_pitch(const HeightMap& hm) {
    double worst = 0.0;
    const GridShape shape = hm.shape();
    for (std::size_t i = 0; i < shape.num_cells(); ++i) {
        const Cell c = shape.cell(i);
        for (int d = 0; d < kNumDirections; ++d) {
            const Cell n = shape.neighbor(c, d);
            if (shape.contains(n)) worst = std::max(worst, std::abs(pitch_at_edge(hm, c, n)));
        }
    }
    return worst;
}

HeightMap flat(int w, int h) {
    HeightMap hm;
    hm.width = w;
    hm.height = h;
    hm.elevation.assign(static_cast<std::size_t>(w * h), 0.0f);
    return hm;
}

}  // namespace

TEST_CASE("heightmap is deterministic and pitch-capped") {
    const auto a = generate_heightmap(7, 96, 96, 0.5);
    const auto b = generate_heightmap(7, 96, 96, 0.5);
    CHECK(a.elevation == b.elevation);
    CHECK(a.width == 96);
    CHECK(a.height == 96);
    CHECK(a.resolution == 1.0);
    for (float z : a.elevation) CHECK(std::isfinite(z));
    CHECK(max_abs_pitch(a) <= kMaxPitchRad);
    CHECK(max_abs_pitch(a) > 40.0 * kDegToRad);

    const auto c = generate_heightmap(8, 96, 96, 0.5);
    CHECK(c.elevation != a.elevation);

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        CHECK(max_abs_pitch(generate_heightmap(seed, 37, 20, 0.8)) <= kMaxPitchRad);
    }
}

TEST_CASE("heightmap rejects bad parameters") {
    CHECK_THROWS_AS(generate_heightmap(7, 96, 96, 0.0), ParameterError);
    CHECK_THROWS_AS(generate_heightmap(7, 96, 96, 1.5), ParameterError);
    CHECK_THROWS_AS(generate_heightmap(7, 1, 96, 0.5), ParameterError);
}

TEST_CASE("classmap realizes occupancy") {
    EnvironmentGroup g{{3, 1, 6}, {0.5, 0.3, 0.2}};
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto map = generate_classmap(seed, g, 96, 96, 24.0);
        std::map<int, int> counts;
        for (auto c : map.class_id) ++counts[c];
        CHECK(counts.size() == 3);
        for (std::size_t i = 0; i < g.members.size(); ++i) {
            const double frac = counts[g.members[i]] / double(96 * 96);
            CHECK(std::abs(frac - g.occupancy[i]) <= 0.03);
        }
    }
    const auto again = generate_classmap(4, g, 96, 96, 24.0);
    CHECK(again.class_id == generate_classmap(4, g, 96, 96, 24.0).class_id);
}

TEST_CASE("classmap degenerate groups") {
    const auto single = generate_classmap(1, EnvironmentGroup{{5}, {1.0}}, 20, 20, 8.0);
    CHECK(std::all_of(single.class_id.begin(), single.class_id.end(), [](auto c) { return c == 5; }));
    CHECK_THROWS_AS(generate_classmap(1, EnvironmentGroup{{1, 2}, {1.0, 0.0}}, 20, 20, 8.0), ParameterError);
    CHECK_THROWS_AS(generate_classmap(1, EnvironmentGroup{{1, 1}, {0.5, 0.5}}, 20, 20, 8.0), ParameterError);
    CHECK_THROWS_AS(generate_classmap(1, EnvironmentGroup{{1, 2}, {0.5, 0.5}}, 20, 20, 0.0), ParameterError);
}

TEST_CASE("pitch geometry") {
    auto hm = flat(4, 4);
    CHECK(pitch_at_edge(hm, {1, 1}, {2, 1}) == 0.0);
    hm.elevation[hm.shape().index({2, 1})] = 1.0f;
    CHECK(pitch_at_edge(hm, {1, 1}, {2, 1}) == doctest::Approx(0.7853981633974483).epsilon(1e-15));
    CHECK(edge_length(hm, {1, 1}, {2, 1}) == doctest::Approx(std::sqrt(2.0)));
    hm.elevation[hm.shape().index({2, 2})] = 1.0f;
    CHECK(edge_length(hm, {1, 1}, {2, 2}) == doctest::Approx(std::sqrt(3.0)));
    CHECK_THROWS_AS(pitch_at_edge(hm, {0, 0}, {2, 0}), GraphError);
    CHECK_THROWS_AS(edge_length(hm, {0, 0}, {0, 0}), GraphError);
}

TEST_CASE("pitch is antisymmetric") {
    const auto hm = generate_heightmap(3, 40, 40, 0.6);
    CounterRng rng(11);
    for (int i = 0; i < 1000; ++i) {
        const Cell a{static_cast<int>(1 + rng.below(38)), static_cast<int>(1 + rng.below(38))};
        const Cell b = hm.shape().neighbor(a, static_cast<int>(rng.below(8)));
        CHECK(pitch_at_edge(hm, a, b) + pitch_at_edge(hm, b, a) == 0.0);
    }
}

TEST_CASE("ground-truth slip curves") {
    for (auto kind : {DatasetKind::Std, DatasetKind::ES, DatasetKind::AA}) {
        const auto& cat = builtin_catalog(kind);
        for (const auto& c : cat.classes) {
            const auto gt = cat.ground_truth(c.id);
            CHECK(gt.mean(0.0) == c.params.offset);
            double prev = gt.mean(-kMaxPitchRad);
            CHECK(prev > -1.0);
            for (int i = -44; i <= 45; ++i) {
                const double m = gt.mean(i * kDegToRad);
                CHECK(m >= prev);
                CHECK(m <= 1.5);
                prev = m;
            }
        }
    }
    CHECK(builtin_catalog(DatasetKind::Std).num_classes() == 10);
    CHECK(builtin_catalog(DatasetKind::AA).num_classes() == 8);
}

TEST_CASE("gradient-scaled noise tracks the slope of the mean curve") {
    const auto& es = builtin_catalog(DatasetKind::ES);
    const auto& st = builtin_catalog(DatasetKind::Std);
    for (const auto& c : es.classes) {
        const auto gt = es.ground_truth(c.id);
        const auto base = st.ground_truth(c.id);
        for (int i = -45; i <= 45; i += 5) {
            const double phi = i * kDegToRad;
            CHECK(gt.noise_at(phi) >= base.noise_at(phi));
            CHECK(base.noise_at(phi) == st.noise.sigma_base);
            for (int j = -45; j <= 45; j += 5) {
                const double psi = j * kDegToRad;
                if (std::abs(gt.slope(phi)) >= std::abs(gt.slope(psi))) CHECK(gt.noise_at(phi) >= gt.noise_at(psi));
            }
        }
        CHECK(gt.noise_at(0.0) == doctest::Approx(es.noise.sigma_base * (1.0 + es.noise.gradient_gain)));
    }
}

TEST_CASE("appearance pairs carry different slip behavior") {
    const auto& aa = builtin_catalog(DatasetKind::AA);
    std::map<int, std::vector<SlipParams>> by_key;
    for (const auto& c : aa.classes) by_key[c.appearance_key].push_back(c.params);
    CHECK(by_key.size() == 4);
    for (const auto& [key, params] : by_key) {
        REQUIRE(params.size() == 2);
        CHECK_FALSE(params[0] == params[1]);
    }
}

TEST_CASE("dataset layout") {
    const auto std_test = make_dataset(DatasetKind::Std, Split::Test, 0);
    CHECK(std_test.size() == 100);
    std::set<std::vector<int>> groups;
    for (const auto& inst : std_test) {
        CHECK(inst.group.members.size() == 4);
        std::vector<int> key = inst.group.members;
        std::sort(key.begin(), key.end());
        groups.insert(key);
        for (auto c : inst.classmap.class_id) {
            CHECK(std::find(inst.group.members.begin(), inst.group.members.end(), c) != inst.group.members.end());
        }
    }
    CHECK(groups.size() == 10);

    DatasetOptions small;
    small.test_instances_per_group = 1;
    const auto aa = make_dataset(DatasetKind::AA, Split::Test, 0, small);
    CHECK(aa.size() == 10);
    for (const auto& inst : aa) {
        CHECK(inst.num_classes == 8);
        std::set<int> keys;
        for (int m : inst.group.members) keys.insert(inst.appearance_key[static_cast<std::size_t>(m)]);
        CHECK(keys.size() == 4);
        for (const auto& gt : inst.slip_models) CHECK(gt.noise_scales_with_gradient);
    }

    const auto again = make_dataset(DatasetKind::AA, Split::Test, 0, small);
    for (std::size_t i = 0; i < aa.size(); ++i) {
        CHECK(aa[i].id == again[i].id);
        CHECK(aa[i].heightmap.elevation == again[i].heightmap.elevation);
        CHECK(aa[i].classmap.class_id == again[i].classmap.class_id);
    }
    CHECK(make_dataset(DatasetKind::AA, Split::Valid, 0, small)[0].heightmap.elevation != aa[0].heightmap.elevation);
}

TEST_CASE("sample_slip") {
    ProblemInstance inst;
    inst.heightmap = flat(5, 5);
    inst.classmap.width = inst.classmap.height = 5;
    inst.classmap.class_id.assign(25, 0);
    SlipGroundTruth gt;
    gt.class_id = 0;
    gt.params = {0.0, 0.4, 3.0};
    inst.slip_models = {gt};
    inst.group = {{0}, {1.0}};
    inst.num_classes = 1;

    CounterRng rng(1);
    CHECK(sample_slip(inst, {1, 1}, {2, 1}, rng) == 0.0);

    inst.slip_models[0].noise_sigma = 0.1;
    inst.slip_models[0].params.offset = 0.2;
    inst.heightmap.elevation[inst.shape().index({2, 2})] = 0.5f;
    const double phi = pitch_at_edge(inst.heightmap, {1, 1}, {2, 2});
    const int n = 100000;
    double sum = 0.0;
    CounterRng a(2);
    for (int i = 0; i < n; ++i) sum += sample_slip(inst, {1, 1}, {2, 2}, a);
    CHECK(std::abs(sum / n - inst.slip_models[0].mean(phi)) <= 3.0 * 0.1 / std::sqrt(double(n)));

    CounterRng b(3), c(3);
    for (int i = 0; i < 10; ++i) CHECK(sample_slip(inst, {1, 1}, {2, 2}, b) == sample_slip(inst, {1, 1}, {2, 2}, c));
}

TEST_CASE("ground truth follows the source cell") {
    ProblemInstance inst;
    inst.heightmap = flat(3, 1);
    inst.classmap.width = 3;
    inst.classmap.height = 1;
    inst.classmap.class_id = {0, 1, 1};
    SlipGroundTruth a, b;
    a.class_id = 0;
    a.params = {0.1, 0.0, 1.0};
    b.class_id = 1;
    b.params = {0.7, 0.0, 1.0};
    inst.slip_models = {a, b};
    CounterRng rng(0);
    CHECK(sample_slip(inst, {0, 0}, {1, 0}, rng) == 0.1);
    CHECK(sample_slip(inst, {1, 0}, {0, 0}, rng) == 0.7);
}

TEST_CASE("catalog parsing validates classes") {
    const char* bad = R"({"std": {"group_size": 1, "noise": {"sigma_base": 0.05, "scales_with_gradient": false, "gradient_gain": 0},
        "classes": [{"name": "x", "offset": 0.9, "amplitude": 0.9, "steepness": 3, "appearance": 0}]}})";
    CHECK_THROWS_AS(parse_catalog(bad, DatasetKind::Std), ParameterError);
    CHECK_THROWS_AS(parse_catalog("{}", DatasetKind::Std), ConfigError);
    CHECK_THROWS_AS(parse_catalog("not json", DatasetKind::Std), ConfigError);
}
