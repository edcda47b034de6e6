#include "terra_risk/config.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

#include "terra_risk/error.hpp"
#include "terra_risk/raster_io.hpp"

namespace terra_risk {

using nlohmann::json;

double ClassifierConfig::accuracy(DatasetKind kind) const noexcept {
    switch (kind) {
        case DatasetKind::Std: return accuracy_std;
        case DatasetKind::ES: return accuracy_es;
        case DatasetKind::AA: return accuracy_aa;
    }
    return accuracy_std;
}

namespace {

// Reads the keys of one JSON object and rejects whatever was not read.
class Section {
public:
    Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError("config: '" + path_ + "' must be an object");
    }

    template <typename T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        if (!obj_.contains(key)) return;
        try {
            out = obj_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError("config: '" + path_ + "." + key + "' has the wrong type");
        }
    }

    std::optional<Section> child(const char* key) {
        seen_.insert(key);
        if (!obj_.contains(key)) return std::nullopt;
        return Section(obj_.at(key), path_ + "." + key);
    }

    void finish() const {
        for (const auto& [key, value] : obj_.items()) {
            if (!seen_.count(key)) throw ConfigError("config: unknown key '" + path_ + "." + key + "'");
        }
    }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

Cell read_cell(const std::vector<int>& v, const char* what) {
    if (v.size() != 2) throw ConfigError(std::string("config: ") + what + " must be [x, y]");
    return {v[0], v[1]};
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ExperimentConfig c;
    Section root(doc, "$");
    root.read("seed", c.seed);
    root.read("threads", c.threads);
    root.read("output_dir", c.output_dir);

    if (auto d = root.child("dataset")) {
        std::vector<std::string> kinds;
        d->read("kinds", kinds);
        if (!kinds.empty()) {
            c.kinds.clear();
            for (const auto& k : kinds) c.kinds.push_back(parse_dataset_kind(k));
        }
        std::string split(to_string(c.split));
        d->read("split", split);
        c.split = parse_split(split);
        d->read("groups", c.groups);
        d->read("instances_per_group", c.instances_per_group);
        d->read("width", c.width);
        d->read("height", c.height);
        d->read("feature_scale", c.feature_scale);
        std::string classes;
        d->read("slip_classes", classes);
        if (!classes.empty()) c.slip_classes = classes;
        if (auto t = d->child("terrain")) {
            t->read("roughness", c.terrain.roughness);
            t->read("max_pitch_deg", c.terrain.max_pitch_deg);
            t->read("resolution", c.terrain.resolution);
            t->finish();
        }
        d->finish();
    }
    if (auto t = root.child("training")) {
        t->read("samples_per_class", c.training.samples_per_class);
        t->read("pitch_limit_deg", c.training.pitch_limit_deg);
        if (auto g = t->child("grid")) {
            g->read("lengthscales", c.training.grid.lengthscales);
            g->read("signal_variances", c.training.grid.signal_variances);
            g->read("noise_variances", c.training.grid.noise_variances);
            g->finish();
        }
        t->finish();
    }
    if (auto k = root.child("classifier")) {
        if (auto a = k->child("accuracy")) {
            a->read("std", c.classifier.accuracy_std);
            a->read("es", c.classifier.accuracy_es);
            a->read("aa", c.classifier.accuracy_aa);
            a->finish();
        }
        k->read("smoothing", c.classifier.smoothing);
        k->read("mislabel_rate", c.classifier.mislabel_rate);
        k->finish();
    }
    if (auto r = root.child("risk")) {
        r->read("alpha", c.risk.alpha);
        r->read("mc_samples", c.risk.mc_samples);
        r->read("shared_class_draw", c.risk.shared_class_draw);
        r->finish();
    }
    if (auto p = root.child("planner")) {
        p->read("methods", c.methods);
        p->read("sweep_alphas", c.sweep_alphas);
        std::string heuristic(to_string(c.heuristic));
        p->read("heuristic", heuristic);
        c.heuristic = parse_heuristic(heuristic);
        p->read("u_ref", c.u_ref);
        std::vector<int> start{c.start.x, c.start.y};
        std::vector<int> goal{c.goal.x, c.goal.y};
        p->read("start", start);
        p->read("goal", goal);
        c.start = read_cell(start, "planner.start");
        c.goal = read_cell(goal, "planner.goal");
        p->finish();
    }
    root.finish();
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("config file " + path.string() + " does not exist");
    return parse_config(read_text(path));
}

std::string config_to_json(const ExperimentConfig& c) {
    json kinds = json::array();
    for (auto k : c.kinds) kinds.push_back(to_string(k));
    json dataset = {{"kinds", kinds},
                    {"split", to_string(c.split)},
                    {"groups", c.groups},
                    {"instances_per_group", c.instances_per_group},
                    {"width", c.width},
                    {"height", c.height},
                    {"feature_scale", c.feature_scale},
                    {"terrain",
                     {{"roughness", c.terrain.roughness},
                      {"max_pitch_deg", c.terrain.max_pitch_deg},
                      {"resolution", c.terrain.resolution}}}};
    if (c.slip_classes) dataset["slip_classes"] = *c.slip_classes;
    json j = {{"seed", c.seed},
              {"threads", c.threads},
              {"output_dir", c.output_dir},
              {"dataset", dataset},
              {"training",
               {{"samples_per_class", c.training.samples_per_class},
                {"pitch_limit_deg", c.training.pitch_limit_deg},
                {"grid",
                 {{"lengthscales", c.training.grid.lengthscales},
                  {"signal_variances", c.training.grid.signal_variances},
                  {"noise_variances", c.training.grid.noise_variances}}}}},
              {"classifier",
               {{"accuracy", {{"std", c.classifier.accuracy_std}, {"es", c.classifier.accuracy_es}, {"aa", c.classifier.accuracy_aa}}},
                {"smoothing", c.classifier.smoothing},
                {"mislabel_rate", c.classifier.mislabel_rate}}},
              {"risk", {{"alpha", c.risk.alpha}, {"mc_samples", c.risk.mc_samples}, {"shared_class_draw", c.risk.shared_class_draw}}},
              {"planner",
               {{"methods", c.methods},
                {"sweep_alphas", c.sweep_alphas},
                {"heuristic", to_string(c.heuristic)},
                {"u_ref", c.u_ref},
                {"start", {c.start.x, c.start.y}},
                {"goal", {c.goal.x, c.goal.y}}}}};
    return j.dump(2) + "\n";
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& what) { throw ConfigError("config: " + what); };
    if (kinds.empty()) fail("dataset.kinds is empty");
    if (groups < 1) fail("dataset.groups must be >= 1");
    if (instances_per_group < 1) fail("dataset.instances_per_group must be >= 1");
    if (width < 2 || height < 2) fail("dataset width/height must be >= 2");
    if (!(terrain.roughness > 0.0 && terrain.roughness <= 1.0)) fail("dataset.terrain.roughness must lie in (0, 1]");
    if (!(terrain.max_pitch_deg > 0.0 && terrain.max_pitch_deg <= 45.0)) fail("dataset.terrain.max_pitch_deg must lie in (0, 45]");
    if (!(terrain.resolution > 0.0)) fail("dataset.terrain.resolution must be > 0");
    if (!(feature_scale > 0.0)) fail("dataset.feature_scale must be > 0");
    if (training.samples_per_class < 1) fail("training.samples_per_class must be >= 1");
    if (!(training.pitch_limit_deg > 0.0 && training.pitch_limit_deg <= 45.0)) fail("training.pitch_limit_deg must lie in (0, 45]");
    if (training.grid.size() == 0) fail("training.grid must not be empty");
    for (const auto* axis : {&training.grid.lengthscales, &training.grid.signal_variances}) {
        for (double v : *axis) {
            if (!(v > 0.0)) fail("training.grid lengthscales and signal variances must be > 0");
        }
    }
    for (double v : training.grid.noise_variances) {
        if (!(v >= 0.0)) fail("training.grid noise variances must be >= 0");
    }
    for (auto k : {DatasetKind::Std, DatasetKind::ES, DatasetKind::AA}) {
        const double a = classifier.accuracy(k);
        if (!(a > 0.0 && a <= 1.0)) fail("classifier accuracies must lie in (0, 1]");
    }
    if (!(classifier.smoothing >= 0.0)) fail("classifier.smoothing must be >= 0");
    if (!(classifier.mislabel_rate >= 0.0 && classifier.mislabel_rate <= 1.0)) fail("classifier.mislabel_rate must lie in [0, 1]");
    try {
        risk.validate();
    } catch (const ParameterError& e) {
        fail(std::string("risk: ") + e.what());
    }
    if (methods.empty()) fail("planner.methods is empty");
    planning_methods();
    if (sweep_alphas.empty()) fail("planner.sweep_alphas is empty");
    for (double a : sweep_alphas) {
        if (!(a >= 0.0 && a <= 1.0)) fail("planner.sweep_alphas must lie in [0, 1]");
        if (a > 0.9 && risk.mc_samples < 1000) fail("alpha > 0.9 needs risk.mc_samples >= 1000");
    }
    if (!(u_ref > 0.0)) fail("planner.u_ref must be > 0");
    const GridShape shape{width, height};
    if (!shape.contains(start) || !shape.contains(goal)) fail("planner start/goal outside the map");
    if (threads < 1) fail("threads must be >= 1");
}

DatasetOptions ExperimentConfig::dataset_options() const {
    DatasetOptions o;
    o.groups_per_split = groups;
    o.train_instances_per_group = o.valid_instances_per_group = o.test_instances_per_group = instances_per_group;
    o.width = width;
    o.height = height;
    o.terrain = terrain;
    o.feature_scale = feature_scale;
    return o;
}

std::vector<PlanningMethod> ExperimentConfig::planning_methods() const {
    std::vector<PlanningMethod> out;
    std::set<std::string> seen;
    for (const auto& m : methods) {
        auto pm = PlanningMethod::parse(m, risk.alpha);
        if (!seen.insert(pm.label()).second) throw ConfigError("config: method '" + m + "' listed twice");
        out.push_back(pm);
    }
    return out;
}

ClassCatalog ExperimentConfig::catalog(DatasetKind kind) const {
    if (!slip_classes) return builtin_catalog(kind);
    if (!std::filesystem::exists(*slip_classes)) throw ConfigError("slip class table " + *slip_classes + " does not exist");
    return parse_catalog(read_text(*slip_classes), kind);
}

SyntheticClassifierParams ExperimentConfig::classifier_params(DatasetKind kind) const {
    SyntheticClassifierParams p;
    p.accuracy = classifier.accuracy(kind);
    p.smoothing = classifier.smoothing;
    p.mislabel_rate = classifier.mislabel_rate;
    p.seed = derive_key(seed, {static_cast<std::uint64_t>(StreamDomain::Classifier), static_cast<std::uint64_t>(kind)});
    return p;
}

RiskConfig ExperimentConfig::risk_config() const {
    RiskConfig r = risk;
    r.seed = derive_key(seed, {static_cast<std::uint64_t>(StreamDomain::RiskSampling)});
    return r;
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const auto end = comma == std::string_view::npos ? text.size() : comma;
        std::string item(text.substr(pos, end - pos));
        const auto first = item.find_first_not_of(" \t");
        const auto last = item.find_last_not_of(" \t");
        if (first != std::string::npos) out.push_back(item.substr(first, last - first + 1));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::vector<double> parse_alpha_list(std::string_view text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw ConfigError("'" + item + "' is not a number");
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("alpha " + item + " outside [0, 1]");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("empty alpha list");
    return out;
}

}  // namespace terra_risk
