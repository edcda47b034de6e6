#include "terra_risk/pipeline.hpp"

#include <json.hpp>

#include "terra_risk/dataset_io.hpp"
#include "terra_risk/error.hpp"
#include "terra_risk/raster_io.hpp"
#include "terra_risk/training.hpp"

namespace terra_risk {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path kind_dir(const fs::path& out, DatasetKind kind) { return out / std::string(to_string(kind)); }

bool non_empty_dir(const fs::path& p) { return fs::is_directory(p) && !fs::is_empty(p); }

struct KindInputs {
    DatasetIndex index;
    std::vector<ProblemInstance> instances;
    SlipModelSet models;
};

KindInputs load_inputs(const ExperimentConfig& config, const fs::path& out, DatasetKind kind) {
    const fs::path root = kind_dir(out, kind);
    KindInputs in;
    in.index = load_dataset_index(root);
    if (in.index.kind != kind) throw DataError(root.string() + " holds a '" + std::string(to_string(in.index.kind)) + "' dataset");
    in.instances = load_split(root, in.index, config.split);
    in.models = load_models(root / "models");
    for (int c = 0; c < in.index.catalog.num_classes(); ++c) {
        if (!in.models.find(c)) throw DataError("no trained model for class " + std::to_string(c) + " in " + root.string());
    }
    return in;
}

void write_results(const fs::path& dir, const std::vector<RunRecord>& records, std::span<const PlanningMethod> methods) {
    fs::create_directories(dir);
    const auto summaries = summarize_suite(records, methods);
    write_results_csv(dir / "results.csv", records);
    write_summary_json(dir / "summary.json", summaries);
}

}  // namespace

SuiteOptions suite_options(const ExperimentConfig& config) {
    SuiteOptions o;
    o.risk = config.risk_config();
    o.u_ref = config.u_ref;
    o.start = config.start;
    o.goal = config.goal;
    o.heuristic = config.heuristic;
    o.threads = config.threads;
    return o;
}

void run_gen_dataset(const ExperimentConfig& config, const fs::path& out, const StageOptions& stage) {
    config.validate();
    for (auto kind : config.kinds) {
        const fs::path root = kind_dir(out, kind);
        if (non_empty_dir(root) && !stage.force) {
            throw ConfigError(root.string() + " exists and is not empty (use --force to overwrite)");
        }
        config.catalog(kind);
    }
    for (auto kind : config.kinds) {
        const fs::path root = kind_dir(out, kind);
        if (fs::exists(root)) fs::remove_all(root);
        fs::create_directories(root);
        DatasetIndex index;
        index.kind = kind;
        index.seed = config.seed;
        index.catalog = config.catalog(kind);
        const auto instances = make_dataset(index.catalog, config.split, config.seed, config.dataset_options());
        std::vector<std::string> dirs;
        for (const auto& inst : instances) {
            const std::string rel = "instances/" + inst.id;
            save_instance(root / rel, inst);
            dirs.push_back(rel);
        }
        index.splits.emplace_back(config.split, std::move(dirs));
        save_dataset_index(root, index);
    }
}

void run_train(const ExperimentConfig& config, const fs::path& out) {
    config.validate();
    std::vector<DatasetIndex> indices;
    for (auto kind : config.kinds) indices.push_back(load_dataset_index(kind_dir(out, kind)));
    for (const auto& index : indices) {
        const auto models = train_slip_models(index.catalog, index.seed, config.training, config.threads);
        save_models(kind_dir(out, index.kind) / "models", models);
    }
}

LikelihoodProvider make_likelihood_provider(const ExperimentConfig& config, DatasetKind kind,
                                            const std::optional<fs::path>& directory) {
    if (directory) {
        if (!fs::is_directory(*directory)) throw DataError("likelihood directory " + directory->string() + " does not exist");
        return [dir = *directory](const ProblemInstance& inst) {
            return load_likelihoods(dir / (inst.id + ".f32"), inst.heightmap.width, inst.heightmap.height, inst.num_classes);
        };
    }
    return [params = config.classifier_params(kind)](const ProblemInstance& inst) {
        SyntheticClassifierParams p = params;
        p.seed = derive_key(params.seed, {inst.seed});
        return synthetic_classify(inst, p);
    };
}

void run_plan(const ExperimentConfig& config, const fs::path& out, const StageOptions& stage) {
    config.validate();
    const auto methods = config.planning_methods();
    const SuiteOptions options = suite_options(config);
    std::vector<KindInputs> inputs;
    for (auto kind : config.kinds) inputs.push_back(load_inputs(config, out, kind));

    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const DatasetKind kind = config.kinds[k];
        const fs::path dir = out / "plans" / std::string(to_string(kind));
        if (fs::exists(dir)) fs::remove_all(dir);
        fs::create_directories(dir);
        const auto provider = make_likelihood_provider(config, kind, stage.likelihoods);
        json index = json::array();
        for (const auto& inst : inputs[k].instances) {
            const auto plans = plan_instance(inst, provider(inst), inputs[k].models, methods, options, stage.export_cost_maps);
            fs::create_directories(dir / inst.id);
            for (std::size_t m = 0; m < methods.size(); ++m) {
                const std::string label = methods[m].label();
                json entry = {{"instance", inst.id}, {"method", label}, {"path", nullptr}};
                if (plans.paths[m]) {
                    const std::string file = inst.id + "/" + label + ".json";
                    save_path_json(dir / file, *plans.paths[m], inst.id, label);
                    entry["path"] = file;
                }
                if (stage.export_cost_maps) save_cost_map(dir / inst.id / ("cost_" + label + ".f32"), plans.cost_maps[m]);
                index.push_back(std::move(entry));
            }
        }
        write_text_atomic(dir / "plans.json", json({{"kind", to_string(kind)}, {"plans", index}}).dump(2) + "\n");
    }
}

std::vector<RunRecord> run_execute(const ExperimentConfig& config, const fs::path& out) {
    config.validate();
    const auto methods = config.planning_methods();
    const SuiteOptions options = suite_options(config);
    std::vector<RunRecord> records;
    for (auto kind : config.kinds) {
        const fs::path root = kind_dir(out, kind);
        const auto index = load_dataset_index(root);
        const auto instances = load_split(root, index, config.split);
        const fs::path dir = out / "plans" / std::string(to_string(kind));
        json plans;
        try {
            plans = json::parse(read_text(dir / "plans.json"));
        } catch (const json::exception& e) {
            throw DataError("malformed " + (dir / "plans.json").string() + ": " + e.what());
        }
        for (const auto& inst : instances) {
            for (const auto& method : methods) {
                const std::string label = method.label();
                const json* entry = nullptr;
                for (const auto& e : plans.at("plans")) {
                    if (e.at("instance") == inst.id && e.at("method") == label) entry = &e;
                }
                if (!entry) throw DataError("no plan for " + inst.id + " / " + label + " (run plan first)");
                std::optional<Path> path;
                if (!entry->at("path").is_null()) path = load_path_json(dir / entry->at("path").get<std::string>());
                if (path) validate_path(*path, inst.shape(), options.start, options.goal);
                records.push_back(execute_plan(inst, method, path, options));
            }
        }
    }
    write_results(out / "execute", records, methods);
    return records;
}

std::vector<RunRecord> run_evaluate(const ExperimentConfig& config, const fs::path& out, const StageOptions& stage) {
    config.validate();
    const auto methods = config.planning_methods();
    const SuiteOptions options = suite_options(config);
    std::vector<KindInputs> inputs;
    for (auto kind : config.kinds) inputs.push_back(load_inputs(config, out, kind));
    std::vector<RunRecord> records;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const auto provider = make_likelihood_provider(config, config.kinds[k], stage.likelihoods);
        auto part = evaluate_suite(inputs[k].instances, inputs[k].models, provider, methods, options);
        records.insert(records.end(), part.begin(), part.end());
    }
    write_results(out / "evaluate", records, methods);
    return records;
}

std::vector<RunRecord> run_sweep_alpha(const ExperimentConfig& config, const fs::path& out, const StageOptions& stage) {
    config.validate();
    const SuiteOptions options = suite_options(config);
    std::vector<PlanningMethod> methods;
    for (double a : config.sweep_alphas) methods.push_back({SlipModelKind::MGP, RiskMetric::CVaR, a});
    std::vector<KindInputs> inputs;
    for (auto kind : config.kinds) inputs.push_back(load_inputs(config, out, kind));
    std::vector<RunRecord> records;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const auto provider = make_likelihood_provider(config, config.kinds[k], stage.likelihoods);
        auto part = alpha_sweep(inputs[k].instances, inputs[k].models, provider, config.sweep_alphas, options);
        records.insert(records.end(), part.begin(), part.end());
    }
    write_results(out / "sweep", records, methods);
    return records;
}

}  // namespace terra_risk
