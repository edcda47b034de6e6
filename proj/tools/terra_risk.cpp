// terra-risk: dataset generation, GP training, risk-aware planning and evaluation.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "terra_risk/config.hpp"
#include "terra_risk/error.hpp"
#include "terra_risk/pipeline.hpp"

namespace tr = terra_risk;

namespace {

enum Exit { kOk = 0, kInternal = 1, kConfig = 2, kData = 3, kNumerical = 4 };

int exit_code(tr::ErrorKind kind) {
    switch (kind) {
        case tr::ErrorKind::Parameter:
        case tr::ErrorKind::Config: return kConfig;
        case tr::ErrorKind::Data:
        case tr::ErrorKind::Input:
        case tr::ErrorKind::Graph: return kData;
        case tr::ErrorKind::Numerical: return kNumerical;
    }
    return kInternal;
}

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool force = false;
    std::string likelihoods;
    std::string methods;
    std::optional<double> alpha;
    std::string alphas;
    std::string heuristic;
    std::string kind;
    std::string split;
    std::optional<int> instances;
    std::optional<int> threads;
    bool cost_maps = false;
};

tr::ExperimentConfig resolve(const Flags& f) {
    tr::ExperimentConfig c = f.config.empty() ? tr::ExperimentConfig{} : tr::load_config(f.config);
    if (f.seed) c.seed = *f.seed;
    if (!f.out.empty()) c.output_dir = f.out;
    if (!f.methods.empty()) c.methods = tr::split_list(f.methods);
    if (f.alpha) c.risk.alpha = *f.alpha;
    if (!f.alphas.empty()) c.sweep_alphas = tr::parse_alpha_list(f.alphas);
    if (!f.heuristic.empty()) c.heuristic = tr::parse_heuristic(f.heuristic);
    if (!f.kind.empty()) {
        c.kinds.clear();
        for (const auto& k : tr::split_list(f.kind)) c.kinds.push_back(tr::parse_dataset_kind(k));
    }
    if (!f.split.empty()) c.split = tr::parse_split(f.split);
    if (f.instances) {
        if (*f.instances < 1 || *f.instances % c.groups != 0) {
            throw tr::ConfigError("--instances must be a positive multiple of the group count (" +
                                  std::to_string(c.groups) + ")");
        }
        c.instances_per_group = *f.instances / c.groups;
    }
    if (const char* env = std::getenv("TERRA_RISK_THREADS")) {
        const int cap = std::atoi(env);
        if (cap < 1) throw tr::ConfigError("TERRA_RISK_THREADS must be a positive integer");
        c.threads = std::min(c.threads, cap);
    }
    if (f.threads) c.threads = *f.threads;
    c.validate();
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Risk-aware rover path planning over uncertain terrain classification"};
    app.require_subcommand(1);
    Flags f;

    auto common = [&f](CLI::App* sub) {
        sub->add_option("--config", f.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
        sub->add_option("--seed", f.seed, "Master seed");
        sub->add_option("--out", f.out, "Workspace directory");
        sub->add_option("--kind", f.kind, "Dataset kinds, comma separated (std, es, aa)");
        sub->add_option("--split", f.split, "Dataset split (train, valid, test)");
        sub->add_option("--threads", f.threads, "Worker threads");
    };
    auto planning = [&f](CLI::App* sub) {
        sub->add_option("--likelihoods", f.likelihoods, "Directory of <instance>.f32 likelihood rasters");
        sub->add_option("--methods", f.methods, "Methods, e.g. sgp+ev,mgp+cvar");
        sub->add_option("--alpha", f.alpha, "Risk level for VaR/CVaR");
        sub->add_option("--heuristic", f.heuristic, "A* heuristic: zero or euclid");
    };

    auto* gen = app.add_subcommand("gen-dataset", "Generate problem instances");
    common(gen);
    gen->add_option("--instances", f.instances, "Instances per dataset (split evenly over groups)");
    gen->add_flag("--force", f.force, "Overwrite an existing dataset");
    auto* train = app.add_subcommand("train", "Fit one GP slip model per terrain class");
    common(train);
    auto* plan = app.add_subcommand("plan", "Plan paths for every instance and method");
    common(plan);
    planning(plan);
    plan->add_flag("--cost-maps", f.cost_maps, "Also export cost_<method>.f32 rasters");
    auto* execute = app.add_subcommand("execute", "Execute planned paths and aggregate metrics");
    common(execute);
    planning(execute);
    auto* evaluate = app.add_subcommand("evaluate", "Plan, execute and aggregate in one pass");
    common(evaluate);
    planning(evaluate);
    auto* sweep = app.add_subcommand("sweep-alpha", "MGP+CVaR across risk levels");
    common(sweep);
    planning(sweep);
    sweep->add_option("--alphas", f.alphas, "Comma-separated risk levels");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        const tr::ExperimentConfig config = resolve(f);
        const std::filesystem::path out = config.output_dir;
        tr::StageOptions stage;
        stage.force = f.force;
        stage.export_cost_maps = f.cost_maps;
        if (!f.likelihoods.empty()) stage.likelihoods = f.likelihoods;

        if (gen->parsed()) {
            tr::run_gen_dataset(config, out, stage);
        } else if (train->parsed()) {
            tr::run_train(config, out);
        } else if (plan->parsed()) {
            tr::run_plan(config, out, stage);
        } else if (execute->parsed()) {
            tr::run_execute(config, out);
        } else if (evaluate->parsed()) {
            tr::run_evaluate(config, out, stage);
        } else if (sweep->parsed()) {
            tr::run_sweep_alpha(config, out, stage);
        }
    } catch (const tr::Error& e) {
        std::fprintf(stderr, "terra-risk: %s\n", e.what());
        return exit_code(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "terra-risk: %s\n", e.what());
        return kData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "terra-risk: internal error: %s\n", e.what());
        return kInternal;
    }
    return kOk;
}
