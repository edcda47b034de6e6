#include "terra_risk/gp.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <optional>

#include <json.hpp>

#include "terra_risk/error.hpp"

namespace terra_risk {

namespace {

constexpr double kInitialJitter = 1e-10;
constexpr double kMaxJitter = 1e-4;
constexpr double kLog2Pi = 1.8378770664093454836;

std::vector<double> log_space(double lo, double hi, int count) {
    std::vector<double> out;
    for (int i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        out.push_back(std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo))));
    }
    return out;
}

void validate(const TrainingSet& data) {
    if (data.pitches.empty()) throw InputError("GP training set for class " + std::to_string(data.class_id) + " is empty");
    if (data.pitches.size() != data.slips.size()) {
        throw InputError("GP training set for class " + std::to_string(data.class_id) + ": length mismatch");
    }
    for (std::size_t i = 0; i < data.pitches.size(); ++i) {
        if (!std::isfinite(data.pitches[i]) || !std::isfinite(data.slips[i])) {
            throw InputError("GP training set for class " + std::to_string(data.class_id) + ": non-finite sample");
        }
    }
}

void validate(const GPHyperparams& h) {
    if (!(h.lengthscale > 0.0) || !(h.signal_variance > 0.0) || !(h.noise_variance >= 0.0)) {
        throw ParameterError("GP hyperparameters must be positive (noise variance may be zero)");
    }
}

struct Factorization {
    Eigen::MatrixXd chol;
    Eigen::VectorXd alpha;
    double jitter;
    double lml;
};

std::optional<Factorization> factorize(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const GPHyperparams& h) {
    const Eigen::Index n = x.size();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            k(i, j) = k(j, i) = squared_exponential(x(i), x(j), h.lengthscale, h.signal_variance);
        }
        k(i, i) += h.noise_variance;
    }
    for (double jitter = kInitialJitter; jitter <= kMaxJitter * 1.000001; jitter *= 10.0) {
        Eigen::MatrixXd kj = k;
        kj.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(kj);
        if (llt.info() != Eigen::Success) continue;
        Eigen::MatrixXd l = llt.matrixL();
        if (!(l.diagonal().array() > 0.0).all()) continue;
        Factorization f;
        f.alpha = llt.solve(y);
        f.jitter = jitter;
        f.lml = -0.5 * y.dot(f.alpha) - l.diagonal().array().log().sum() - 0.5 * static_cast<double>(n) * kLog2Pi;
        f.chol = std::move(l);
        if (!std::isfinite(f.lml)) continue;
        return f;
    }
    return std::nullopt;
}

}  // namespace

double squared_exponential(double a, double b, double lengthscale, double signal_variance) noexcept {
    const double r = (a - b) / lengthscale;
    return signal_variance * std::exp(-0.5 * r * r);
}

HyperGrid HyperGrid::default_grid() {
    HyperGrid g;
    g.lengthscales = log_space(0.05, 2.0, 8);
    g.signal_variances = log_space(0.01, 4.0, 8);
    g.noise_variances = log_space(1e-4, 0.1, 7);
    return g;
}

GPModel GPModel::with_hyperparams(const TrainingSet& data, const GPHyperparams& hyper) {
    validate(data);
    validate(hyper);
    GPModel m;
    m.hyper_ = hyper;
    m.data_ = data;
    m.inputs_ = Eigen::Map<const Eigen::VectorXd>(data.pitches.data(), static_cast<Eigen::Index>(data.pitches.size()));
    const Eigen::VectorXd y =
        Eigen::Map<const Eigen::VectorXd>(data.slips.data(), static_cast<Eigen::Index>(data.slips.size()));
    auto f = factorize(m.inputs_, y, hyper);
    if (!f) {
        throw FitError("GP covariance for class " + std::to_string(data.class_id) +
                       " is not positive definite after jitter escalation");
    }
    m.chol_ = std::move(f->chol);
    m.alpha_ = std::move(f->alpha);
    m.jitter_ = f->jitter;
    m.lml_ = f->lml;
    return m;
}

GPModel GPModel::fit(const TrainingSet& data, const HyperGrid& grid) {
    validate(data);
    if (grid.size() == 0) throw ParameterError("GP hyperparameter grid is empty");
    const Eigen::VectorXd x =
        Eigen::Map<const Eigen::VectorXd>(data.pitches.data(), static_cast<Eigen::Index>(data.pitches.size()));
    const Eigen::VectorXd y =
        Eigen::Map<const Eigen::VectorXd>(data.slips.data(), static_cast<Eigen::Index>(data.slips.size()));

    std::optional<GPHyperparams> best;
    double best_lml = -std::numeric_limits<double>::infinity();
    for (double ls : grid.lengthscales) {
        for (double sv : grid.signal_variances) {
            for (double nv : grid.noise_variances) {
                const GPHyperparams h{ls, sv, nv};
                validate(h);
                const auto f = factorize(x, y, h);
                if (f && f->lml > best_lml) {
                    best_lml = f->lml;
                    best = h;
                }
            }
        }
    }
    if (!best) {
        throw FitError("GP fit for class " + std::to_string(data.class_id) + " failed at every grid point");
    }
    return with_hyperparams(data, *best);
}

GPPrediction GPModel::predict(double pitch) const {
    const Eigen::Index n = inputs_.size();
    Eigen::VectorXd kstar(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        kstar(i) = squared_exponential(pitch, inputs_(i), hyper_.lengthscale, hyper_.signal_variance);
    }
    GPPrediction p;
    p.mean = kstar.dot(alpha_);
    const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(kstar);
    const double prior = hyper_.signal_variance + hyper_.noise_variance;
    // Clamp keeps the predictive variance strictly positive under round-off.
    p.variance = std::max(prior - v.squaredNorm(), std::max(hyper_.noise_variance, 1e-12));
    p.variance = std::min(p.variance, prior);
    return p;
}

SlipModelSet::SlipModelSet(std::vector<GPModel> models) {
    for (auto& m : models) insert(std::move(m));
}

void SlipModelSet::insert(GPModel model) {
    const int id = model.class_id();
    if (id < 0) throw ConfigError("GP model with negative class id");
    if (static_cast<std::size_t>(id) >= models_.size()) models_.resize(static_cast<std::size_t>(id) + 1);
    models_[static_cast<std::size_t>(id)] = std::move(model);
}

const GPModel* SlipModelSet::find(int class_id) const noexcept {
    if (class_id < 0 || static_cast<std::size_t>(class_id) >= models_.size()) return nullptr;
    const auto& slot = models_[static_cast<std::size_t>(class_id)];
    return slot ? &*slot : nullptr;
}

const GPModel& SlipModelSet::at(int class_id) const {
    const GPModel* m = find(class_id);
    if (!m) throw ConfigError("no GP slip model for class " + std::to_string(class_id));
    return *m;
}

std::string gp_model_filename(int class_id) { return "gp_" + std::to_string(class_id) + ".json"; }

void save_gp_model(const GPModel& model, const std::filesystem::path& path) {
    nlohmann::json j;
    j["class_id"] = model.class_id();
    j["kernel"] = "squared_exponential";
    j["hyperparams"] = {{"lengthscale", model.hyperparams().lengthscale},
                        {"signal_variance", model.hyperparams().signal_variance},
                        {"noise_variance", model.hyperparams().noise_variance}};
    j["pitches"] = model.training_set().pitches;
    j["slips"] = model.training_set().slips;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw DataError("write failed for " + path.string());
}

GPModel load_gp_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open GP model " + path.string());
    try {
        const nlohmann::json j = nlohmann::json::parse(in);
        TrainingSet data;
        data.class_id = j.at("class_id").get<int>();
        data.pitches = j.at("pitches").get<std::vector<double>>();
        data.slips = j.at("slips").get<std::vector<double>>();
        const auto& h = j.at("hyperparams");
        const GPHyperparams hyper{h.at("lengthscale").get<double>(), h.at("signal_variance").get<double>(),
                                  h.at("noise_variance").get<double>()};
        return GPModel::with_hyperparams(data, hyper);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed GP model " + path.string() + ": " + e.what());
    }
}

}  // namespace terra_risk
