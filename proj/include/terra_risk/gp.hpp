#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace terra_risk {

/// Squared-exponential kernel hyperparameters.
struct GPHyperparams {
    double lengthscale = 0.3;      // rad
    double signal_variance = 0.25; // slip^2
    double noise_variance = 1e-3;  // slip^2
    friend bool operator==(const GPHyperparams&, const GPHyperparams&) = default;
};

struct TrainingSet {
    int class_id = 0;
    std::vector<double> pitches; // rad
    std::vector<double> slips;   // dimensionless
};

/// Candidate values scanned by GPModel::fit; every combination is tried.
struct HyperGrid {
    std::vector<double> lengthscales;
    std::vector<double> signal_variances;
    std::vector<double> noise_variances;

    /// Log-spaced default: 8 lengthscales x 8 signal variances x 7 noise variances.
    static HyperGrid default_grid();
    std::size_t size() const noexcept {
        return lengthscales.size() * signal_variances.size() * noise_variances.size();
    }
};

struct GPPrediction {
    double mean = 0.0;
    double variance = 0.0;
};

/// Exact zero-mean GP regressor over pitch. Immutable once constructed.
class GPModel {
public:
    /// Grid search maximizing the log marginal likelihood (first maximum wins on ties).
    static GPModel fit(const TrainingSet& data, const HyperGrid& grid);
    /// Factorizes K + noise*I for fixed hyperparameters.
    static GPModel with_hyperparams(const TrainingSet& data, const GPHyperparams& hyper);

    GPPrediction predict(double pitch) const;
    double log_marginal_likelihood() const noexcept { return lml_; }

    const GPHyperparams& hyperparams() const noexcept { return hyper_; }
    const TrainingSet& training_set() const noexcept { return data_; }
    int class_id() const noexcept { return data_.class_id; }
    /// Diagonal jitter that made the factorization succeed.
    double jitter() const noexcept { return jitter_; }
    const Eigen::MatrixXd& cholesky_factor() const noexcept { return chol_; }
    const Eigen::VectorXd& alpha() const noexcept { return alpha_; }

private:
    GPModel() = default;

    GPHyperparams hyper_;
    TrainingSet data_;
    Eigen::VectorXd inputs_;
    Eigen::MatrixXd chol_; // lower triangular
    Eigen::VectorXd alpha_; // (K + noise I)^{-1} y
    double jitter_ = 0.0;
    double lml_ = 0.0;
};

/// One optional GP per terrain class, indexed by class id.
class SlipModelSet {
public:
    SlipModelSet() = default;
    explicit SlipModelSet(std::vector<GPModel> models);

    void insert(GPModel model);
    const GPModel* find(int class_id) const noexcept;
    /// Throws ConfigError when no model exists for `class_id`.
    const GPModel& at(int class_id) const;
    int size() const noexcept { return static_cast<int>(models_.size()); }

private:
    std::vector<std::optional<GPModel>> models_;
};

double squared_exponential(double a, double b, double lengthscale, double signal_variance) noexcept;

/// gp_<class>.json holds hyperparameters and the raw training set; loading refactorizes.
void save_gp_model(const GPModel& model, const std::filesystem::path& path);
GPModel load_gp_model(const std::filesystem::path& path);
std::string gp_model_filename(int class_id);

}  // namespace terra_risk
