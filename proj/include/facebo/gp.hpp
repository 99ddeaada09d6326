#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "facebo/face_space.hpp"

namespace facebo {

/// Matérn 5/2 + white-noise kernel parameters.
/// lengthscale is in face-space units; the variances are in the (standardized)
/// units of the fitted targets.
struct KernelHyperparams {
    double lengthscale = 1.0;
    double signal_variance = 1.0;
    double noise_variance = 0.1;

    void validate() const;
    friend bool operator==(const KernelHyperparams&, const KernelHyperparams&) = default;
};

/// Milliseconds since the Unix epoch.
using Timestamp = std::int64_t;

struct Observation {
    Point point;
    double rating = 0.0;
    std::size_t iteration_index = 0;
    Timestamp wall_time = 0;
};

struct PosteriorPrediction {
    double mean = 0.0;
    double variance = 0.0;
};

/// k(r) = s^2 (1 + sqrt5 r/l + 5 r^2 / (3 l^2)) exp(-sqrt5 r/l)
double matern52(double distance, const KernelHyperparams& hyper);

/// Exact GP regression over a fixed observation set. Immutable once built;
/// every query is a pure function of the fitted state.
class GPModel {
public:
    /// Prior-only model of the given input dimension.
    GPModel(std::size_t dim, KernelHyperparams hyper, double prior_mean = 0.0);

    const KernelHyperparams& hyperparams() const { return hyper_; }
    double prior_mean() const { return prior_mean_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return observations_.size(); }
    bool empty() const { return observations_.empty(); }
    const std::vector<Observation>& observations() const { return observations_; }

    /// Lower-triangular factor of K + noise*I (+ jitter, if it was needed).
    const Eigen::MatrixXd& chol_factor() const { return chol_; }
    const Eigen::VectorXd& alpha() const { return alpha_; }
    /// Diagonal jitter added during factorization (0 when none was needed).
    double jitter() const { return jitter_; }

    /// Latent-function posterior (observation noise excluded from variance).
    PosteriorPrediction posterior(const Point& query) const;

    /// Same as posterior() without the dimension check; `query` has dim() entries.
    PosteriorPrediction posterior_unchecked(const double* query) const;

    double log_marginal_likelihood() const;

    friend GPModel fit(std::size_t, std::span<const Observation>, const KernelHyperparams&, double);

private:
    std::size_t dim_ = 0;
    KernelHyperparams hyper_;
    double prior_mean_ = 0.0;
    std::vector<Observation> observations_;
    Eigen::MatrixXd inputs_;  // n x d, row per observation
    Eigen::MatrixXd chol_;
    Eigen::VectorXd alpha_;
    double jitter_ = 0.0;
};

/// Fits a GP to `observations`, whose `rating` fields are the regression
/// targets in the caller's units. An empty span yields a prior-only model
/// only when the dimension is known; use the GPModel constructor for that.
GPModel fit(std::span<const Observation> observations, const KernelHyperparams& hyper,
            double prior_mean = 0.0);

/// Dimension-aware overload that accepts an empty observation list.
GPModel fit(std::size_t dim, std::span<const Observation> observations, const KernelHyperparams& hyper,
            double prior_mean = 0.0);

double log_marginal_likelihood(const GPModel& model);

/// Candidate values for type-II maximum likelihood selection.
struct HyperGrid {
    std::vector<double> lengthscales{0.25, 0.5, 1.0, 2.0, 4.0};
    std::vector<double> signal_variances{0.25, 0.5, 1.0, 2.0};
    std::vector<double> noise_variances{0.01, 0.05, 0.1, 0.3};
};

/// Fits every hyperparameter combination in `grid` and returns the model with
/// the highest log marginal likelihood (first in enumeration order on ties).
/// Needs at least one observation.
GPModel fit_ml2(std::span<const Observation> observations, const HyperGrid& grid, double prior_mean = 0.0);

}  // namespace facebo
