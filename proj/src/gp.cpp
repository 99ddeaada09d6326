#include "facebo/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include "facebo/error.hpp"

namespace facebo {

namespace {

constexpr double kSqrt5 = 2.23606797749978969640917366873127623544;
constexpr double kJitterScale = 1e-8;

double squared_distance(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double t = a[i] - b[i];
        s += t * t;
    }
    return s;
}

double matern52_unchecked(double r, const KernelHyperparams& h) {
    const double z = kSqrt5 * r / h.lengthscale;
    return h.signal_variance * (1.0 + z + z * z / 3.0) * std::exp(-z);
}

}  // namespace

void KernelHyperparams::validate() const {
    if (!(lengthscale > 0.0) || !std::isfinite(lengthscale))
        throw InvalidArgument("lengthscale must be positive and finite");
    if (!(signal_variance > 0.0) || !std::isfinite(signal_variance))
        throw InvalidArgument("signal_variance must be positive and finite");
    if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
        throw InvalidArgument("noise_variance must be non-negative and finite");
}

double matern52(double distance, const KernelHyperparams& hyper) {
    if (!(distance >= 0.0)) throw InvalidArgument("matern52: distance must be non-negative");
    hyper.validate();
    return matern52_unchecked(distance, hyper);
}

GPModel::GPModel(std::size_t dim, KernelHyperparams hyper, double prior_mean)
    : dim_(dim), hyper_(hyper), prior_mean_(prior_mean) {
    if (dim == 0) throw InvalidArgument("GP input dimension must be >= 1");
    hyper_.validate();
    if (!std::isfinite(prior_mean)) throw InvalidArgument("prior mean must be finite");
    inputs_.resize(0, static_cast<Eigen::Index>(dim));
}

GPModel fit(std::size_t dim, std::span<const Observation> observations, const KernelHyperparams& hyper,
            double prior_mean) {
    GPModel model(dim, hyper, prior_mean);
    const auto n = static_cast<Eigen::Index>(observations.size());
    if (n == 0) return model;

    model.inputs_.resize(n, static_cast<Eigen::Index>(dim));
    Eigen::VectorXd resid(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& obs = observations[static_cast<std::size_t>(i)];
        if (obs.point.dim() != dim)
            throw DimensionMismatch("fit: observation " + std::to_string(i) + " has dimension " +
                                    std::to_string(obs.point.dim()) + ", expected " + std::to_string(dim));
        if (!obs.point.coords.allFinite() || !std::isfinite(obs.rating))
            throw InvalidArgument("fit: observation " + std::to_string(i) + " is not finite");
        model.inputs_.row(i) = obs.point.coords.transpose();
        resid(i) = obs.rating - prior_mean;
    }

    // Row-major copy so each input is contiguous for the distance loop.
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x = model.inputs_;
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = hyper.signal_variance + hyper.noise_variance;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double r = std::sqrt(squared_distance(x.row(i).data(), x.row(j).data(), dim));
            k(i, j) = k(j, i) = matern52_unchecked(r, hyper);
        }
    }

    Eigen::LLT<Eigen::MatrixXd> llt(k);
    double jitter = 0.0;
    if (llt.info() != Eigen::Success) {
        jitter = kJitterScale * hyper.signal_variance;
        k.diagonal().array() += jitter;
        llt.compute(k);
        if (llt.info() != Eigen::Success) {
            std::ostringstream msg;
            msg << "fit: covariance of " << n << " observations is not positive definite "
                << "(noise_variance=" << hyper.noise_variance << "); retried once with diagonal jitter "
                << jitter << " and factorization failed again. Duplicate points with zero noise?";
            throw NumericalDegeneracy(msg.str());
        }
    }
    model.chol_ = llt.matrixL();
    if ((model.chol_.diagonal().array() <= 0.0).any())
        throw NumericalDegeneracy("fit: Cholesky factor has a non-positive diagonal entry");
    model.alpha_ = llt.solve(resid);
    model.jitter_ = jitter;
    model.observations_.assign(observations.begin(), observations.end());
    return model;
}

GPModel fit(std::span<const Observation> observations, const KernelHyperparams& hyper, double prior_mean) {
    if (observations.empty())
        throw InvalidArgument("fit: empty observation list needs an explicit dimension");
    return fit(observations.front().point.dim(), observations, hyper, prior_mean);
}

PosteriorPrediction GPModel::posterior(const Point& query) const {
    if (query.dim() != dim_)
        throw DimensionMismatch("posterior: query has dimension " + std::to_string(query.dim()) +
                                ", model has " + std::to_string(dim_));
    return posterior_unchecked(query.coords.data());
}

PosteriorPrediction GPModel::posterior_unchecked(const double* query) const {
    const Eigen::Index n = inputs_.rows();
    if (n == 0) return {prior_mean_, hyper_.signal_variance};

    Eigen::VectorXd kq(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Eigen::Index c = 0; c < inputs_.cols(); ++c) {
            const double t = inputs_(i, c) - query[c];
            s += t * t;
        }
        kq(i) = matern52_unchecked(std::sqrt(s), hyper_);
    }
    const double mean = prior_mean_ + kq.dot(alpha_);
    chol_.triangularView<Eigen::Lower>().solveInPlace(kq);
    const double var = hyper_.signal_variance - kq.squaredNorm();
    return {mean, var > 0.0 ? var : 0.0};
}

double GPModel::log_marginal_likelihood() const {
    const Eigen::Index n = inputs_.rows();
    if (n == 0) throw InsufficientData("log_marginal_likelihood: model has no observations");
    Eigen::VectorXd resid(n);
    for (Eigen::Index i = 0; i < n; ++i) resid(i) = observations_[static_cast<std::size_t>(i)].rating - prior_mean_;
    const double data_fit = -0.5 * resid.dot(alpha_);
    const double log_det = chol_.diagonal().array().log().sum();
    return data_fit - log_det - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

double log_marginal_likelihood(const GPModel& model) { return model.log_marginal_likelihood(); }

GPModel fit_ml2(std::span<const Observation> observations, const HyperGrid& grid, double prior_mean) {
    if (observations.empty()) throw InsufficientData("fit_ml2: needs at least one observation");
    const std::size_t dim = observations.front().point.dim();
    std::optional<GPModel> best;
    double best_lml = -std::numeric_limits<double>::infinity();
    for (double l : grid.lengthscales) {
        for (double s : grid.signal_variances) {
            for (double nv : grid.noise_variances) {
                GPModel m = fit(dim, observations, KernelHyperparams{l, s, nv}, prior_mean);
                const double lml = m.log_marginal_likelihood();
                if (!best || lml > best_lml) {
                    best_lml = lml;
                    best = std::move(m);
                }
            }
        }
    }
    if (!best) throw InvalidArgument("fit_ml2: empty hyperparameter grid");
    return *std::move(best);
}

}  // namespace facebo
