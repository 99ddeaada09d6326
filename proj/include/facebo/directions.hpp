#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "facebo/face_space.hpp"
#include "facebo/random.hpp"

namespace facebo {

/// Latent vectors with a binary attribute label each.
struct LabeledLatents {
    std::vector<LatentVector> latents;
    std::vector<int> labels;  // 0 or 1

    void validate() const;
};

struct LogisticFitConfig {
    double l2_penalty = 1e-3;
    std::size_t max_iters = 2000;
    double tolerance = 1e-6;
    double learning_rate = 1.0;  // initial trial step of the line search

    void validate() const;
};

struct LogisticFit {
    DirectionCoefficients direction;
    double bias = 0.0;
    std::size_t iterations = 0;
    bool converged = false;  // gradient norm fell below tolerance
    double gradient_norm = 0.0;
    std::vector<double> loss_trace;  // objective before the first step, then after each step
};

/// Regularized logistic regression by full-batch gradient descent with
/// backtracking (Armijo) line search. Objective:
///   mean log-loss + l2_penalty/2 * |w|^2   (bias unpenalized)
/// The weight vector is the semantic direction; the bias is reported but is
/// not part of the direction.
LogisticFit fit_logistic(const LabeledLatents& data, const LogisticFitConfig& cfg = {});

/// Gram-Schmidt in list order. Throws InvalidArgument on near-dependence
/// (residual norm below 1e-8 times the input norm).
std::vector<DirectionCoefficients> orthogonalize(const std::vector<DirectionCoefficients>& directions);

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Synthetic planted-direction data: latents ~ N(0, I_dim), labels
/// 1[<w*, z> > 0] for a random unit w*.
struct PlantedDataset {
    LabeledLatents data;
    Eigen::VectorXd planted;
};

PlantedDataset make_planted_dataset(std::size_t n, std::size_t dim, Seed seed);

}  // namespace facebo
