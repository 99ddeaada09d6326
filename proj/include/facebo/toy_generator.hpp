#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "facebo/face_space.hpp"
#include "facebo/random.hpp"

namespace facebo {

using ImageVector = Eigen::VectorXd;

/// Two-layer stand-in generator:
///   image = tanh(W_out * relu(W_in * z + b_in) + b_out)
/// W_in is hidden x latent, W_out is image x hidden.
struct ToyGenerator {
    Eigen::MatrixXd weights_in;
    Eigen::VectorXd bias_in;
    Eigen::MatrixXd weights_out;
    Eigen::VectorXd bias_out;
    Seed seed = 0;

    std::size_t latent_dim() const { return static_cast<std::size_t>(weights_in.cols()); }
    std::size_t hidden_dim() const { return static_cast<std::size_t>(weights_in.rows()); }
    std::size_t image_dim() const { return static_cast<std::size_t>(weights_out.rows()); }

    /// Gaussian weights scaled by 1/sqrt(fan_in); biases N(1, 0.5^2) for the
    /// hidden layer and N(0, 0.1^2) for the output layer.
    static ToyGenerator random(Seed seed, std::size_t latent = 16, std::size_t hidden = 32, std::size_t image = 64);

    void validate() const;

    /// Draw from the latent prior N(0, sd^2 I).
    LatentVector sample_latent(Seed seed, double sd = 0.5) const;
};

/// Fixed linear feature map F(I) = projection * I, with projection
/// features x image and full row rank.
struct PerceptualMap {
    Eigen::MatrixXd projection;

    std::size_t feature_dim() const { return static_cast<std::size_t>(projection.rows()); }
    std::size_t image_dim() const { return static_cast<std::size_t>(projection.cols()); }

    /// Gaussian entries scaled by 1/sqrt(image); redrawn until full row rank.
    static PerceptualMap random(Seed seed, std::size_t image = 64, std::size_t features = 32);
};

enum class InversionInit { zeros, seeded_random };

struct InversionConfig {
    std::size_t steps = 500;
    double learning_rate = 0.5;  // initial trial step
    InversionInit init = InversionInit::zeros;
    Seed init_seed = 0;
    bool backtracking = true;

    void validate() const;
};

struct InversionResult {
    LatentVector latent;
    double initial_loss = 0.0;
    std::vector<double> loss_trace;  // loss after each step
};

ImageVector generate(const ToyGenerator& gen, const LatentVector& z);

/// |F(a) - F(b)|^2
double perceptual_loss(const PerceptualMap& f, const ImageVector& a, const ImageVector& b);

/// Loss of z against target and its analytic gradient with respect to z.
double inversion_loss_and_gradient(const ToyGenerator& gen, const PerceptualMap& f, const ImageVector& target,
                                   const Eigen::VectorXd& z, Eigen::VectorXd* grad);

/// Gradient descent on z -> perceptual_loss(F, generate(gen, z), target).
InversionResult invert(const ToyGenerator& gen, const PerceptualMap& f, const ImageVector& target,
                       const InversionConfig& cfg = {});

}  // namespace facebo
