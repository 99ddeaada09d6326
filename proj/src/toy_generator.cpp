#include "facebo/toy_generator.hpp"

#include <cmath>

#include <Eigen/QR>

#include "facebo/error.hpp"

namespace facebo {

namespace {

Eigen::MatrixXd gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = scale * rng.normal();
    return m;
}

// tanh rounds to exactly +-1 for |u| > ~19; keep outputs strictly inside (-1, 1)
Eigen::VectorXd bounded_tanh(const Eigen::VectorXd& u) {
    const double edge = std::nextafter(1.0, 0.0);
    return u.array().tanh().cwiseMax(-edge).cwiseMin(edge).matrix();
}

Eigen::VectorXd gaussian_vector(Rng& rng, Eigen::Index n, double scale) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * rng.normal();
    return v;
}

}  // namespace

ToyGenerator ToyGenerator::random(Seed seed, std::size_t latent, std::size_t hidden, std::size_t image) {
    if (latent == 0 || hidden == 0 || image == 0) throw InvalidArgument("generator dimensions must be positive");
    Rng rng(seed);
    const auto m = static_cast<Eigen::Index>(latent);
    const auto h = static_cast<Eigen::Index>(hidden);
    const auto p = static_cast<Eigen::Index>(image);
    ToyGenerator g;
    g.weights_in = gaussian_matrix(rng, h, m, 1.0 / std::sqrt(static_cast<double>(m)));
    g.bias_in = gaussian_vector(rng, h, 0.5);
    g.bias_in.array() += 1.0;
    g.weights_out = gaussian_matrix(rng, p, h, 1.0 / std::sqrt(static_cast<double>(h)));
    g.bias_out = gaussian_vector(rng, p, 0.1);
    g.seed = seed;
    return g;
}

void ToyGenerator::validate() const {
    if (weights_in.size() == 0 || weights_out.size() == 0) throw InvalidArgument("generator has empty weights");
    if (bias_in.size() != weights_in.rows() || weights_out.cols() != weights_in.rows() ||
        bias_out.size() != weights_out.rows())
        throw DimensionMismatch("generator layer shapes are inconsistent");
    if (!weights_in.allFinite() || !bias_in.allFinite() || !weights_out.allFinite() || !bias_out.allFinite())
        throw InvalidArgument("generator has non-finite weights");
}

LatentVector ToyGenerator::sample_latent(Seed seed, double sd) const {
    if (!(sd > 0.0)) throw InvalidArgument("sample_latent: sd must be positive");
    Rng rng(seed);
    return LatentVector{gaussian_vector(rng, static_cast<Eigen::Index>(latent_dim()), sd)};
}

PerceptualMap PerceptualMap::random(Seed seed, std::size_t image, std::size_t features) {
    if (features == 0 || image == 0) throw InvalidArgument("perceptual map dimensions must be positive");
    if (features > image) throw InvalidArgument("perceptual map cannot have full row rank with features > image");
    const auto q = static_cast<Eigen::Index>(features);
    const auto p = static_cast<Eigen::Index>(image);
    for (std::uint64_t attempt = 0;; ++attempt) {
        Rng rng(derive_seed(seed, attempt));
        PerceptualMap f{gaussian_matrix(rng, q, p, 1.0 / std::sqrt(static_cast<double>(p)))};
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(f.projection.transpose());
        if (qr.rank() == q) return f;
    }
}

void InversionConfig::validate() const {
    if (steps == 0) throw InvalidArgument("inversion steps must be >= 1");
    if (!(learning_rate > 0.0)) throw InvalidArgument("inversion learning_rate must be positive");
}

ImageVector generate(const ToyGenerator& gen, const LatentVector& z) {
    if (z.size() != gen.latent_dim())
        throw DimensionMismatch("generate: latent has length " + std::to_string(z.size()) + ", generator expects " +
                                std::to_string(gen.latent_dim()));
    const Eigen::VectorXd hidden = (gen.weights_in * z.values + gen.bias_in).cwiseMax(0.0);
    return bounded_tanh(gen.weights_out * hidden + gen.bias_out);
}

double perceptual_loss(const PerceptualMap& f, const ImageVector& a, const ImageVector& b) {
    if (a.size() != b.size()) throw DimensionMismatch("perceptual_loss: images differ in length");
    if (static_cast<std::size_t>(a.size()) != f.image_dim())
        throw DimensionMismatch("perceptual_loss: image length differs from the feature map");
    // F is linear, so F(a) - F(b) = F(a - b)
    return (f.projection * (a - b)).squaredNorm();
}

double inversion_loss_and_gradient(const ToyGenerator& gen, const PerceptualMap& f, const ImageVector& target,
                                   const Eigen::VectorXd& z, Eigen::VectorXd* grad) {
    const Eigen::VectorXd pre_hidden = gen.weights_in * z + gen.bias_in;
    const Eigen::VectorXd hidden = pre_hidden.cwiseMax(0.0);
    const Eigen::VectorXd image = bounded_tanh(gen.weights_out * hidden + gen.bias_out);
    const Eigen::VectorXd feat_diff = f.projection * (image - target);
    const double loss = feat_diff.squaredNorm();
    if (grad) {
        // d loss / d image
        Eigen::VectorXd g = 2.0 * (f.projection.transpose() * feat_diff);
        // through tanh: d tanh(u)/du = 1 - tanh^2
        g.array() *= 1.0 - image.array().square();
        // through the output layer
        Eigen::VectorXd gh = gen.weights_out.transpose() * g;
        // through relu (derivative taken as 0 at the kink)
        for (Eigen::Index i = 0; i < gh.size(); ++i)
            if (!(pre_hidden(i) > 0.0)) gh(i) = 0.0;
        *grad = gen.weights_in.transpose() * gh;
    }
    return loss;
}

InversionResult invert(const ToyGenerator& gen, const PerceptualMap& f, const ImageVector& target,
                       const InversionConfig& cfg) {
    cfg.validate();
    gen.validate();
    if (static_cast<std::size_t>(target.size()) != gen.image_dim())
        throw DimensionMismatch("invert: target has length " + std::to_string(target.size()) +
                                ", generator produces " + std::to_string(gen.image_dim()));
    if (f.image_dim() != gen.image_dim()) throw DimensionMismatch("invert: feature map and generator disagree");

    const auto m = static_cast<Eigen::Index>(gen.latent_dim());
    Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
    if (cfg.init == InversionInit::seeded_random) {
        Rng rng(cfg.init_seed);
        for (Eigen::Index i = 0; i < m; ++i) z(i) = 0.1 * rng.normal();
    }

    InversionResult out;
    Eigen::VectorXd g;
    double loss = inversion_loss_and_gradient(gen, f, target, z, &g);
    out.initial_loss = loss;
    out.loss_trace.reserve(cfg.steps);
    double step = cfg.learning_rate;
    for (std::size_t s = 0; s < cfg.steps; ++s) {
        const double g2 = g.squaredNorm();
        if (!cfg.backtracking) {
            z -= cfg.learning_rate * g;
            loss = inversion_loss_and_gradient(gen, f, target, z, &g);
        } else if (g2 > 0.0) {
            // Armijo backtracking; on success the next trial step doubles
            double t = step;
            for (int k = 0; k < 60; ++k) {
                const Eigen::VectorXd z_new = z - t * g;
                const double l_new = inversion_loss_and_gradient(gen, f, target, z_new, nullptr);
                if (l_new <= loss - 0.5 * t * g2) {
                    z = z_new;
                    loss = inversion_loss_and_gradient(gen, f, target, z, &g);
                    step = 2.0 * t;
                    break;
                }
                t *= 0.5;
            }
        }
        if (!std::isfinite(loss))
            throw NumericalDegeneracy("invert: loss became non-finite at step " + std::to_string(s));
        out.loss_trace.push_back(loss);
    }
    out.latent = LatentVector{std::move(z)};
    return out;
}

}  // namespace facebo
