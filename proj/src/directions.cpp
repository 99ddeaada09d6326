#include "facebo/directions.hpp"

#include <cmath>

#include "facebo/error.hpp"

namespace facebo {

namespace {

// log(1 + exp(x)) without overflow
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

struct Objective {
    const Eigen::MatrixXd& x;  // n x m
    const Eigen::VectorXd& y;  // 0/1
    double l2;

    double value(const Eigen::VectorXd& w, double b) const {
        const Eigen::VectorXd z = (x * w).array() + b;
        double loss = 0.0;
        for (Eigen::Index i = 0; i < z.size(); ++i) loss += softplus(z(i)) - y(i) * z(i);
        return loss / static_cast<double>(z.size()) + 0.5 * l2 * w.squaredNorm();
    }

    void gradient(const Eigen::VectorXd& w, double b, Eigen::VectorXd& gw, double& gb) const {
        Eigen::VectorXd r = (x * w).array() + b;
        for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = sigmoid(r(i)) - y(i);
        const double inv_n = 1.0 / static_cast<double>(r.size());
        gw = inv_n * (x.transpose() * r) + l2 * w;
        gb = inv_n * r.sum();
    }
};

}  // namespace

void LabeledLatents::validate() const {
    if (latents.size() != labels.size()) throw InvalidArgument("latents and labels differ in count");
    if (latents.size() < 2) throw InvalidArgument("need at least two labeled latents");
    bool has0 = false, has1 = false;
    const auto m = latents.front().values.size();
    if (m == 0) throw InvalidArgument("latents are empty");
    for (std::size_t i = 0; i < latents.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw InvalidArgument("labels must be 0 or 1");
        has0 |= labels[i] == 0;
        has1 |= labels[i] == 1;
        if (latents[i].values.size() != m) throw DimensionMismatch("latents differ in length");
        if (!latents[i].values.allFinite())
            throw InvalidArgument("latent " + std::to_string(i) + " has non-finite entries");
    }
    if (!has0 || !has1) throw InvalidArgument("both label classes must be present");
}

void LogisticFitConfig::validate() const {
    if (!(l2_penalty >= 0.0)) throw InvalidArgument("l2_penalty must be >= 0");
    if (max_iters == 0) throw InvalidArgument("max_iters must be positive");
    if (!(tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
}

LogisticFit fit_logistic(const LabeledLatents& data, const LogisticFitConfig& cfg) {
    data.validate();
    cfg.validate();
    const auto n = static_cast<Eigen::Index>(data.latents.size());
    const auto m = data.latents.front().values.size();
    Eigen::MatrixXd x(n, m);
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x.row(i) = data.latents[static_cast<std::size_t>(i)].values.transpose();
        y(i) = data.labels[static_cast<std::size_t>(i)];
    }
    const Objective obj{x, y, cfg.l2_penalty};

    Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
    double b = 0.0;
    double f = obj.value(w, b);
    LogisticFit out;
    out.loss_trace.push_back(f);

    Eigen::VectorXd gw;
    double gb = 0.0;
    double step = cfg.learning_rate;
    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        obj.gradient(w, b, gw, gb);
        const double gnorm2 = gw.squaredNorm() + gb * gb;
        out.gradient_norm = std::sqrt(gnorm2);
        if (out.gradient_norm < cfg.tolerance) {
            out.converged = true;
            break;
        }
        // Armijo backtracking; the trial step grows again after each success
        double t = step;
        bool accepted = false;
        for (int k = 0; k < 60; ++k) {
            const Eigen::VectorXd w_new = w - t * gw;
            const double b_new = b - t * gb;
            const double f_new = obj.value(w_new, b_new);
            if (f_new <= f - 0.5 * t * gnorm2) {
                w = w_new;
                b = b_new;
                f = f_new;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        out.iterations = it + 1;
        if (!accepted) break;  // no decrease representable; stop at current iterate
        out.loss_trace.push_back(f);
        step = 2.0 * t;
    }
    if (!out.converged) {
        obj.gradient(w, b, gw, gb);
        out.gradient_norm = std::sqrt(gw.squaredNorm() + gb * gb);
        out.converged = out.gradient_norm < cfg.tolerance;
    }
    out.direction = DirectionCoefficients{std::move(w), ""};
    out.bias = b;
    return out;
}

std::vector<DirectionCoefficients> orthogonalize(const std::vector<DirectionCoefficients>& directions) {
    std::vector<DirectionCoefficients> out;
    out.reserve(directions.size());
    for (const auto& d : directions) {
        if (!out.empty() && d.values.size() != out.front().values.size())
            throw DimensionMismatch("orthogonalize: directions differ in length");
        const double in_norm = d.values.norm();
        if (!(in_norm > 0.0)) throw InvalidArgument("orthogonalize: zero direction '" + d.label + "'");
        Eigen::VectorXd v = d.values;
        // modified Gram-Schmidt
        for (const auto& q : out) v -= (v.dot(q.values) / q.values.squaredNorm()) * q.values;
        if (v.norm() < 1e-8 * in_norm)
            throw InvalidArgument("orthogonalize: direction '" + d.label + "' is (nearly) dependent on earlier ones");
        out.push_back(DirectionCoefficients{std::move(v), d.label});
    }
    return out;
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw DimensionMismatch("cosine_similarity: length mismatch");
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) throw InvalidArgument("cosine_similarity: zero vector");
    return a.dot(b) / (na * nb);
}

PlantedDataset make_planted_dataset(std::size_t n, std::size_t dim, Seed seed) {
    if (n < 2 || dim == 0) throw InvalidArgument("make_planted_dataset: need n >= 2 and dim >= 1");
    Rng rng(seed);
    const auto m = static_cast<Eigen::Index>(dim);
    Eigen::VectorXd w(m);
    for (Eigen::Index j = 0; j < m; ++j) w(j) = rng.normal();
    w.normalize();
    PlantedDataset out{{}, w};
    out.data.latents.reserve(n);
    out.data.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::VectorXd z(m);
        for (Eigen::Index j = 0; j < m; ++j) z(j) = rng.normal();
        out.data.labels.push_back(w.dot(z) > 0.0 ? 1 : 0);
        out.data.latents.push_back(LatentVector{std::move(z)});
    }
    return out;
}

}  // namespace facebo
