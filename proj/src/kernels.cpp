#include "facebo/kernels.hpp"

#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "facebo/error.hpp"

namespace facebo::kernels {

namespace {

void check_dims(const GPModel& model, std::span<const Point> points) {
    for (const auto& p : points) {
        if (p.dim() != model.dim()) throw DimensionMismatch("grid point dimension differs from model");
    }
}

struct Moments {
    double mean = 0.0;
    double inv_norm = 0.0;  // 1 / sqrt(sum of squared deviations)
};

Moments row_moments(const std::vector<double>& row) {
    double sum = 0.0;
    for (double v : row) sum += v;
    const double mean = sum / static_cast<double>(row.size());
    double ss = 0.0;
    for (double v : row) ss += (v - mean) * (v - mean);
    if (!(ss > 0.0)) throw InsufficientData("pearson: constant input, correlation undefined");
    return {mean, 1.0 / std::sqrt(ss)};
}

double pearson_pair(const std::vector<double>& a, const Moments& ma, const std::vector<double>& b, const Moments& mb) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - ma.mean) * (b[k] - mb.mean);
    const double r = s * ma.inv_norm * mb.inv_norm;
    return r > 1.0 ? 1.0 : (r < -1.0 ? -1.0 : r);
}

void check_rows(std::span<const std::vector<double>> rows) {
    if (rows.empty()) throw InvalidArgument("pearson_matrix: no rows");
    for (const auto& r : rows) {
        if (r.size() != rows.front().size()) throw DimensionMismatch("pearson_matrix: rows differ in length");
        if (r.size() < 2) throw InsufficientData("pearson_matrix: rows need at least two entries");
    }
}

std::size_t nearest(const Eigen::MatrixXd& data, Eigen::Index row, const Eigen::MatrixXd& centroids, double& best) {
    std::size_t arg = 0;
    best = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < data.cols(); ++j) {
            const double t = data(row, j) - centroids(c, j);
            s += t * t;
        }
        if (s < best) {
            best = s;
            arg = static_cast<std::size_t>(c);
        }
    }
    return arg;
}

void check_assign(const Eigen::MatrixXd& data, const Eigen::MatrixXd& centroids) {
    if (centroids.rows() == 0) throw InvalidArgument("assign_nearest: no centroids");
    if (data.cols() != centroids.cols()) throw DimensionMismatch("assign_nearest: width mismatch");
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

GridPosterior posterior_grid(const GPModel& model, std::span<const Point> points) {
    check_dims(model, points);
    const auto n = static_cast<std::ptrdiff_t>(points.size());
    GridPosterior out{std::vector<double>(points.size()), std::vector<double>(points.size())};
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto pred = model.posterior_unchecked(points[static_cast<std::size_t>(i)].coords.data());
        out.mean[static_cast<std::size_t>(i)] = pred.mean;
        out.variance[static_cast<std::size_t>(i)] = pred.variance;
    }
    return out;
}

GridPosterior posterior_grid_serial(const GPModel& model, std::span<const Point> points) {
    check_dims(model, points);
    GridPosterior out{std::vector<double>(points.size()), std::vector<double>(points.size())};
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto pred = model.posterior_unchecked(points[i].coords.data());
        out.mean[i] = pred.mean;
        out.variance[i] = pred.variance;
    }
    return out;
}

std::vector<double> ucb_grid(const GPModel& model, std::span<const Point> points, double kappa) {
    check_dims(model, points);
    const auto n = static_cast<std::ptrdiff_t>(points.size());
    std::vector<double> out(points.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto pred = model.posterior_unchecked(points[static_cast<std::size_t>(i)].coords.data());
        out[static_cast<std::size_t>(i)] = pred.mean + kappa * std::sqrt(pred.variance);
    }
    return out;
}

std::vector<double> ucb_grid_serial(const GPModel& model, std::span<const Point> points, double kappa) {
    check_dims(model, points);
    std::vector<double> out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto pred = model.posterior_unchecked(points[i].coords.data());
        out[i] = pred.mean + kappa * std::sqrt(pred.variance);
    }
    return out;
}

Eigen::MatrixXd pearson_matrix(std::span<const std::vector<double>> rows) {
    check_rows(rows);
    const auto n = static_cast<std::ptrdiff_t>(rows.size());
    std::vector<Moments> m(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) m[i] = row_moments(rows[i]);
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(n, n);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        for (std::ptrdiff_t j = 0; j < i; ++j) {
            const auto a = static_cast<std::size_t>(i);
            const auto b = static_cast<std::size_t>(j);
            r(i, j) = r(j, i) = pearson_pair(rows[a], m[a], rows[b], m[b]);
        }
    }
    return r;
}

Eigen::MatrixXd pearson_matrix_serial(std::span<const std::vector<double>> rows) {
    check_rows(rows);
    const auto n = static_cast<Eigen::Index>(rows.size());
    std::vector<Moments> m(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) m[i] = row_moments(rows[i]);
    Eigen::MatrixXd r = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            const auto a = static_cast<std::size_t>(i);
            const auto b = static_cast<std::size_t>(j);
            r(i, j) = r(j, i) = pearson_pair(rows[a], m[a], rows[b], m[b]);
        }
    }
    return r;
}

Assignment assign_nearest(const Eigen::MatrixXd& data, const Eigen::MatrixXd& centroids) {
    check_assign(data, centroids);
    const auto n = static_cast<std::ptrdiff_t>(data.rows());
    Assignment out{std::vector<std::size_t>(static_cast<std::size_t>(n)), std::vector<double>(static_cast<std::size_t>(n))};
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        out.cluster[k] = nearest(data, i, centroids, out.sq_distance[k]);
    }
    return out;
}

Assignment assign_nearest_serial(const Eigen::MatrixXd& data, const Eigen::MatrixXd& centroids) {
    check_assign(data, centroids);
    const auto n = static_cast<std::size_t>(data.rows());
    Assignment out{std::vector<std::size_t>(n), std::vector<double>(n)};
    for (std::size_t k = 0; k < n; ++k) {
        out.cluster[k] = nearest(data, static_cast<Eigen::Index>(k), centroids, out.sq_distance[k]);
    }
    return out;
}

}  // namespace facebo::kernels
