#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "facebo/face_space.hpp"
#include "facebo/gp.hpp"

// Data-parallel inner loops. Each kernel has an OpenMP version and a serial
// reference with the same per-element arithmetic, so the two agree bitwise;
// the tests hold them to that and the benchmark compares their speed.
namespace facebo::kernels {

struct GridPosterior {
    std::vector<double> mean;
    std::vector<double> variance;
};

GridPosterior posterior_grid(const GPModel& model, std::span<const Point> points);
GridPosterior posterior_grid_serial(const GPModel& model, std::span<const Point> points);

/// mean + kappa * sqrt(variance) at every point.
std::vector<double> ucb_grid(const GPModel& model, std::span<const Point> points, double kappa);
std::vector<double> ucb_grid_serial(const GPModel& model, std::span<const Point> points, double kappa);

/// Pairwise Pearson correlation of equally long rows. Throws InsufficientData
/// if any row is constant.
Eigen::MatrixXd pearson_matrix(std::span<const std::vector<double>> rows);
Eigen::MatrixXd pearson_matrix_serial(std::span<const std::vector<double>> rows);

struct Assignment {
    std::vector<std::size_t> cluster;
    std::vector<double> sq_distance;  // to the assigned centroid
};

/// Nearest centroid (squared Euclidean) per row of `data`; lowest index wins ties.
Assignment assign_nearest(const Eigen::MatrixXd& data, const Eigen::MatrixXd& centroids);
Assignment assign_nearest_serial(const Eigen::MatrixXd& data, const Eigen::MatrixXd& centroids);

int max_threads();

}  // namespace facebo::kernels
