#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "facebo/face_space.hpp"
#include "facebo/random.hpp"
#include "facebo/session.hpp"

namespace facebo {

inline constexpr std::size_t kDefaultMapResolution = 41;

/// Posterior mean over a regular grid of the whole space, in standardized
/// rating units, row-major as produced by regular_grid().
struct ResponseMap {
    FaceSpace space;
    std::size_t resolution = 0;
    std::vector<double> values;
    std::string session_id;

    void validate() const;
};

ResponseMap response_map(const Session& session, std::size_t resolution = kDefaultMapResolution);

/// Noise-free responder surface on the same grid (rating units).
ResponseMap truth_map(const SimulatedResponder& responder, const FaceSpace& space,
                      std::size_t resolution = kDefaultMapResolution);

/// Pearson r over flattened grids. Throws InsufficientData for a constant map.
double pearson(const ResponseMap& a, const ResponseMap& b);
double pearson(const std::vector<double>& a, const std::vector<double>& b);

struct SimilarityMatrix {
    std::vector<std::string> labels;
    Eigen::MatrixXd values;

    // Means and sample standard deviations of off-diagonal entries, split by
    // whether the two maps share a group label. NaN when a class is empty
    // (sd is NaN below two entries).
    double intra_mean = 0.0;
    double intra_sd = 0.0;
    std::size_t intra_pairs = 0;
    double inter_mean = 0.0;
    double inter_sd = 0.0;
    std::size_t inter_pairs = 0;
};

/// Pairwise Pearson matrix. `groups` (one per map; e.g. participant ids)
/// drives the intra/inter summaries; when empty every map is its own group.
SimilarityMatrix similarity_matrix(const std::vector<ResponseMap>& maps, const std::vector<std::string>& groups = {});

struct ClusterResult {
    std::vector<std::size_t> assignments;
    std::vector<std::vector<double>> centroids;
    double inertia = 0.0;
    /// Absent when fewer than two clusters exist.
    std::optional<double> silhouette;
    Seed seed = 0;
    /// Inertia after each Lloyd iteration of the winning restart.
    std::vector<double> inertia_trace;
};

/// Lloyd's algorithm with k-means++ seeding; best of `restarts` by inertia.
/// A cluster left empty by an update takes the point farthest from its own
/// centroid.
ClusterResult kmeans(const std::vector<std::vector<double>>& rows, std::size_t k, Seed seed, std::size_t restarts = 32);
ClusterResult kmeans(const std::vector<ResponseMap>& maps, std::size_t k, Seed seed, std::size_t restarts = 32);

/// Mean silhouette with Euclidean distance. Samples alone in their cluster
/// score 0. Needs at least two non-empty clusters.
double silhouette(const std::vector<std::vector<double>>& rows, const std::vector<std::size_t>& assignments);
double silhouette(const std::vector<ResponseMap>& maps, const std::vector<std::size_t>& assignments);

/// Sum of squared distances of each row to its cluster mean.
double inertia(const std::vector<std::vector<double>>& rows, const std::vector<std::size_t>& assignments);

}  // namespace facebo
