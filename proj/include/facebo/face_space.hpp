#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "facebo/random.hpp"

namespace facebo {

/// A location in the bounded search space, one coordinate per dimension.
struct Point {
    Eigen::VectorXd coords;

    Point() = default;
    explicit Point(Eigen::VectorXd c) : coords(std::move(c)) {}
    Point(std::initializer_list<double> c);

    std::size_t dim() const { return static_cast<std::size_t>(coords.size()); }
    double operator[](std::size_t i) const { return coords(static_cast<Eigen::Index>(i)); }

    friend bool operator==(const Point& a, const Point& b) {
        return a.coords.size() == b.coords.size() && a.coords == b.coords;
    }
};

double distance(const Point& a, const Point& b);

/// Flat generator input.
struct LatentVector {
    Eigen::VectorXd values;

    std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

/// A semantic direction in latent space, as fitted (not normalized).
struct DirectionCoefficients {
    Eigen::VectorXd values;
    std::string label;
};

struct Dimension {
    std::string name;
    double lower = -2.0;
    double upper = 2.0;
    std::optional<DirectionCoefficients> direction;
};

/// The hyper-rectangle searched by the optimizer. Each axis scales one
/// latent direction.
class FaceSpace {
public:
    FaceSpace() = default;
    explicit FaceSpace(std::vector<Dimension> dims);

    /// Two axes, "emotion" and "age", both bounded to [-2, 2], no directions.
    static FaceSpace study_default();

    std::size_t dim() const { return dims_.size(); }
    const std::vector<Dimension>& dimensions() const { return dims_; }
    const Dimension& operator[](std::size_t i) const { return dims_[i]; }

    bool has_directions() const;
    bool contains(const Point& p, double tol = 0.0) const;
    Point clamp(const Point& p) const;
    Point center() const;

    /// True when names and bounds agree (directions are ignored).
    bool same_geometry(const FaceSpace& other) const;

private:
    std::vector<Dimension> dims_;
};

/// base + sum_i direction_i * coords_i
LatentVector apply_directions(const LatentVector& base, const FaceSpace& space, const Point& p);

/// Rescales every direction to unit norm and folds the norm into the bounds,
/// so the reachable set of latents is unchanged.
FaceSpace normalize_directions(const FaceSpace& space);

std::vector<Point> sample_uniform(const FaceSpace& space, std::size_t n, Seed seed);

inline constexpr std::size_t kDefaultEvalBudget = 1'000'000;

/// Number of points of a regular grid; throws BudgetExceeded when
/// dim * resolution^dim exceeds `budget`.
std::size_t grid_size(std::size_t dim, std::size_t resolution, std::size_t budget = kDefaultEvalBudget);

/// Inclusive lattice of resolution^d points. Row-major: the last dimension
/// varies fastest.
std::vector<Point> regular_grid(const FaceSpace& space, std::size_t resolution,
                                std::size_t budget = kDefaultEvalBudget);

}  // namespace facebo
