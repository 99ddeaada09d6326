#include "facebo/face_space.hpp"

#include <algorithm>
#include <cmath>

#include "facebo/error.hpp"

namespace facebo {

Point::Point(std::initializer_list<double> c) : coords(static_cast<Eigen::Index>(c.size())) {
    Eigen::Index i = 0;
    for (double v : c) coords(i++) = v;
}

double distance(const Point& a, const Point& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch("distance: point dimensions differ");
    return (a.coords - b.coords).norm();
}

FaceSpace::FaceSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
    if (dims_.empty()) throw InvalidArgument("face space needs at least one dimension");
    std::optional<Eigen::Index> latent_len;
    for (const auto& d : dims_) {
        if (!std::isfinite(d.lower) || !std::isfinite(d.upper) || !(d.lower < d.upper))
            throw InvalidArgument("dimension '" + d.name + "': lower must be < upper");
        if (!d.direction) continue;
        const auto& v = d.direction->values;
        if (v.size() == 0 || !v.allFinite() || v.norm() == 0.0)
            throw InvalidArgument("dimension '" + d.name + "': direction must be finite and nonzero");
        if (latent_len && *latent_len != v.size())
            throw DimensionMismatch("dimension '" + d.name + "': direction length differs from the others");
        latent_len = v.size();
    }
}

FaceSpace FaceSpace::study_default() {
    return FaceSpace({Dimension{"emotion", -2.0, 2.0, std::nullopt},
                      Dimension{"age", -2.0, 2.0, std::nullopt}});
}

bool FaceSpace::has_directions() const {
    return !dims_.empty() &&
           std::all_of(dims_.begin(), dims_.end(), [](const Dimension& d) { return d.direction.has_value(); });
}

bool FaceSpace::contains(const Point& p, double tol) const {
    if (p.dim() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i) {
        if (!(p[i] >= dims_[i].lower - tol && p[i] <= dims_[i].upper + tol)) return false;
    }
    return true;
}

Point FaceSpace::clamp(const Point& p) const {
    if (p.dim() != dim()) throw DimensionMismatch("clamp: point dimension differs from space");
    Point out = p;
    for (std::size_t i = 0; i < dim(); ++i) {
        auto k = static_cast<Eigen::Index>(i);
        out.coords(k) = std::clamp(out.coords(k), dims_[i].lower, dims_[i].upper);
    }
    return out;
}

Point FaceSpace::center() const {
    Eigen::VectorXd c(static_cast<Eigen::Index>(dim()));
    for (std::size_t i = 0; i < dim(); ++i)
        c(static_cast<Eigen::Index>(i)) = 0.5 * (dims_[i].lower + dims_[i].upper);
    return Point(std::move(c));
}

bool FaceSpace::same_geometry(const FaceSpace& other) const {
    if (dim() != other.dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i) {
        const auto& a = dims_[i];
        const auto& b = other.dims_[i];
        if (a.name != b.name || a.lower != b.lower || a.upper != b.upper) return false;
    }
    return true;
}

LatentVector apply_directions(const LatentVector& base, const FaceSpace& space, const Point& p) {
    if (p.dim() != space.dim())
        throw DimensionMismatch("apply_directions: point has " + std::to_string(p.dim()) +
                                " coordinates, space has " + std::to_string(space.dim()));
    LatentVector out = base;
    for (std::size_t i = 0; i < space.dim(); ++i) {
        const auto& dir = space[i].direction;
        if (!dir) throw InvalidArgument("apply_directions: dimension '" + space[i].name + "' has no direction");
        if (dir->values.size() != base.values.size())
            throw DimensionMismatch("apply_directions: direction '" + space[i].name +
                                    "' length differs from base latent");
        out.values += dir->values * p[i];
    }
    return out;
}

FaceSpace normalize_directions(const FaceSpace& space) {
    std::vector<Dimension> dims = space.dimensions();
    for (auto& d : dims) {
        if (!d.direction) continue;
        const double norm = d.direction->values.norm();
        d.direction->values /= norm;
        d.lower *= norm;
        d.upper *= norm;
    }
    return FaceSpace(std::move(dims));
}

std::vector<Point> sample_uniform(const FaceSpace& space, std::size_t n, Seed seed) {
    if (n == 0) throw InvalidArgument("sample_uniform: n must be >= 1");
    Rng rng(seed);
    std::vector<Point> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        Eigen::VectorXd c(static_cast<Eigen::Index>(space.dim()));
        for (std::size_t i = 0; i < space.dim(); ++i) {
            // uniform() is in [0,1); the min() guards rounding past upper
            const double v = rng.uniform(space[i].lower, space[i].upper);
            c(static_cast<Eigen::Index>(i)) = std::min(v, space[i].upper);
        }
        out.emplace_back(std::move(c));
    }
    return out;
}

std::size_t grid_size(std::size_t dim, std::size_t resolution, std::size_t budget) {
    if (resolution < 2) throw InvalidArgument("grid resolution must be >= 2");
    if (dim == 0) throw InvalidArgument("grid needs at least one dimension");
    std::size_t count = 1;
    for (std::size_t i = 0; i < dim; ++i) {
        if (count > budget / resolution) {
            count = budget + 1;
            break;
        }
        count *= resolution;
    }
    if (count > budget || count * dim > budget)
        throw BudgetExceeded("grid of " + std::to_string(resolution) + "^" + std::to_string(dim) +
                             " points exceeds the evaluation budget of " + std::to_string(budget));
    return count;
}

std::vector<Point> regular_grid(const FaceSpace& space, std::size_t resolution, std::size_t budget) {
    const std::size_t d = space.dim();
    const std::size_t count = grid_size(d, resolution, budget);
    std::vector<std::vector<double>> axes(d);
    for (std::size_t i = 0; i < d; ++i) {
        axes[i].resize(resolution);
        const double lo = space[i].lower;
        const double hi = space[i].upper;
        for (std::size_t j = 0; j < resolution; ++j) {
            // endpoints written exactly so the grid is inclusive of bounds
            axes[i][j] = (j + 1 == resolution) ? hi : lo + (hi - lo) * static_cast<double>(j) / (resolution - 1);
        }
    }
    std::vector<Point> out;
    out.reserve(count);
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t k = 0; k < count; ++k) {
        Eigen::VectorXd c(static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < d; ++i) c(static_cast<Eigen::Index>(i)) = axes[i][idx[i]];
        out.emplace_back(std::move(c));
        for (std::size_t i = d; i-- > 0;) {
            if (++idx[i] < resolution) break;
            idx[i] = 0;
        }
    }
    return out;
}

}  // namespace facebo
