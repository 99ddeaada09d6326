#include "facebo/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "facebo/error.hpp"
#include "facebo/kernels.hpp"

namespace facebo {

namespace {

using Rows = std::vector<std::vector<double>>;

void check_same_grid(const ResponseMap& a, const ResponseMap& b) {
    if (a.resolution != b.resolution || !a.space.same_geometry(b.space))
        throw DimensionMismatch("response maps '" + a.session_id + "' and '" + b.session_id +
                                "' use different spaces or resolutions");
}

Eigen::MatrixXd to_matrix(const Rows& rows) {
    if (rows.empty()) throw InvalidArgument("no rows");
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto w = static_cast<Eigen::Index>(rows.front().size());
    Eigen::MatrixXd m(n, w);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(r.size()) != w) throw DimensionMismatch("rows differ in length");
        for (Eigen::Index j = 0; j < w; ++j) m(i, j) = r[static_cast<std::size_t>(j)];
    }
    return m;
}

Rows map_rows(const std::vector<ResponseMap>& maps) {
    if (maps.empty()) throw InvalidArgument("no response maps");
    Rows rows;
    rows.reserve(maps.size());
    for (const auto& m : maps) {
        check_same_grid(maps.front(), m);
        rows.push_back(m.values);
    }
    return rows;
}

struct MeanSd {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double sd = std::numeric_limits<double>::quiet_NaN();
};

MeanSd mean_sd(const std::vector<double>& v) {
    MeanSd out;
    if (v.empty()) return out;
    out.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() >= 2) {
        double ss = 0.0;
        for (double x : v) ss += (x - out.mean) * (x - out.mean);
        out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return out;
}

Eigen::MatrixXd centroids_of(const Eigen::MatrixXd& data, const std::vector<std::size_t>& assign, std::size_t k) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), data.cols());
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < assign.size(); ++i) {
        c.row(static_cast<Eigen::Index>(assign[i])) += data.row(static_cast<Eigen::Index>(i));
        ++count[assign[i]];
    }
    for (std::size_t j = 0; j < k; ++j) {
        if (count[j] > 0) c.row(static_cast<Eigen::Index>(j)) /= static_cast<double>(count[j]);
    }
    return c;
}

double sq_dist(const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b, Eigen::Index j) {
    return (a.row(i) - b.row(j)).squaredNorm();
}

Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& data, std::size_t k, Rng& rng) {
    const auto n = data.rows();
    Eigen::MatrixXd c(static_cast<Eigen::Index>(k), data.cols());
    c.row(0) = data.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
    std::vector<double> d2(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = sq_dist(data, i, c, 0);
    for (std::size_t j = 1; j < k; ++j) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        Eigen::Index pick = 0;
        if (total > 0.0) {
            const double u = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2[static_cast<std::size_t>(i)];
                if (u < acc) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
        }
        c.row(static_cast<Eigen::Index>(j)) = data.row(pick);
        for (Eigen::Index i = 0; i < n; ++i) {
            d2[static_cast<std::size_t>(i)] =
                std::min(d2[static_cast<std::size_t>(i)], sq_dist(data, i, c, static_cast<Eigen::Index>(j)));
        }
    }
    return c;
}

struct LloydRun {
    std::vector<std::size_t> assign;
    Eigen::MatrixXd centroids;
    double inertia = 0.0;
    std::vector<double> trace;
};

LloydRun lloyd(const Eigen::MatrixXd& data, std::size_t k, Rng& rng) {
    constexpr int kMaxIters = 300;
    LloydRun run;
    run.centroids = kmeanspp_init(data, k, rng);
    for (int it = 0; it < kMaxIters; ++it) {
        auto a = kernels::assign_nearest(data, run.centroids);

        // repair empty clusters with the point farthest from its centroid
        std::vector<std::size_t> count(k, 0);
        for (auto c : a.cluster) ++count[c];
        for (std::size_t j = 0; j < k; ++j) {
            if (count[j] > 0) continue;
            std::size_t far = a.cluster.size();
            for (std::size_t i = 0; i < a.cluster.size(); ++i) {
                if (count[a.cluster[i]] < 2) continue;
                if (far == a.cluster.size() || a.sq_distance[i] > a.sq_distance[far]) far = i;
            }
            --count[a.cluster[far]];
            a.cluster[far] = j;
            a.sq_distance[far] = 0.0;
            count[j] = 1;
            run.centroids.row(static_cast<Eigen::Index>(j)) = data.row(static_cast<Eigen::Index>(far));
        }

        const double current = std::accumulate(a.sq_distance.begin(), a.sq_distance.end(), 0.0);
        run.trace.push_back(current);
        const bool stable = a.cluster == run.assign;
        run.assign = std::move(a.cluster);
        run.centroids = centroids_of(data, run.assign, k);
        if (stable) break;
    }
    run.inertia = 0.0;
    for (std::size_t i = 0; i < run.assign.size(); ++i)
        run.inertia += sq_dist(data, static_cast<Eigen::Index>(i), run.centroids, static_cast<Eigen::Index>(run.assign[i]));
    return run;
}

}  // namespace

void ResponseMap::validate() const {
    const std::size_t expected = grid_size(space.dim(), resolution, std::numeric_limits<std::size_t>::max());
    if (values.size() != expected) throw DimensionMismatch("response map has the wrong number of values");
    for (double v : values)
        if (!std::isfinite(v)) throw InvalidArgument("response map has non-finite values");
}

ResponseMap response_map(const Session& session, std::size_t resolution) {
    if (session.history().size() < 2)
        throw InsufficientData("response_map: session '" + session.id() + "' needs at least two observations");
    const auto& space = session.config().space;
    const auto grid = regular_grid(space, resolution);
    auto post = kernels::posterior_grid(session.model(), grid);
    return ResponseMap{space, resolution, std::move(post.mean), session.id()};
}

ResponseMap truth_map(const SimulatedResponder& responder, const FaceSpace& space, std::size_t resolution) {
    const auto grid = regular_grid(space, resolution);
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) values[i] = responder.truth(grid[i]);
    return ResponseMap{space, resolution, std::move(values), "truth"};
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const std::vector<std::vector<double>> rows{a, b};
    return kernels::pearson_matrix_serial(rows)(1, 0);
}

double pearson(const ResponseMap& a, const ResponseMap& b) {
    check_same_grid(a, b);
    return pearson(a.values, b.values);
}

SimilarityMatrix similarity_matrix(const std::vector<ResponseMap>& maps, const std::vector<std::string>& groups) {
    if (maps.size() < 2) throw InsufficientData("similarity_matrix: needs at least two maps");
    if (!groups.empty() && groups.size() != maps.size())
        throw InvalidArgument("similarity_matrix: one group label per map is required");
    const Rows rows = map_rows(maps);
    SimilarityMatrix out;
    for (const auto& m : maps) out.labels.push_back(m.session_id);
    out.values = kernels::pearson_matrix(rows);

    std::vector<double> intra, inter;
    for (std::size_t i = 0; i < maps.size(); ++i) {
        for (std::size_t j = i + 1; j < maps.size(); ++j) {
            const bool same = !groups.empty() && groups[i] == groups[j];
            (same ? intra : inter)
                .push_back(out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
    }
    const auto a = mean_sd(intra);
    const auto b = mean_sd(inter);
    out.intra_mean = a.mean;
    out.intra_sd = a.sd;
    out.intra_pairs = intra.size();
    out.inter_mean = b.mean;
    out.inter_sd = b.sd;
    out.inter_pairs = inter.size();
    return out;
}

double inertia(const Rows& rows, const std::vector<std::size_t>& assignments) {
    if (rows.size() != assignments.size()) throw InvalidArgument("inertia: one assignment per row is required");
    const Eigen::MatrixXd data = to_matrix(rows);
    const std::size_t k = *std::max_element(assignments.begin(), assignments.end()) + 1;
    const Eigen::MatrixXd c = centroids_of(data, assignments, k);
    double total = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i)
        total += sq_dist(data, static_cast<Eigen::Index>(i), c, static_cast<Eigen::Index>(assignments[i]));
    return total;
}

ClusterResult kmeans(const Rows& rows, std::size_t k, Seed seed, std::size_t restarts) {
    if (k < 1) throw InvalidArgument("kmeans: k must be >= 1");
    if (k > rows.size())
        throw InvalidArgument("kmeans: k=" + std::to_string(k) + " exceeds the number of samples (" +
                              std::to_string(rows.size()) + ")");
    if (restarts < 1) throw InvalidArgument("kmeans: restarts must be >= 1");
    const Eigen::MatrixXd data = to_matrix(rows);

    std::optional<LloydRun> best;
    for (std::size_t r = 0; r < restarts; ++r) {
        Rng rng(derive_seed(seed, r));
        LloydRun run = lloyd(data, k, rng);
        if (!best || run.inertia < best->inertia) best = std::move(run);
    }

    ClusterResult out;
    out.assignments = best->assign;
    out.inertia = best->inertia;
    out.inertia_trace = best->trace;
    out.seed = seed;
    for (Eigen::Index j = 0; j < best->centroids.rows(); ++j) {
        const Eigen::VectorXd row = best->centroids.row(j).transpose();
        out.centroids.emplace_back(row.data(), row.data() + row.size());
    }
    if (k >= 2) out.silhouette = silhouette(rows, out.assignments);
    return out;
}

ClusterResult kmeans(const std::vector<ResponseMap>& maps, std::size_t k, Seed seed, std::size_t restarts) {
    return kmeans(map_rows(maps), k, seed, restarts);
}

double silhouette(const Rows& rows, const std::vector<std::size_t>& assignments) {
    if (rows.size() != assignments.size()) throw InvalidArgument("silhouette: one assignment per row is required");
    if (rows.empty()) throw InsufficientData("silhouette: no samples");
    const Eigen::MatrixXd data = to_matrix(rows);
    const std::size_t k = *std::max_element(assignments.begin(), assignments.end()) + 1;
    std::vector<std::size_t> count(k, 0);
    for (auto a : assignments) ++count[a];
    const auto nonempty = std::count_if(count.begin(), count.end(), [](std::size_t c) { return c > 0; });
    if (nonempty < 2) throw InsufficientData("silhouette: needs at least two non-empty clusters");

    const std::size_t n = rows.size();
    double total = 0.0;
    std::vector<double> dist_sum(k);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t own = assignments[i];
        if (count[own] == 1) continue;  // singleton contributes 0
        std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            dist_sum[assignments[j]] += std::sqrt(sq_dist(data, static_cast<Eigen::Index>(i), data, static_cast<Eigen::Index>(j)));
        }
        const double a = dist_sum[own] / static_cast<double>(count[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            if (c != own && count[c] > 0) b = std::min(b, dist_sum[c] / static_cast<double>(count[c]));
        }
        const double denom = std::max(a, b);
        total += denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return total / static_cast<double>(n);
}

double silhouette(const std::vector<ResponseMap>& maps, const std::vector<std::size_t>& assignments) {
    return silhouette(map_rows(maps), assignments);
}

}  // namespace facebo
