#include <doctest.h>

#include <cmath>
#include <set>

#include "facebo/analysis.hpp"
#include "facebo/error.hpp"
#include "oracle.hpp"

using namespace facebo;

namespace {

ResponseMap map_of(std::vector<double> v, std::size_t res = 2, std::string id = "m") {
    return ResponseMap{FaceSpace::study_default(), res, std::move(v), std::move(id)};
}

Session simulated(Seed seed, Point peak, Seed responder_seed) {
    SessionConfig cfg;
    cfg.seed = seed;
    SimulatedResponder r;
    r.peak = std::move(peak);
    r.seed = responder_seed;
    return run_simulated(cfg, r, "s" + std::to_string(seed));
}

std::vector<std::vector<double>> two_blobs(std::size_t n, std::size_t dim, Seed seed, double sep, double spread) {
    Rng rng(seed);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> r(dim);
        for (auto& v : r) v = (i % 2 ? sep : 0.0) + spread * rng.normal();
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

TEST_CASE("response map equals direct posterior calls on the grid") {
    const auto s = simulated(21, Point{-0.04, -0.06}, 1);
    const auto m = response_map(s, 41);
    const auto grid = regular_grid(s.config().space, 41);
    REQUIRE(m.values.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(m.values[i] == s.model().posterior(grid[i]).mean);
    CHECK(m.session_id == s.id());
    for (double v : m.values) CHECK(std::isfinite(v));
}

TEST_CASE("response map peaks next to the dominant sample") {
    SessionConfig cfg;
    cfg.hyper = KernelHyperparams{0.5, 1.0, 1e-8};
    auto s = create_session(cfg);
    for (double r : {10.0, 0.0, 0.0, 0.0, 0.0}) {
        s.next_query();
        s.record_rating(r, 0);
    }
    const auto m = response_map(s, 41);
    const auto grid = regular_grid(cfg.space, 41);
    std::size_t arg = 0;
    for (std::size_t i = 1; i < m.values.size(); ++i)
        if (m.values[i] > m.values[arg]) arg = i;
    std::size_t nearest = 0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (distance(grid[i], s.history()[0].point) < distance(grid[nearest], s.history()[0].point)) nearest = i;
    CHECK(arg == nearest);
}

TEST_CASE("response map needs two observations") {
    auto s = create_session(SessionConfig{});
    s.next_query();
    s.record_rating(5, 0);
    CHECK_THROWS_AS(response_map(s), InsufficientData);
}

TEST_CASE("pearson") {
    const auto a = map_of({1, 2, 3, 4});
    CHECK(pearson(a, a) == doctest::Approx(1.0));
    CHECK(pearson(a, map_of({7 - 1.0, 7 - 2.0, 7 - 3.0, 7 - 4.0})) == doctest::Approx(-1.0));
    // deviations (-1.5,-.5,.5,1.5) and (-.5,-1.5,1.5,.5): cov 3, variances 5 and 5
    CHECK(pearson(a, map_of({2, 1, 4, 3})) == doctest::Approx(0.6).epsilon(1e-14));
    CHECK(pearson(a, map_of({3 * 2.0 + 1, 3 * 1.0 + 1, 3 * 4.0 + 1, 3 * 3.0 + 1})) == doctest::Approx(0.6));
    CHECK_THROWS_AS(pearson(a, map_of({5, 5, 5, 5})), InsufficientData);
    CHECK_THROWS_AS(pearson(a, map_of({1, 2, 3, 4, 5, 6, 7, 8, 9}, 3)), DimensionMismatch);
}

TEST_CASE("similarity matrix") {
    const auto a = map_of({1, 2, 3, 4}, 2, "a");
    SUBCASE("duplicate map") {
        const auto m = similarity_matrix({a, a});
        CHECK(m.values.isApprox(Eigen::MatrixXd::Ones(2, 2)));
    }
    SUBCASE("negated map") {
        const auto neg = map_of({-1, -2, -3, -4}, 2, "n");
        const auto b = map_of({2, 1, 4, 3}, 2, "b");
        const auto m = similarity_matrix({a, neg, b});
        CHECK(m.values(0, 1) == doctest::Approx(-1.0));
        CHECK(m.values(1, 0) == m.values(0, 1));
        CHECK(m.values(1, 2) == doctest::Approx(-0.6));
        for (int i = 0; i < 3; ++i) CHECK(m.values(i, i) == 1.0);
        CHECK(m.values == m.values.transpose());
        CHECK(m.labels == std::vector<std::string>{"a", "n", "b"});
    }
    SUBCASE("group summaries") {
        const auto b = map_of({1, 2, 3, 5}, 2, "b");
        const auto c = map_of({4, 3, 2, 1}, 2, "c");
        const auto m = similarity_matrix({a, b, c}, {"p", "p", "q"});
        CHECK(m.intra_pairs == 1);
        CHECK(m.inter_pairs == 2);
        CHECK(m.intra_mean == doctest::Approx(m.values(0, 1)));
        CHECK(m.inter_mean == doctest::Approx((m.values(0, 2) + m.values(1, 2)) / 2));
        CHECK(std::isnan(m.intra_sd));
    }
    CHECK_THROWS_AS(similarity_matrix({a}), InsufficientData);
}

TEST_CASE("test-retest cohort: intra exceeds inter") {
    const std::vector<Point> peaks{{-1.2, -1.0}, {1.1, 1.2}, {-1.0, 1.3}, {1.3, -1.1}, {0.0, 0.0}, {0.2, -1.4}};
    std::vector<ResponseMap> maps;
    std::vector<std::string> groups;
    for (std::size_t p = 0; p < peaks.size(); ++p) {
        for (Seed run = 0; run < 2; ++run) {
            maps.push_back(response_map(simulated(100 * p + run, peaks[p], 1000 * p + run)));
            groups.push_back("p" + std::to_string(p));
        }
    }
    const auto m = similarity_matrix(maps, groups);
    CHECK(m.intra_pairs == 6);
    CHECK(m.inter_pairs == 60);
    CHECK(m.intra_mean > m.inter_mean);
}

TEST_CASE("doubling resolution barely moves pairwise r") {
    const auto a = simulated(1, Point{-0.5, 0.3}, 11);
    const auto b = simulated(2, Point{0.4, -0.2}, 12);
    const double r41 = pearson(response_map(a, 41), response_map(b, 41));
    const double r81 = pearson(response_map(a, 81), response_map(b, 81));
    CHECK(std::abs(r41 - r81) < 0.01);
}

TEST_CASE("truth map") {
    SimulatedResponder r;
    const auto m = truth_map(r, FaceSpace::study_default(), 5);
    const auto grid = regular_grid(FaceSpace::study_default(), 5);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(m.values[i] == r.truth(grid[i]));
}

TEST_CASE("kmeans basics") {
    const auto rows = two_blobs(8, 3, 4, 10.0, 0.1);
    SUBCASE("k=1 centroid is the mean") {
        const auto c = kmeans(rows, 1, 0);
        for (std::size_t j = 0; j < 3; ++j) {
            double mean = 0;
            for (const auto& r : rows) mean += r[j];
            CHECK(c.centroids[0][j] == doctest::Approx(mean / 8));
        }
        CHECK_FALSE(c.silhouette);
    }
    SUBCASE("k=n gives zero inertia") {
        const auto c = kmeans(rows, 8, 0);
        CHECK(c.inertia == doctest::Approx(0.0));
        std::set<std::size_t> used(c.assignments.begin(), c.assignments.end());
        CHECK(used.size() == 8);
    }
    SUBCASE("two blobs separate perfectly and hit the exhaustive optimum") {
        const auto c = kmeans(rows, 2, 3);
        for (std::size_t i = 0; i < rows.size(); ++i) CHECK(c.assignments[i] == c.assignments[i % 2]);
        CHECK(c.assignments[0] != c.assignments[1]);
        std::vector<oracle::Vec> ov(rows.begin(), rows.end());
        CHECK(c.inertia == doctest::Approx(oracle::best_two_partition_inertia(ov)).epsilon(1e-12));
        CHECK(*c.silhouette >= 0.9);
    }
    SUBCASE("inertia trace is non-increasing") {
        const auto noisy = two_blobs(40, 5, 9, 1.0, 1.0);
        const auto c = kmeans(noisy, 3, 2);
        for (std::size_t i = 1; i < c.inertia_trace.size(); ++i)
            CHECK(c.inertia_trace[i] <= c.inertia_trace[i - 1] + 1e-12);
        CHECK(c.inertia == doctest::Approx(inertia(noisy, c.assignments)));
    }
    SUBCASE("deterministic") {
        const auto noisy = two_blobs(30, 4, 1, 1.0, 1.0);
        CHECK(kmeans(noisy, 3, 5).assignments == kmeans(noisy, 3, 5).assignments);
    }
    CHECK_THROWS_AS(kmeans(rows, 9, 0), InvalidArgument);
    CHECK_THROWS_AS(kmeans(rows, 0, 0), InvalidArgument);
}

TEST_CASE("kmeans matches exhaustive partitions on small random sets") {
    int hits = 0;
    for (Seed t = 0; t < 30; ++t) {
        Rng rng(t);
        const std::size_t n = 4 + rng.below(9);
        const auto rows = two_blobs(n, 3, derive_seed(t, 1), 1.5, 1.0);
        std::vector<oracle::Vec> ov(rows.begin(), rows.end());
        hits += std::abs(kmeans(rows, 2, t).inertia - oracle::best_two_partition_inertia(ov)) < 1e-9;
    }
    CHECK(hits >= 29);
}

TEST_CASE("silhouette") {
    const std::vector<std::vector<double>> pts{{0}, {1}, {10}, {11}};
    CHECK(std::abs(silhouette(pts, {0, 0, 1, 1}) - 359.0 / 399.0) < 1e-12);
    // singletons score 0; b for the pair is the nearer singleton: (9/10 + 8/9) / 4
    CHECK(silhouette(pts, {0, 0, 1, 2}) == doctest::Approx((0.9 + 8.0 / 9.0) / 4));
    CHECK_THROWS_AS(silhouette(pts, {0, 0, 0, 0}), InsufficientData);

    const auto blob = two_blobs(40, 2, 6, 0.0, 1.0);
    std::vector<std::size_t> halves;
    for (std::size_t i = 0; i < blob.size(); ++i) halves.push_back(i % 2);
    CHECK(silhouette(blob, halves) < 0.1);
}
