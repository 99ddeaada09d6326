#include <doctest.h>

#include <cmath>

#include "facebo/directions.hpp"
#include "facebo/error.hpp"

using namespace facebo;

namespace {

LatentVector lv(std::initializer_list<double> v) { return LatentVector{Point(v).coords}; }

}  // namespace

TEST_CASE("two separable points give the separating axis") {
    const LabeledLatents d{{lv({1.0, 0.0}), lv({-1.0, 0.0})}, {1, 0}};
    const auto fit = fit_logistic(d);
    CHECK(fit.converged);
    CHECK(cosine_similarity(fit.direction.values, Point{1.0, 0.0}.coords) > 1.0 - 1e-9);
    CHECK(std::abs(fit.bias) < 1e-9);
}

TEST_CASE("flipping labels flips the direction") {
    const auto p = make_planted_dataset(200, 8, 3);
    auto flipped = p.data;
    for (auto& l : flipped.labels) l = 1 - l;
    const auto a = fit_logistic(p.data);
    const auto b = fit_logistic(flipped);
    CHECK(cosine_similarity(a.direction.values, b.direction.values) < -1.0 + 1e-6);
}

TEST_CASE("planted direction is recovered") {
    const auto p = make_planted_dataset(500, 64, 11);
    const auto fit = fit_logistic(p.data);
    CHECK(cosine_similarity(fit.direction.values, p.planted) >= 0.95);
    CHECK(fit.converged);
}

TEST_CASE("loss trace is non-increasing") {
    const auto p = make_planted_dataset(300, 16, 5);
    const auto fit = fit_logistic(p.data);
    REQUIRE(fit.loss_trace.size() >= 2);
    for (std::size_t i = 1; i < fit.loss_trace.size(); ++i) CHECK(fit.loss_trace[i] <= fit.loss_trace[i - 1]);
    CHECK(fit.loss_trace.front() == doctest::Approx(std::log(2.0)));
}

TEST_CASE("stronger penalty shrinks the weights") {
    const auto p = make_planted_dataset(300, 16, 6);
    double prev = 1e300;
    for (double l2 : {1e-3, 1e-2, 1e-1, 1.0}) {
        LogisticFitConfig cfg;
        cfg.l2_penalty = l2;
        const double norm = fit_logistic(p.data, cfg).direction.values.norm();
        CHECK(norm < prev);
        prev = norm;
    }
}

TEST_CASE("rescaling the latents keeps the direction") {
    const auto p = make_planted_dataset(400, 16, 7);
    auto scaled = p.data;
    for (auto& z : scaled.latents) z.values *= 3.0;
    const auto a = fit_logistic(p.data);
    const auto b = fit_logistic(scaled);
    CHECK(cosine_similarity(a.direction.values, b.direction.values) > 0.98);
}

TEST_CASE("fitting is deterministic") {
    const auto p = make_planted_dataset(200, 10, 9);
    const auto a = fit_logistic(p.data);
    const auto b = fit_logistic(p.data);
    CHECK(a.direction.values == b.direction.values);
    CHECK(a.bias == b.bias);
    CHECK(a.loss_trace == b.loss_trace);
}

TEST_CASE("invalid training data") {
    CHECK_THROWS_AS(fit_logistic(LabeledLatents{{lv({1, 0}), lv({2, 0})}, {1, 1}}), InvalidArgument);
    CHECK_THROWS_AS(fit_logistic(LabeledLatents{{lv({1, 0})}, {1}}), InvalidArgument);
    CHECK_THROWS_AS(fit_logistic(LabeledLatents{{lv({1, 0}), lv({2, 0})}, {1}}), InvalidArgument);
    CHECK_THROWS_AS(fit_logistic(LabeledLatents{{lv({1, 0}), lv({2, 0})}, {1, 2}}), InvalidArgument);
    CHECK_THROWS_AS(fit_logistic(LabeledLatents{{lv({1, 0}), lv({2, 0, 1})}, {1, 0}}), DimensionMismatch);
    CHECK_THROWS_AS(fit_logistic(LabeledLatents{{lv({NAN, 0}), lv({2, 0})}, {1, 0}}), InvalidArgument);
    LogisticFitConfig cfg;
    cfg.l2_penalty = -1;
    CHECK_THROWS_AS(fit_logistic(make_planted_dataset(10, 2, 1).data, cfg), InvalidArgument);
}

TEST_CASE("orthogonalize") {
    SUBCASE("removes the shared component") {
        const auto out = orthogonalize({{Point{1.0, 0.0}.coords, "a"}, {Point{1.0, 1.0}.coords, "b"}});
        REQUIRE(out.size() == 2);
        CHECK(out[0].values == Point{1.0, 0.0}.coords);
        CHECK(std::abs(out[1].values(0)) < 1e-15);
        CHECK(out[1].values(1) == 1.0);
        CHECK(out[1].label == "b");
    }
    SUBCASE("random directions become mutually orthogonal") {
        Rng rng(2);
        std::vector<DirectionCoefficients> dirs;
        for (int i = 0; i < 6; ++i) {
            Eigen::VectorXd v(32);
            for (auto& x : v) x = rng.normal();
            dirs.push_back({v, "d" + std::to_string(i)});
        }
        const auto out = orthogonalize(dirs);
        for (std::size_t i = 0; i < out.size(); ++i)
            for (std::size_t j = i + 1; j < out.size(); ++j)
                CHECK(std::abs(cosine_similarity(out[i].values, out[j].values)) < 1e-12);
    }
    SUBCASE("dependent and malformed input") {
        CHECK_THROWS_AS(orthogonalize({{Point{1.0, 2.0}.coords, "a"}, {Point{2.0, 4.0}.coords, "b"}}), InvalidArgument);
        CHECK_THROWS_AS(orthogonalize({{Point{0.0, 0.0}.coords, "a"}}), InvalidArgument);
        CHECK_THROWS_AS(orthogonalize({{Point{1.0, 0.0}.coords, "a"}, {Point{1.0, 0.0, 0.0}.coords, "b"}}),
                        DimensionMismatch);
    }
}

TEST_CASE("cosine similarity") {
    CHECK(cosine_similarity(Point{1.0, 0.0}.coords, Point{0.0, 2.0}.coords) == 0.0);
    CHECK(cosine_similarity(Point{1.0, 1.0}.coords, Point{2.0, 2.0}.coords) == doctest::Approx(1.0));
    CHECK_THROWS_AS(cosine_similarity(Point{0.0, 0.0}.coords, Point{1.0, 0.0}.coords), InvalidArgument);
}

TEST_CASE("planted dataset") {
    const auto p = make_planted_dataset(100, 5, 1);
    CHECK(p.data.latents.size() == 100);
    CHECK(p.planted.norm() == doctest::Approx(1.0));
    for (std::size_t i = 0; i < 100; ++i)
        CHECK(p.data.labels[i] == (p.planted.dot(p.data.latents[i].values) > 0 ? 1 : 0));
}
