#include "facebo/acquisition.hpp"

#include <cmath>
#include <vector>

#include "facebo/error.hpp"
#include "facebo/kernels.hpp"

namespace facebo {

void AcquisitionConfig::validate() const {
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw InvalidArgument("kappa must be non-negative and finite");
    if (grid_resolution < 2) throw InvalidArgument("grid_resolution must be >= 2");
}

double ucb(const PosteriorPrediction& pred, double kappa) {
    if (!(kappa >= 0.0)) throw InvalidArgument("ucb: kappa must be non-negative");
    if (!(pred.variance >= 0.0)) throw InvalidArgument("ucb: variance must be non-negative");
    return pred.mean + kappa * std::sqrt(pred.variance);
}

namespace {

template <typename GridEval>
AcquisitionResult maximize(const GPModel& model, const FaceSpace& space, const AcquisitionConfig& cfg,
                           GridEval&& eval) {
    cfg.validate();
    if (model.dim() != space.dim())
        throw DimensionMismatch("argmax_ucb: model dimension " + std::to_string(model.dim()) +
                                " differs from space dimension " + std::to_string(space.dim()));
    const std::vector<Point> grid = regular_grid(space, cfg.grid_resolution, cfg.eval_budget);
    const std::vector<double> values = eval(grid);

    // Serial scan in index order so tie detection never depends on threading.
    double best = values.front();
    for (double v : values) best = v > best ? v : best;
    std::vector<std::size_t> ties;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] >= best - kTieTolerance) ties.push_back(i);
    }
    Rng rng(cfg.tie_break_seed);
    const std::size_t pick = ties.size() == 1 ? ties.front() : ties[rng.below(ties.size())];

    AcquisitionResult res{grid[pick], values[pick], pick, ties.size()};

    Eigen::VectorXd step(static_cast<Eigen::Index>(space.dim()));
    for (std::size_t i = 0; i < space.dim(); ++i) {
        step(static_cast<Eigen::Index>(i)) =
            0.5 * (space[i].upper - space[i].lower) / static_cast<double>(cfg.grid_resolution - 1);
    }
    for (std::size_t round = 0; round < cfg.refine_steps; ++round) {
        for (Eigen::Index i = 0; i < step.size(); ++i) {
            for (double sign : {1.0, -1.0}) {
                Point cand = res.point;
                cand.coords(i) += sign * step(i);
                cand = space.clamp(cand);
                const double v = ucb(model.posterior(cand), cfg.kappa);
                if (v > res.value) {
                    res.point = std::move(cand);
                    res.value = v;
                }
            }
        }
        step *= 0.5;
    }
    return res;
}

}  // namespace

AcquisitionResult maximize_ucb(const GPModel& model, const FaceSpace& space, const AcquisitionConfig& cfg) {
    return maximize(model, space, cfg,
                    [&](const std::vector<Point>& grid) { return kernels::ucb_grid(model, grid, cfg.kappa); });
}

AcquisitionResult maximize_ucb_serial(const GPModel& model, const FaceSpace& space, const AcquisitionConfig& cfg) {
    return maximize(model, space, cfg,
                    [&](const std::vector<Point>& grid) { return kernels::ucb_grid_serial(model, grid, cfg.kappa); });
}

}  // namespace facebo
