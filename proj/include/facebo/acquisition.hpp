#pragma once

#include <cstddef>

#include "facebo/face_space.hpp"
#include "facebo/gp.hpp"
#include "facebo/random.hpp"

namespace facebo {

struct AcquisitionConfig {
    double kappa = 2.5;
    std::size_t grid_resolution = 51;
    std::size_t refine_steps = 8;
    Seed tie_break_seed = 0;
    std::size_t eval_budget = kDefaultEvalBudget;

    void validate() const;
};

/// Values within this distance of the grid maximum count as ties.
inline constexpr double kTieTolerance = 1e-12;

/// Upper confidence bound: mean + kappa * sqrt(variance).
double ucb(const PosteriorPrediction& pred, double kappa);

struct AcquisitionResult {
    Point point;
    double value = 0.0;          // UCB at `point`
    std::size_t grid_index = 0;  // grid cell the search started from
    std::size_t ties = 1;        // grid points tied for the maximum
};

/// Grid scan of UCB over the space, uniform random tie-breaking among grid
/// maxima, then `refine_steps` rounds of coordinate search with halving steps.
AcquisitionResult maximize_ucb(const GPModel& model, const FaceSpace& space, const AcquisitionConfig& cfg);

/// Serial reference of maximize_ucb.
AcquisitionResult maximize_ucb_serial(const GPModel& model, const FaceSpace& space, const AcquisitionConfig& cfg);

inline Point argmax_ucb(const GPModel& model, const FaceSpace& space, const AcquisitionConfig& cfg) {
    return maximize_ucb(model, space, cfg).point;
}

}  // namespace facebo
