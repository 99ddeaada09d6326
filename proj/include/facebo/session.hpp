#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "facebo/acquisition.hpp"
#include "facebo/face_space.hpp"
#include "facebo/gp.hpp"
#include "facebo/random.hpp"

namespace facebo {

enum class Mode { bayesopt, random_search };
enum class Phase { burn_in, optimizing, complete };
enum class RenderMode { parametric, latent };

std::string_view to_string(Mode m);
std::string_view to_string(Phase p);
std::string_view to_string(RenderMode r);
Mode parse_mode(std::string_view s);
Phase parse_phase(std::string_view s);
RenderMode parse_render_mode(std::string_view s);

struct RatingScale {
    double min = 0.0;
    double max = 10.0;
    bool integer = true;

    void validate() const;
    bool accepts(double rating) const;
    /// Maps [min, max] linearly onto [-1, 1]; the GP works in these units.
    double standardize(double rating) const { return (rating - 0.5 * (min + max)) / (0.5 * (max - min)); }
    double destandardize(double z) const { return 0.5 * (min + max) + z * 0.5 * (max - min); }
};

struct SessionConfig {
    FaceSpace space = FaceSpace::study_default();
    std::size_t burn_in = 5;
    std::size_t total_iterations = 25;
    Mode mode = Mode::bayesopt;
    double kappa = 2.5;
    KernelHyperparams hyper{};
    /// Re-select hyperparameters by marginal likelihood after every rating.
    bool refit_hyperparams = false;
    Seed seed = 0;
    RatingScale rating_scale{};
    std::size_t grid_resolution = 51;
    std::size_t refine_steps = 8;
    /// Free-form participant label used to group runs in analysis.
    std::string participant;
    RenderMode render_mode = RenderMode::parametric;
    /// Identity latent that directions are added to; needed for RenderMode::latent.
    std::optional<LatentVector> base_latent;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    AcquisitionConfig acquisition(std::size_t iteration) const;
};

/// One participant run of the closed loop: burn-in draws, then UCB-driven
/// (or uniformly random) queries, one rating per query.
///
/// Single writer: callers serialize access to a given Session.
class Session {
public:
    /// Validates the config and pre-draws the burn-in points from the seed.
    Session(std::string id, SessionConfig config);

    const std::string& id() const { return id_; }
    const SessionConfig& config() const { return config_; }
    Phase phase() const { return phase_; }
    const std::optional<Point>& pending_query() const { return pending_; }
    const std::vector<Observation>& history() const { return history_; }
    const std::vector<Point>& burn_in_points() const { return burn_in_points_; }

    /// Ratings recorded so far.
    std::size_t iteration() const { return history_.size(); }
    std::size_t remaining() const { return config_.total_iterations - history_.size(); }

    /// Issues the next query. Throws ProtocolError if a query is already
    /// pending or the session is complete.
    const Point& next_query();

    /// Records a rating for the pending query. `at` defaults to the system clock.
    void record_rating(double rating, std::optional<Timestamp> at = std::nullopt);

    /// GP fitted to the full history in standardized rating units.
    const GPModel& model() const { return model_; }

    friend bool operator==(const Session& a, const Session& b);

private:
    void refit();

    std::string id_;
    SessionConfig config_;
    Phase phase_ = Phase::burn_in;
    std::optional<Point> pending_;
    std::vector<Observation> history_;
    std::vector<Point> burn_in_points_;
    GPModel model_;
};

inline Session create_session(SessionConfig config, std::string id = "session") {
    return Session(std::move(id), std::move(config));
}

struct BestEstimate {
    Point point;
    double posterior_mean = 0.0;  // rating units
    std::size_t iteration = 0;
};

/// Sampled point with the largest posterior mean under the session's GP;
/// earliest iteration wins ties.
BestEstimate best_estimate(const Session& session);

/// Desk-scale stand-in for a participant: a Gaussian bump plus rating noise.
struct SimulatedResponder {
    Point peak{-0.04, -0.06};
    double width = 0.5;
    double amplitude = 10.0;
    double noise_sd = 0.5;
    Seed seed = 0;

    void validate(const FaceSpace& space) const;
    /// Noise-free response at x (rating units, before clamping).
    double truth(const Point& x) const;
    /// Noisy, clamped (and rounded when the scale is integer) rating for trial `iteration`.
    double rate(const Point& x, std::size_t iteration, const RatingScale& scale) const;
};

/// Drives a full session against the responder. Timestamps are the
/// iteration indices so the transcript is a pure function of the inputs.
Session run_simulated(const SessionConfig& config, const SimulatedResponder& responder, std::string id = "sim");

/// Mean over sampled points of the distance to the nearest other sampled point.
double mean_min_spacing(const std::vector<Observation>& history);

}  // namespace facebo
