#include "facebo/session.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "facebo/error.hpp"

namespace facebo {

namespace {

// Seed streams; each consumer of the session seed gets its own.
constexpr std::uint64_t kBurnInStream = 0;
constexpr std::uint64_t kRandomSearchStream = 1'000;
constexpr std::uint64_t kTieBreakStream = 2'000;

Timestamp now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::vector<Observation> standardized(const std::vector<Observation>& history, const RatingScale& scale) {
    std::vector<Observation> out = history;
    for (auto& o : out) o.rating = scale.standardize(o.rating);
    return out;
}

}  // namespace

std::string_view to_string(Mode m) { return m == Mode::bayesopt ? "bayesopt" : "random_search"; }

std::string_view to_string(Phase p) {
    switch (p) {
        case Phase::burn_in: return "burn_in";
        case Phase::optimizing: return "optimizing";
        case Phase::complete: return "complete";
    }
    return "?";
}

std::string_view to_string(RenderMode r) { return r == RenderMode::parametric ? "parametric" : "latent"; }

Mode parse_mode(std::string_view s) {
    if (s == "bayesopt") return Mode::bayesopt;
    if (s == "random_search") return Mode::random_search;
    throw ConfigError("mode", "expected 'bayesopt' or 'random_search', got '" + std::string(s) + "'");
}

Phase parse_phase(std::string_view s) {
    if (s == "burn_in") return Phase::burn_in;
    if (s == "optimizing") return Phase::optimizing;
    if (s == "complete") return Phase::complete;
    throw InvalidArgument("unknown phase '" + std::string(s) + "'");
}

RenderMode parse_render_mode(std::string_view s) {
    if (s == "parametric") return RenderMode::parametric;
    if (s == "latent") return RenderMode::latent;
    throw ConfigError("render_mode", "expected 'parametric' or 'latent', got '" + std::string(s) + "'");
}

void RatingScale::validate() const {
    if (!std::isfinite(min) || !std::isfinite(max) || !(min < max))
        throw ConfigError("rating_scale", "min must be < max");
}

bool RatingScale::accepts(double rating) const {
    if (!std::isfinite(rating) || rating < min || rating > max) return false;
    return !integer || rating == std::round(rating);
}

void SessionConfig::validate() const {
    if (burn_in < 1) throw ConfigError("burn_in", "must be >= 1");
    if (total_iterations < 1) throw ConfigError("total_iterations", "must be >= 1");
    if (!(burn_in < total_iterations))
        throw ConfigError("burn_in", "must be < total_iterations (" + std::to_string(burn_in) +
                                         " >= " + std::to_string(total_iterations) + ")");
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw ConfigError("kappa", "must be non-negative and finite");
    try {
        hyper.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError("hyper", e.what());
    }
    rating_scale.validate();
    if (grid_resolution < 2) throw ConfigError("grid_resolution", "must be >= 2");
    try {
        grid_size(space.dim(), grid_resolution);
    } catch (const Error& e) {
        throw ConfigError("grid_resolution", e.what());
    }
    if (render_mode == RenderMode::latent) {
        if (!base_latent) throw ConfigError("base_latent", "required when render_mode is 'latent'");
        if (!space.has_directions()) throw ConfigError("space", "every dimension needs a direction for latent rendering");
    }
    if (base_latent) {
        if (!base_latent->values.allFinite()) throw ConfigError("base_latent", "entries must be finite");
        for (const auto& d : space.dimensions()) {
            if (d.direction && d.direction->values.size() != base_latent->values.size())
                throw ConfigError("base_latent", "length differs from direction '" + d.name + "'");
        }
    }
}

AcquisitionConfig SessionConfig::acquisition(std::size_t iteration) const {
    AcquisitionConfig a;
    a.kappa = kappa;
    a.grid_resolution = grid_resolution;
    a.refine_steps = refine_steps;
    a.tie_break_seed = derive_seed(seed, kTieBreakStream + iteration);
    return a;
}

Session::Session(std::string id, SessionConfig config)
    : id_(std::move(id)), config_(std::move(config)), model_(std::max<std::size_t>(config_.space.dim(), 1), {}) {
    config_.validate();
    burn_in_points_ = sample_uniform(config_.space, config_.burn_in, derive_seed(config_.seed, kBurnInStream));
    refit();
}

const Point& Session::next_query() {
    if (phase_ == Phase::complete) throw ProtocolError("next_query: session is complete");
    if (pending_) throw ProtocolError("next_query: a query is already pending");
    const std::size_t n = history_.size();
    if (phase_ == Phase::burn_in) {
        pending_ = burn_in_points_[n];
    } else if (config_.mode == Mode::random_search) {
        pending_ = sample_uniform(config_.space, 1, derive_seed(config_.seed, kRandomSearchStream + n)).front();
    } else {
        pending_ = argmax_ucb(model_, config_.space, config_.acquisition(n));
    }
    return *pending_;
}

void Session::record_rating(double rating, std::optional<Timestamp> at) {
    if (!pending_) throw ProtocolError("record_rating: no pending query");
    if (!config_.rating_scale.accepts(rating)) {
        const auto& s = config_.rating_scale;
        throw InvalidArgument("record_rating: rating " + std::to_string(rating) + " outside scale [" +
                              std::to_string(s.min) + ", " + std::to_string(s.max) + "]" +
                              (s.integer ? " (integers only)" : ""));
    }
    history_.push_back(Observation{*pending_, rating, history_.size(), at ? *at : now_ms()});
    pending_.reset();
    refit();
    if (history_.size() >= config_.total_iterations) {
        phase_ = Phase::complete;
    } else if (history_.size() >= config_.burn_in) {
        phase_ = Phase::optimizing;
    }
}

void Session::refit() {
    const auto obs = standardized(history_, config_.rating_scale);
    if (config_.refit_hyperparams && !obs.empty()) {
        model_ = fit_ml2(obs, HyperGrid{});
    } else {
        model_ = fit(config_.space.dim(), obs, config_.hyper);
    }
}

bool operator==(const Session& a, const Session& b) {
    if (a.id_ != b.id_ || a.phase_ != b.phase_ || a.pending_ != b.pending_) return false;
    if (a.burn_in_points_ != b.burn_in_points_ || a.history_.size() != b.history_.size()) return false;
    for (std::size_t i = 0; i < a.history_.size(); ++i) {
        const auto& x = a.history_[i];
        const auto& y = b.history_[i];
        if (!(x.point == y.point) || x.rating != y.rating || x.iteration_index != y.iteration_index ||
            x.wall_time != y.wall_time)
            return false;
    }
    const auto& ma = a.model_;
    const auto& mb = b.model_;
    return ma.hyperparams() == mb.hyperparams() && ma.size() == mb.size() && ma.alpha() == mb.alpha() &&
           ma.chol_factor() == mb.chol_factor();
}

BestEstimate best_estimate(const Session& session) {
    const auto& hist = session.history();
    if (hist.empty()) throw InsufficientData("best_estimate: session has no observations");
    const GPModel& model = session.model();
    std::size_t best = 0;
    double best_mean = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < hist.size(); ++i) {
        const double m = model.posterior(hist[i].point).mean;
        if (m > best_mean) {
            best_mean = m;
            best = i;
        }
    }
    return {hist[best].point, session.config().rating_scale.destandardize(best_mean), hist[best].iteration_index};
}

void SimulatedResponder::validate(const FaceSpace& space) const {
    if (!space.contains(peak)) throw InvalidArgument("responder peak lies outside the face space");
    if (!(width > 0.0)) throw InvalidArgument("responder width must be positive");
    if (!(noise_sd >= 0.0)) throw InvalidArgument("responder noise_sd must be non-negative");
    if (!std::isfinite(amplitude)) throw InvalidArgument("responder amplitude must be finite");
}

double SimulatedResponder::truth(const Point& x) const {
    const double d2 = (x.coords - peak.coords).squaredNorm();
    return amplitude * std::exp(-d2 / (2.0 * width * width));
}

double SimulatedResponder::rate(const Point& x, std::size_t iteration, const RatingScale& scale) const {
    double y = truth(x);
    if (noise_sd > 0.0) {
        Rng rng(derive_seed(seed, iteration));
        y += noise_sd * rng.normal();
    }
    y = std::clamp(y, scale.min, scale.max);
    if (scale.integer) y = std::clamp(std::round(y), std::ceil(scale.min), std::floor(scale.max));
    return y;
}

Session run_simulated(const SessionConfig& config, const SimulatedResponder& responder, std::string id) {
    responder.validate(config.space);
    Session s(std::move(id), config);
    while (s.phase() != Phase::complete) {
        const Point q = s.next_query();
        const std::size_t it = s.iteration();
        s.record_rating(responder.rate(q, it, config.rating_scale), static_cast<Timestamp>(it));
    }
    return s;
}

double mean_min_spacing(const std::vector<Observation>& history) {
    if (history.size() < 2) throw InsufficientData("mean_min_spacing: needs at least two points");
    double total = 0.0;
    for (std::size_t i = 0; i < history.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < history.size(); ++j) {
            if (i != j) best = std::min(best, distance(history[i].point, history[j].point));
        }
        total += best;
    }
    return total / static_cast<double>(history.size());
}

}  // namespace facebo
