#include "facebo/service.hpp"

#include <chrono>
#include <random>
#include <sstream>

#include <httplib.h>

#include "facebo/analysis.hpp"
#include "facebo/error.hpp"

namespace facebo {

namespace {

Timestamp now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string fresh_id() {
    static std::mutex mu;
    static std::mt19937_64 gen{std::random_device{}()};
    std::lock_guard lock(mu);
    std::ostringstream os;
    os << std::hex << gen();
    return os.str();
}

Response error(int status, const std::string& message, const std::string& field = {}) {
    Json body{{"error", message}};
    if (!field.empty()) body["field"] = field;
    return {status, std::move(body)};
}

Response not_found(const std::string& id) { return error(404, "unknown session '" + id + "'"); }

Json progress(const Session& s) {
    return Json{{"session_id", s.id()},
                {"phase", to_string(s.phase())},
                {"iteration", s.iteration()},
                {"remaining", s.remaining()},
                {"total_iterations", s.config().total_iterations}};
}

Json stimulus(const Session& s) {
    const auto& cfg = s.config();
    Json names = Json::array();
    for (const auto& d : cfg.space.dimensions()) names.push_back(d.name);
    Json j{{"session_id", s.id()},
           {"iteration", s.iteration()},
           {"point", to_json(*s.pending_query())},
           {"dimensions", std::move(names)},
           {"render_mode", to_string(cfg.render_mode)},
           {"phase", to_string(s.phase())}};
    if (cfg.render_mode == RenderMode::latent)
        j["latent"] = to_json(apply_directions(*cfg.base_latent, cfg.space, *s.pending_query()).values);
    return j;
}

std::optional<Json> parse_body(const std::string& body) {
    if (body.empty()) return Json(nullptr);
    try {
        return Json::parse(body);
    } catch (const Json::exception&) {
        return std::nullopt;
    }
}

}  // namespace

Service::Service(ServiceOptions options) : options_(std::move(options)), log_(options_.data_dir) { load_all(); }

void Service::load_all() {
    for (const auto& id : log_.session_ids()) {
        auto events = log_.read(id);
        auto entry = std::make_shared<Entry>(replay(events));
        entry->next_seq = events.size();
        const auto& key = events.front().payload["idempotency_key"];
        if (key.is_string()) idempotency_[key.get<std::string>()] = id;
        sessions_.emplace(id, std::move(entry));
    }
}

std::shared_ptr<Service::Entry> Service::find(const std::string& id) const {
    std::shared_lock lock(registry_mu_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

std::size_t Service::session_count() const {
    std::shared_lock lock(registry_mu_);
    return sessions_.size();
}

std::optional<Session> Service::snapshot(const std::string& id) const {
    auto e = find(id);
    if (!e) return std::nullopt;
    std::lock_guard lock(e->mu);
    return e->session;
}

Response Service::create_session(const std::string& body, const std::optional<std::string>& idempotency_key) {
    auto parsed = parse_body(body);
    if (!parsed) return error(400, "request body is not valid JSON", "body");
    Json j = *parsed;
    if (j.is_null()) j = Json::object();
    if (j.is_object() && !j.contains("kappa")) j["kappa"] = options_.default_kappa;

    std::unique_lock lock(registry_mu_);
    if (idempotency_key) {
        auto it = idempotency_.find(*idempotency_key);
        if (it != idempotency_.end()) return {200, Json{{"session_id", it->second}, {"replayed", true}}};
    }
    SessionConfig cfg;
    try {
        cfg = session_config_from_json(j);
    } catch (const ConfigError& e) {
        return error(400, e.what(), e.field());
    } catch (const Error& e) {
        return error(400, e.what());
    }
    std::string id = fresh_id();
    while (sessions_.count(id)) id = fresh_id();
    Session s(id, std::move(cfg));
    log_.append(created_event(s, idempotency_key, now_ms()));
    auto entry = std::make_shared<Entry>(std::move(s));
    entry->next_seq = 1;
    sessions_.emplace(id, std::move(entry));
    if (idempotency_key) idempotency_[*idempotency_key] = id;
    return {201, Json{{"session_id", id}}};
}

Response Service::status(const std::string& id) const {
    auto e = find(id);
    if (!e) return not_found(id);
    std::lock_guard lock(e->mu);
    Json j = progress(e->session);
    j["pending"] = e->session.pending_query().has_value();
    j["config"] = to_json(e->session.config());
    return {200, std::move(j)};
}

Response Service::next(const std::string& id) {
    auto e = find(id);
    if (!e) return not_found(id);
    std::lock_guard lock(e->mu);
    if (e->session.phase() == Phase::complete) return error(409, "session is complete");
    if (e->session.pending_query()) return {200, stimulus(e->session)};

    Session updated = e->session;
    updated.next_query();
    log_.append(query_event(updated, e->next_seq, now_ms()));
    ++e->next_seq;
    e->session = std::move(updated);
    return {200, stimulus(e->session)};
}

Response Service::rate(const std::string& id, const std::string& body) {
    auto e = find(id);
    if (!e) return not_found(id);
    auto parsed = parse_body(body);
    if (!parsed || !parsed->is_object() || !parsed->contains("rating") || !parsed->at("rating").is_number())
        return error(400, "body must be {\"rating\": number, \"iteration\": integer?}", "rating");
    const double rating = parsed->at("rating").get<double>();
    std::optional<std::size_t> token;
    if (parsed->contains("iteration")) {
        const auto& t = parsed->at("iteration");
        if (!t.is_number_unsigned()) return error(400, "iteration must be a non-negative integer", "iteration");
        token = t.get<std::size_t>();
    }

    std::lock_guard lock(e->mu);
    const Session& cur = e->session;
    if (token && *token < cur.iteration()) {
        // retry of an already recorded rating
        if (cur.history()[*token].rating != rating)
            return error(409, "iteration " + std::to_string(*token) + " was already rated with a different value");
        Json j = progress(cur);
        j["duplicate"] = true;
        return {200, std::move(j)};
    }
    if (!cur.pending_query()) return error(409, "no pending query; GET /next first");
    if (token && *token != cur.iteration())
        return error(409, "iteration " + std::to_string(*token) + " is not the pending one (" +
                              std::to_string(cur.iteration()) + ")");
    if (!cur.config().rating_scale.accepts(rating)) {
        const auto& sc = cur.config().rating_scale;
        std::ostringstream msg;
        msg << "rating " << rating << " outside [" << sc.min << ", " << sc.max << "]" << (sc.integer ? ", integers only" : "");
        return error(422, msg.str(), "rating");
    }

    Session updated = cur;
    updated.record_rating(rating, now_ms());
    log_.append(rating_event(updated, e->next_seq));
    ++e->next_seq;
    if (updated.phase() == Phase::complete) {
        log_.append(completed_event(updated, e->next_seq, now_ms()));
        ++e->next_seq;
    }
    e->session = std::move(updated);
    return {200, progress(e->session)};
}

Response Service::map(const std::string& id, const std::optional<std::string>& resolution) const {
    auto e = find(id);
    if (!e) return not_found(id);
    std::size_t res = kDefaultMapResolution;
    if (resolution) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(*resolution, &used);
            if (used != resolution->size() || v < 2) throw std::invalid_argument("range");
            res = static_cast<std::size_t>(v);
        } catch (const std::exception&) {
            return error(400, "resolution must be an integer >= 2", "resolution");
        }
    }
    std::lock_guard lock(e->mu);
    try {
        grid_size(e->session.config().space.dim(), res);
        return {200, to_json(response_map(e->session, res))};
    } catch (const BudgetExceeded& ex) {
        return error(413, ex.what(), "resolution");
    } catch (const InsufficientData& ex) {
        return error(409, ex.what());
    }
}

Response Service::best(const std::string& id) const {
    auto e = find(id);
    if (!e) return not_found(id);
    std::lock_guard lock(e->mu);
    try {
        const auto b = best_estimate(e->session);
        return {200, Json{{"point", to_json(b.point)}, {"posterior_mean", b.posterior_mean}, {"iteration", b.iteration}}};
    } catch (const InsufficientData& ex) {
        return error(409, ex.what());
    }
}

void mount(httplib::Server& server, Service& service) {
    auto reply = [](httplib::Response& res, const Response& r) {
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
        res.set_header("Access-Control-Allow-Origin", "*");
    };
    constexpr const char* kId = "([A-Za-z0-9_-]+)";

    server.Post("/sessions", [&service, reply](const httplib::Request& req, httplib::Response& res) {
        std::optional<std::string> key;
        if (req.has_header("Idempotency-Key")) key = req.get_header_value("Idempotency-Key");
        reply(res, service.create_session(req.body, key));
    });
    server.Get(std::string("/sessions/") + kId, [&service, reply](const httplib::Request& req, httplib::Response& res) {
        reply(res, service.status(req.matches[1]));
    });
    server.Get(std::string("/sessions/") + kId + "/next",
               [&service, reply](const httplib::Request& req, httplib::Response& res) {
                   reply(res, service.next(req.matches[1]));
               });
    server.Post(std::string("/sessions/") + kId + "/rating",
                [&service, reply](const httplib::Request& req, httplib::Response& res) {
                    reply(res, service.rate(req.matches[1], req.body));
                });
    server.Get(std::string("/sessions/") + kId + "/map",
               [&service, reply](const httplib::Request& req, httplib::Response& res) {
                   std::optional<std::string> r;
                   if (req.has_param("resolution")) r = req.get_param_value("resolution");
                   reply(res, service.map(req.matches[1], r));
               });
    server.Get(std::string("/sessions/") + kId + "/best",
               [&service, reply](const httplib::Request& req, httplib::Response& res) {
                   reply(res, service.best(req.matches[1]));
               });
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Headers", "Content-Type, Idempotency-Key");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.status = 204;
    });
    server.set_exception_handler([reply](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            reply(res, Response{500, Json{{"error", e.what()}}});
        }
    });
}

}  // namespace facebo
