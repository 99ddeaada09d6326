#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "facebo/event_log.hpp"
#include "facebo/serialization.hpp"
#include "facebo/session.hpp"

namespace httplib {
class Server;
}

namespace facebo {

struct ServiceOptions {
    std::filesystem::path data_dir = "data";
    double default_kappa = 2.5;
};

/// HTTP-independent result of a request: status code and JSON body.
struct Response {
    int status = 200;
    Json body;
};

/// Live-study service. Every mutation is appended to the session's event
/// log before the response is produced; on construction all sessions found
/// in the data directory are rebuilt by replay.
///
/// Requests for one session are serialized by a per-session mutex; distinct
/// sessions proceed in parallel.
class Service {
public:
    explicit Service(ServiceOptions options);

    /// POST /sessions
    Response create_session(const std::string& body, const std::optional<std::string>& idempotency_key = std::nullopt);
    /// GET /sessions/{id}
    Response status(const std::string& id) const;
    /// GET /sessions/{id}/next
    Response next(const std::string& id);
    /// POST /sessions/{id}/rating  body {"rating": r, "iteration": n?}
    Response rate(const std::string& id, const std::string& body);
    /// GET /sessions/{id}/map?resolution=R
    Response map(const std::string& id, const std::optional<std::string>& resolution) const;
    /// GET /sessions/{id}/best
    Response best(const std::string& id) const;

    std::size_t session_count() const;
    /// Copy of a session's current state (for inspection and tests).
    std::optional<Session> snapshot(const std::string& id) const;

    const ServiceOptions& options() const { return options_; }

private:
    struct Entry {
        explicit Entry(Session s) : session(std::move(s)) {}
        mutable std::mutex mu;
        Session session;
        std::uint64_t next_seq = 0;
    };

    std::shared_ptr<Entry> find(const std::string& id) const;
    void load_all();

    ServiceOptions options_;
    EventLog log_;
    mutable std::shared_mutex registry_mu_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::map<std::string, std::string> idempotency_;
};

/// Registers the service routes on an httplib server.
void mount(httplib::Server& server, Service& service);

}  // namespace facebo
