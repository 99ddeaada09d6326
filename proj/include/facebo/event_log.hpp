#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "facebo/serialization.hpp"
#include "facebo/session.hpp"

namespace facebo {

inline constexpr int kEventSchemaVersion = 1;

enum class EventKind { created, query_issued, rating_recorded, completed };

std::string_view to_string(EventKind k);
EventKind parse_event_kind(std::string_view s);

/// One line of a session's JSON-lines log:
///   {"v":1,"session_id":..,"seq":..,"kind":..,"payload":{..},"timestamp":..}
/// Payloads:
///   created          {"config": SessionConfig, "idempotency_key": string|null}
///   query_issued     {"iteration": n, "point": [...]}
///   rating_recorded  {"iteration": n, "rating": r, "wall_time": ms}
///   completed        {"iterations": n}
struct EventRecord {
    std::string session_id;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::created;
    Json payload;
    Timestamp timestamp = 0;
};

Json to_json(const EventRecord& e);
EventRecord event_from_json(const Json& j);

EventRecord created_event(const Session& s, std::optional<std::string> idempotency_key, Timestamp at);
EventRecord query_event(const Session& s, std::uint64_t seq, Timestamp at);
EventRecord rating_event(const Session& s, std::uint64_t seq);
EventRecord completed_event(const Session& s, std::uint64_t seq, Timestamp at);

/// Full event sequence of a session driven from creation to its current
/// state (used to persist simulated runs). Timestamps are taken from the
/// observations, so the output is deterministic.
std::vector<EventRecord> transcript(const Session& s);

/// Rebuilds a session by re-running its operations. Each re-issued query must
/// equal the logged point; any gap or mismatch raises CorruptLog.
Session replay(const std::vector<EventRecord>& events);

/// Append-only JSON-lines store, one file per session under a directory.
/// Appends rewrite the file to a temporary and rename it over the original,
/// so a reader never observes a partial line.
class EventLog {
public:
    explicit EventLog(std::filesystem::path dir);

    const std::filesystem::path& dir() const { return dir_; }
    std::filesystem::path path_for(const std::string& session_id) const;

    void append(const EventRecord& e);
    void write_all(const std::string& session_id, const std::vector<EventRecord>& events);
    std::vector<EventRecord> read(const std::string& session_id) const;
    std::vector<std::string> session_ids() const;

private:
    std::filesystem::path dir_;
};

std::vector<EventRecord> read_event_file(const std::filesystem::path& path);

}  // namespace facebo
