#include "facebo/event_log.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "facebo/error.hpp"

namespace facebo {

namespace fs = std::filesystem;

namespace {

void write_fully(int fd, const std::string& data, const fs::path& path) {
    const char* p = data.data();
    std::size_t left = data.size();
    while (left > 0) {
        const ssize_t n = ::write(fd, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw Error("write " + path.string() + ": " + std::strerror(errno));
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
}

// write to <path>.tmp, fsync, rename over <path>
void atomic_replace(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) throw Error("open " + tmp.string() + ": " + std::strerror(errno));
    try {
        write_fully(fd, content, tmp);
        if (::fsync(fd) != 0) throw Error("fsync " + tmp.string() + ": " + std::strerror(errno));
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::close(fd);
    if (::rename(tmp.c_str(), path.c_str()) != 0)
        throw Error("rename " + tmp.string() + ": " + std::strerror(errno));
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool valid_id(const std::string& id) {
    return !id.empty() && id.size() <= 128 && std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    }) && id.front() != '.';
}

}  // namespace

std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::created: return "created";
        case EventKind::query_issued: return "query_issued";
        case EventKind::rating_recorded: return "rating_recorded";
        case EventKind::completed: return "completed";
    }
    return "?";
}

EventKind parse_event_kind(std::string_view s) {
    if (s == "created") return EventKind::created;
    if (s == "query_issued") return EventKind::query_issued;
    if (s == "rating_recorded") return EventKind::rating_recorded;
    if (s == "completed") return EventKind::completed;
    throw CorruptLog("unknown event kind '" + std::string(s) + "'");
}

Json to_json(const EventRecord& e) {
    return Json{{"v", kEventSchemaVersion}, {"session_id", e.session_id}, {"seq", e.seq},
                {"kind", to_string(e.kind)},  {"payload", e.payload},       {"timestamp", e.timestamp}};
}

EventRecord event_from_json(const Json& j) {
    try {
        if (j.at("v").get<int>() != kEventSchemaVersion)
            throw CorruptLog("unsupported event schema version " + j.at("v").dump());
        return EventRecord{j.at("session_id").get<std::string>(), j.at("seq").get<std::uint64_t>(),
                           parse_event_kind(j.at("kind").get<std::string>()), j.at("payload"),
                           j.at("timestamp").get<Timestamp>()};
    } catch (const Json::exception& e) {
        throw CorruptLog(std::string("malformed event: ") + e.what());
    }
}

EventRecord created_event(const Session& s, std::optional<std::string> idempotency_key, Timestamp at) {
    return EventRecord{s.id(), 0, EventKind::created,
                       Json{{"config", to_json(s.config())},
                            {"idempotency_key", idempotency_key ? Json(*idempotency_key) : Json(nullptr)}},
                       at};
}

EventRecord query_event(const Session& s, std::uint64_t seq, Timestamp at) {
    if (!s.pending_query()) throw ProtocolError("query_event: session has no pending query");
    return EventRecord{s.id(), seq, EventKind::query_issued,
                       Json{{"iteration", s.iteration()}, {"point", to_json(*s.pending_query())}}, at};
}

EventRecord rating_event(const Session& s, std::uint64_t seq) {
    if (s.history().empty()) throw ProtocolError("rating_event: session has no ratings");
    const auto& o = s.history().back();
    return EventRecord{s.id(), seq, EventKind::rating_recorded,
                       Json{{"iteration", o.iteration_index}, {"rating", o.rating}, {"wall_time", o.wall_time}},
                       o.wall_time};
}

EventRecord completed_event(const Session& s, std::uint64_t seq, Timestamp at) {
    return EventRecord{s.id(), seq, EventKind::completed, Json{{"iterations", s.iteration()}}, at};
}

std::vector<EventRecord> transcript(const Session& s) {
    // Re-drive a fresh copy so the logged query points come from the same
    // code path as a live session.
    Session fresh(s.id(), s.config());
    std::vector<EventRecord> out;
    const Timestamp t0 = s.history().empty() ? 0 : s.history().front().wall_time;
    out.push_back(created_event(fresh, std::nullopt, t0));
    for (const auto& o : s.history()) {
        fresh.next_query();
        out.push_back(query_event(fresh, out.size(), o.wall_time));
        fresh.record_rating(o.rating, o.wall_time);
        out.push_back(rating_event(fresh, out.size()));
    }
    if (s.pending_query()) {
        fresh.next_query();
        out.push_back(query_event(fresh, out.size(), out.back().timestamp));
    }
    if (fresh.phase() == Phase::complete) out.push_back(completed_event(fresh, out.size(), out.back().timestamp));
    return out;
}

Session replay(const std::vector<EventRecord>& events) {
    if (events.empty()) throw CorruptLog("replay: empty event log");
    const auto& first = events.front();
    if (first.kind != EventKind::created || first.seq != 0) throw CorruptLog("replay: log must start with 'created' at seq 0");
    std::optional<Session> s;
    try {
        s.emplace(first.session_id, session_config_from_json(first.payload.at("config")));
    } catch (const Json::exception& e) {
        throw CorruptLog(std::string("replay: bad created payload: ") + e.what());
    } catch (const ConfigError& e) {
        throw CorruptLog(std::string("replay: invalid logged config: ") + e.what());
    }
    for (std::size_t i = 1; i < events.size(); ++i) {
        const auto& e = events[i];
        if (e.seq != i) throw CorruptLog("replay: sequence gap at event " + std::to_string(i));
        if (e.session_id != first.session_id) throw CorruptLog("replay: event " + std::to_string(i) + " names another session");
        try {
            switch (e.kind) {
                case EventKind::created:
                    throw CorruptLog("replay: duplicate 'created' event");
                case EventKind::query_issued: {
                    const Point& q = s->next_query();
                    if (!(q == point_from_json(e.payload.at("point"))))
                        throw CorruptLog("replay: re-issued query differs from the log at seq " + std::to_string(i));
                    break;
                }
                case EventKind::rating_recorded:
                    s->record_rating(e.payload.at("rating").get<double>(), e.payload.at("wall_time").get<Timestamp>());
                    break;
                case EventKind::completed:
                    if (s->phase() != Phase::complete) throw CorruptLog("replay: 'completed' before the final rating");
                    break;
            }
        } catch (const Json::exception& ex) {
            throw CorruptLog("replay: bad payload at seq " + std::to_string(i) + ": " + ex.what());
        } catch (const CorruptLog&) {
            throw;
        } catch (const Error& ex) {
            throw CorruptLog("replay: seq " + std::to_string(i) + ": " + ex.what());
        }
    }
    return *std::move(s);
}

EventLog::EventLog(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

fs::path EventLog::path_for(const std::string& session_id) const {
    if (!valid_id(session_id)) throw InvalidArgument("invalid session id '" + session_id + "'");
    return dir_ / (session_id + ".jsonl");
}

void EventLog::append(const EventRecord& e) {
    const fs::path p = path_for(e.session_id);
    std::string content = read_file(p);
    content += to_json(e).dump();
    content += '\n';
    atomic_replace(p, content);
}

void EventLog::write_all(const std::string& session_id, const std::vector<EventRecord>& events) {
    std::string content;
    for (const auto& e : events) {
        content += to_json(e).dump();
        content += '\n';
    }
    atomic_replace(path_for(session_id), content);
}

std::vector<EventRecord> EventLog::read(const std::string& session_id) const {
    return read_event_file(path_for(session_id));
}

std::vector<std::string> EventLog::session_ids() const {
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(dir_)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") ids.push_back(entry.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::vector<EventRecord> read_event_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open " + path.string());
    std::vector<EventRecord> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            out.push_back(event_from_json(Json::parse(line)));
        } catch (const Json::exception& e) {
            throw CorruptLog(path.string() + ": " + e.what());
        }
    }
    return out;
}

}  // namespace facebo
