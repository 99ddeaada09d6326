#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "facebo/error.hpp"
#include "facebo/event_log.hpp"

using namespace facebo;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("facebo_log_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static inline int counter = 0;
};

// Drives a session by hand, recording the events and the state after each one.
struct Recorded {
    std::vector<EventRecord> events;
    std::vector<Session> states;
};

Recorded record_session(SessionConfig cfg, const SimulatedResponder& r) {
    Session s("rec", std::move(cfg));
    Recorded out;
    out.events.push_back(created_event(s, std::string("key-1"), 0));
    out.states.push_back(s);
    while (s.phase() != Phase::complete) {
        const Point q = s.next_query();
        out.events.push_back(query_event(s, out.events.size(), 0));
        out.states.push_back(s);
        s.record_rating(r.rate(q, s.iteration(), s.config().rating_scale), static_cast<Timestamp>(s.iteration()));
        out.events.push_back(rating_event(s, out.events.size()));
        out.states.push_back(s);
    }
    out.events.push_back(completed_event(s, out.events.size(), 0));
    out.states.push_back(s);
    return out;
}

}  // namespace

TEST_CASE("event JSON round trip") {
    const EventRecord e{"abc", 3, EventKind::rating_recorded, Json{{"rating", 4}}, 99};
    const auto back = event_from_json(Json::parse(to_json(e).dump()));
    CHECK(back.session_id == "abc");
    CHECK(back.seq == 3);
    CHECK(back.kind == EventKind::rating_recorded);
    CHECK(back.payload == e.payload);
    CHECK(back.timestamp == 99);
    CHECK(to_json(e)["v"] == kEventSchemaVersion);

    Json bad = to_json(e);
    bad["v"] = 2;
    CHECK_THROWS_AS(event_from_json(bad), CorruptLog);
    bad = to_json(e);
    bad["kind"] = "exploded";
    CHECK_THROWS_AS(event_from_json(bad), CorruptLog);
    bad = to_json(e);
    bad.erase("seq");
    CHECK_THROWS_AS(event_from_json(bad), CorruptLog);
}

TEST_CASE("replaying every prefix reconstructs the live state") {
    for (Mode mode : {Mode::bayesopt, Mode::random_search}) {
        SessionConfig cfg;
        cfg.mode = mode;
        cfg.seed = 17;
        const auto rec = record_session(cfg, SimulatedResponder{});
        REQUIRE(rec.events.size() == 52);
        for (std::size_t k = 1; k <= rec.events.size(); ++k) {
            const std::vector<EventRecord> prefix(rec.events.begin(), rec.events.begin() + static_cast<long>(k));
            CAPTURE(k);
            CHECK(replay(prefix) == rec.states[k - 1]);
        }
    }
}

TEST_CASE("transcript of a simulated run replays to the same session") {
    SessionConfig cfg;
    cfg.seed = 5;
    const auto s = run_simulated(cfg, SimulatedResponder{});
    const auto events = transcript(s);
    CHECK(events.size() == 52);
    CHECK(replay(events) == s);
    CHECK(transcript(s).back().kind == EventKind::completed);
}

TEST_CASE("replay rejects corrupt logs") {
    const auto rec = record_session(SessionConfig{}, SimulatedResponder{});
    auto events = rec.events;

    CHECK_THROWS_AS(replay({}), CorruptLog);
    CHECK_THROWS_AS(replay({events[1], events[2]}), CorruptLog);

    auto gap = events;
    gap.erase(gap.begin() + 3);
    CHECK_THROWS_AS(replay(gap), CorruptLog);

    auto moved = events;
    moved[7].payload["point"] = Json::array({1.9, 1.9});
    CHECK_THROWS_AS(replay(moved), CorruptLog);

    auto foreign = events;
    foreign[4].session_id = "other";
    CHECK_THROWS_AS(replay(foreign), CorruptLog);

    auto bad_rating = events;
    bad_rating[2].payload["rating"] = 42;
    CHECK_THROWS_AS(replay(bad_rating), CorruptLog);

    auto early = std::vector<EventRecord>(events.begin(), events.begin() + 3);
    early.push_back(EventRecord{events[0].session_id, 3, EventKind::completed, Json::object(), 0});
    CHECK_THROWS_AS(replay(early), CorruptLog);

    auto twice = events;
    twice[1] = events[0];
    twice[1].seq = 1;
    CHECK_THROWS_AS(replay(twice), CorruptLog);
}

TEST_CASE("log files") {
    TempDir dir;
    EventLog log(dir.path);
    const auto rec = record_session(SessionConfig{}, SimulatedResponder{});
    for (const auto& e : rec.events) log.append(e);
    const auto back = log.read("rec");
    REQUIRE(back.size() == rec.events.size());
    for (std::size_t i = 0; i < back.size(); ++i) CHECK(to_json(back[i]) == to_json(rec.events[i]));
    CHECK(log.session_ids() == std::vector<std::string>{"rec"});
    CHECK_FALSE(fs::exists(log.path_for("rec").string() + ".tmp"));
    CHECK(replay(back) == rec.states.back());

    log.write_all("copy", std::vector<EventRecord>(rec.events.begin(), rec.events.begin() + 5));
    CHECK(log.read("copy").size() == 5);
    CHECK(log.session_ids().size() == 2);

    CHECK_THROWS_AS(log.path_for("../escape"), InvalidArgument);
    CHECK_THROWS_AS(log.path_for(""), InvalidArgument);
    CHECK_THROWS_AS(log.read("absent"), InvalidArgument);

    {
        std::ofstream torn(dir.path / "torn.jsonl");
        torn << to_json(rec.events[0]).dump() << "\n{\"v\":1,\"sess";
    }
    CHECK_THROWS_AS(log.read("torn"), CorruptLog);
}
