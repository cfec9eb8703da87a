#include <doctest.h>

#include "companioncast/server.hpp"
#include "../support/fixtures.hpp"
#include "../support/net_client.hpp"

using namespace companioncast;
using nlohmann::json;

namespace {

struct Running {
    std::shared_ptr<Engine> engine;
    Server server;
    unsigned short port;

    Running()
        : engine(std::make_shared<Engine>(fixtures::scripted_config(), make_services(fixtures::scripted_config()))),
          server(engine, ServerOptions{"127.0.0.1", 0, 2}), port(server.start()) {}
    ~Running() { server.stop(); }

    std::string add_demo() {
        const auto r = netclient::request(port, "POST", "/timelines", serialize_timeline(fixtures::goal_corner_replay()));
        REQUIRE(r.status == 201);
        return json::parse(r.body).at("timeline_id").get<std::string>();
    }

    std::string new_session(const std::string& timeline_id) {
        const auto r = netclient::request(port, "POST", "/sessions",
                                          json{{"timeline_id", timeline_id}, {"supported_team", "home"}, {"seed", 1}}.dump());
        REQUIRE(r.status == 201);
        return json::parse(r.body).at("session_id").get<std::string>();
    }
};

/// Reads frames until one of `kind` arrives (inclusive); fails on timeout.
std::vector<json> read_until(netclient::WsClient& ws, const std::string& kind) {
    std::vector<json> frames;
    while (true) {
        const auto f = ws.read();
        REQUIRE(f);
        frames.push_back(json::parse(*f));
        if (frames.back().at("kind") == kind) return frames;
    }
}

} // namespace

TEST_SUITE("server") {

TEST_CASE("health and unknown routes") {
    Running r;
    CHECK(netclient::request(r.port, "GET", "/healthz").status == 200);
    CHECK(netclient::request(r.port, "GET", "/nowhere").status == 404);
    CHECK(netclient::request(r.port, "DELETE", "/timelines").status == 404);
}

TEST_CASE("timeline upload and listing") {
    Running r;
    const auto id = r.add_demo();
    CHECK(id == "test-match");
    const auto list = json::parse(netclient::request(r.port, "GET", "/timelines").body);
    REQUIRE(list.size() == 1);
    CHECK(list[0].at("home_team") == "Home");

    auto bad = netclient::request(r.port, "POST", "/timelines", "{not json");
    CHECK(bad.status == 400);
    CHECK(json::parse(bad.body).contains("error"));
    auto inverted = fixtures::goal_corner_replay();
    inverted.replays[0].end = 130;
    CHECK(netclient::request(r.port, "POST", "/timelines", serialize_timeline(inverted)).status == 400);
}

TEST_CASE("session creation errors") {
    Running r;
    const auto id = r.add_demo();
    CHECK(netclient::request(r.port, "POST", "/sessions", json{{"timeline_id", "missing"}, {"supported_team", "home"}}.dump())
              .status == 404);
    CHECK(netclient::request(r.port, "POST", "/sessions", json{{"timeline_id", id}, {"supported_team", "both"}}.dump())
              .status == 400);
    CHECK(netclient::request(r.port, "POST", "/sessions", "[]").status == 400);
    CHECK(netclient::request(r.port, "GET", "/sessions/none/transcript").status == 404);
}

TEST_CASE("stream, transcript and blobs") {
    Running r;
    const auto sid = r.new_session(r.add_demo());

    netclient::WsClient ws(r.port, "/sessions/" + sid + "/stream?from_seq=0");
    const auto first = json::parse(*ws.read());
    CHECK(first.at("kind") == "session_created");
    CHECK(first.at("seq") == 0);

    ws.send(R"({"kind": "clock_sync", "video_t": 99})");
    ws.send(R"({"kind": "clock_sync", "video_t": 101})");
    const auto frames = read_until(ws, "conversation_ended");
    CHECK(frames.front().at("kind") == "clock_sync");
    int with_audio = 0;
    for (const auto& f : frames) {
        if (f.at("kind") == "agent_turn" && !f.at("audio_b64").is_null()) ++with_audio;
    }
    CHECK(with_audio == 3);

    const auto t = netclient::request(r.port, "GET", "/sessions/" + sid + "/transcript");
    CHECK(t.status == 200);
    CHECK(t.content_type == "application/x-ndjson");
    CHECK(t.body == r.engine->session(sid)->transcript_jsonl());

    std::int64_t voiced_seq = -1;
    for (const auto& f : frames) {
        if (f.at("kind") == "agent_turn" && !f.at("audio_b64").is_null()) voiced_seq = f.at("seq").get<std::int64_t>();
    }
    const auto blob = netclient::request(r.port, "GET", "/sessions/" + sid + "/blobs/" + std::to_string(voiced_seq));
    CHECK(blob.status == 200);
    CHECK(blob.content_type == "audio/wav");
    CHECK(blob.body.substr(0, 4) == "RIFF");
    CHECK(netclient::request(r.port, "GET", "/sessions/" + sid + "/blobs/0").status == 404);
}

TEST_CASE("invalid frames get protocol errors and the stream stays open") {
    Running r;
    const auto sid = r.new_session(r.add_demo());
    netclient::WsClient ws(r.port, "/sessions/" + sid + "/stream");
    ws.send("not json");
    auto f = json::parse(*ws.read());
    CHECK(f.at("kind") == "error");
    CHECK(f.at("stage") == "protocol");
    ws.send(R"({"kind": "user_message", "text": "  "})");
    CHECK(json::parse(*ws.read()).at("stage") == "protocol");
    ws.send(R"({"kind": "dance"})");
    CHECK(json::parse(*ws.read()).at("message").get<std::string>().find("dance") != std::string::npos);

    ws.send(R"({"kind": "user_message", "text": "anyone there?"})");
    const auto frames = read_until(ws, "conversation_ended");
    CHECK(frames.front().at("kind") == "user_message");
}

TEST_CASE("stream for an unknown session is refused") {
    Running r;
    CHECK_THROWS(netclient::WsClient(r.port, "/sessions/ghost/stream"));
}

}
