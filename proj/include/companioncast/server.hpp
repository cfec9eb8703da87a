#pragma once

#include <memory>
#include <string>

#include "companioncast/session.hpp"

namespace companioncast {

struct ServerOptions {
    std::string address = "127.0.0.1";
    /// 0 picks a free port.
    unsigned short port = 8080;
    int io_threads = 2;
};

/// HTTP + WebSocket front end for an Engine.
///
///   POST /timelines                 timeline JSON -> {"timeline_id"}
///   GET  /timelines                 -> [{"timeline_id", ...}]
///   POST /sessions                  {"timeline_id", "supported_team"} -> {"session_id"}
///   GET  /sessions/{id}/transcript  -> JSON lines
///   GET  /sessions/{id}/blobs/{seq} -> audio/wav for an agent_turn event
///   WS   /sessions/{id}/stream      clock_sync / user_message in, session events out
///
/// Each session's inbound frames run in arrival order on that session's own worker.
class Server {
public:
    Server(std::shared_ptr<Engine> engine, ServerOptions options);
    ~Server();

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds, starts the I/O threads and returns the bound port.
    unsigned short start();
    void stop();
    /// Blocks until stop() is called from another thread or a signal handler.
    void wait();

    unsigned short port() const;

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
};

} // namespace companioncast
