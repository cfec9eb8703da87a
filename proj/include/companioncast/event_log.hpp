#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace companioncast {

enum class EventKind {
    session_created,
    conversation_started,
    agent_turn,
    duck_on,
    duck_off,
    evaluation_report,
    conversation_ended,
    user_message,
    clock_sync,
    error,
};

std::string_view to_string(EventKind kind);
std::optional<EventKind> event_kind_from_string(std::string_view s);

struct SessionEvent {
    std::int64_t seq = 0;
    std::string wall_time;
    EventKind kind = EventKind::error;
    /// Kind-specific fields, serialized after seq, wall_time and kind.
    nlohmann::ordered_json payload = nlohmann::ordered_json::object();
    /// Synthesized speech for agent_turn events. Streamed, never written to the log.
    std::shared_ptr<const std::vector<std::uint8_t>> audio;

    nlohmann::ordered_json to_json() const;
    /// One JSON line without the trailing newline.
    std::string to_line() const;
};

/// Append-only, seq-ordered session log, optionally mirrored to a JSON-lines file.
/// Appends come from the session owner; readers may call events() from any thread.
class EventLog {
public:
    using Listener = std::function<void(const SessionEvent&)>;

    /// With a path, truncates the file and writes each event as it is appended.
    explicit EventLog(const std::optional<std::string>& path = std::nullopt);

    SessionEvent append(EventKind kind, std::string wall_time, nlohmann::ordered_json payload,
                        std::shared_ptr<const std::vector<std::uint8_t>> audio = nullptr);

    /// Called after every append, outside the log's lock.
    void set_listener(Listener listener);

    std::vector<SessionEvent> events() const;
    std::vector<SessionEvent> events_since(std::int64_t first_seq) const;
    std::optional<SessionEvent> find(std::int64_t seq) const;
    std::int64_t next_seq() const;
    std::string to_jsonl() const;

private:
    mutable std::mutex mutex_;
    std::vector<SessionEvent> events_;
    std::unique_ptr<std::ofstream> file_;
    Listener listener_;
};

/// "YYYY-MM-DDTHH:MM:SS.mmmZ"
std::string iso8601_utc(std::int64_t unix_millis);

} // namespace companioncast
