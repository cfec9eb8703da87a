#include "companioncast/event_log.hpp"

#include <array>
#include <ctime>

#include <fmt/format.h>

#include "companioncast/errors.hpp"

namespace companioncast {

namespace {

constexpr std::array<EventKind, 10> kAllKinds = {
    EventKind::session_created,   EventKind::conversation_started, EventKind::agent_turn, EventKind::duck_on,
    EventKind::duck_off,          EventKind::evaluation_report,    EventKind::conversation_ended,
    EventKind::user_message,      EventKind::clock_sync,           EventKind::error};

} // namespace

std::string_view to_string(EventKind kind) {
    switch (kind) {
    case EventKind::session_created: return "session_created";
    case EventKind::conversation_started: return "conversation_started";
    case EventKind::agent_turn: return "agent_turn";
    case EventKind::duck_on: return "duck_on";
    case EventKind::duck_off: return "duck_off";
    case EventKind::evaluation_report: return "evaluation_report";
    case EventKind::conversation_ended: return "conversation_ended";
    case EventKind::user_message: return "user_message";
    case EventKind::clock_sync: return "clock_sync";
    case EventKind::error: return "error";
    }
    return "error";
}

std::optional<EventKind> event_kind_from_string(std::string_view s) {
    for (auto k : kAllKinds) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

nlohmann::ordered_json SessionEvent::to_json() const {
    nlohmann::ordered_json j;
    j["kind"] = to_string(kind);
    j["seq"] = seq;
    j["wall_time"] = wall_time;
    for (const auto& [key, value] : payload.items()) {
        j[key] = value;
    }
    return j;
}

std::string SessionEvent::to_line() const { return to_json().dump(); }

EventLog::EventLog(const std::optional<std::string>& path) {
    if (!path) {
        return;
    }
    file_ = std::make_unique<std::ofstream>(*path, std::ios::binary | std::ios::trunc);
    if (!*file_) {
        throw NotFoundError(fmt::format("cannot open event log '{}' for writing", *path));
    }
}

SessionEvent EventLog::append(EventKind kind, std::string wall_time, nlohmann::ordered_json payload,
                              std::shared_ptr<const std::vector<std::uint8_t>> audio) {
    SessionEvent ev;
    Listener listener;
    {
        std::lock_guard lock(mutex_);
        ev.seq = static_cast<std::int64_t>(events_.size());
        ev.wall_time = std::move(wall_time);
        ev.kind = kind;
        ev.payload = std::move(payload);
        ev.audio = std::move(audio);
        events_.push_back(ev);
        if (file_) {
            *file_ << ev.to_line() << '\n';
            file_->flush();
        }
        listener = listener_;
    }
    if (listener) {
        listener(ev);
    }
    return ev;
}

void EventLog::set_listener(Listener listener) {
    std::lock_guard lock(mutex_);
    listener_ = std::move(listener);
}

std::vector<SessionEvent> EventLog::events() const {
    std::lock_guard lock(mutex_);
    return events_;
}

std::vector<SessionEvent> EventLog::events_since(std::int64_t first_seq) const {
    std::lock_guard lock(mutex_);
    if (first_seq <= 0) {
        return events_;
    }
    if (first_seq >= static_cast<std::int64_t>(events_.size())) {
        return {};
    }
    return {events_.begin() + first_seq, events_.end()};
}

std::optional<SessionEvent> EventLog::find(std::int64_t seq) const {
    std::lock_guard lock(mutex_);
    if (seq < 0 || seq >= static_cast<std::int64_t>(events_.size())) {
        return std::nullopt;
    }
    return events_[static_cast<std::size_t>(seq)];
}

std::int64_t EventLog::next_seq() const {
    std::lock_guard lock(mutex_);
    return static_cast<std::int64_t>(events_.size());
}

std::string EventLog::to_jsonl() const {
    std::lock_guard lock(mutex_);
    std::string out;
    for (const auto& ev : events_) {
        out += ev.to_line();
        out += '\n';
    }
    return out;
}

std::string iso8601_utc(std::int64_t unix_millis) {
    std::int64_t secs = unix_millis / 1000;
    std::int64_t ms = unix_millis % 1000;
    if (ms < 0) {
        ms += 1000;
        --secs;
    }
    const std::time_t t = static_cast<std::time_t>(secs);
    std::tm tm{};
    gmtime_r(&t, &tm);
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}.{:03d}Z", tm.tm_year + 1900, tm.tm_mon + 1,
                       tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, ms);
}

} // namespace companioncast
