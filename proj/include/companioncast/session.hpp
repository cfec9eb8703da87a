#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "companioncast/agents.hpp"
#include "companioncast/engine_config.hpp"
#include "companioncast/event_log.hpp"
#include "companioncast/scheduler.hpp"
#include "companioncast/timeline.hpp"
#include "companioncast/voice.hpp"

namespace companioncast {

enum class SessionPhase { idle, conversing, staging };
std::string_view to_string(SessionPhase phase);

struct SessionOptions {
    std::string session_id;
    TeamSide supported_team = TeamSide::home;
    std::uint64_t seed = 0;
    /// Stamp events with a wall time derived from the video clock instead of
    /// the system clock, so replays are byte-identical.
    bool virtual_wall_clock = false;
    /// JSON-lines file that mirrors the event log.
    std::optional<std::string> log_path;
};

/// One viewer's live session. All mutating calls come from a single owner;
/// transcript reads are safe from any thread.
class Session {
public:
    Session(std::shared_ptr<const TimelineDoc> timeline, const EngineConfig& config, EngineServices services,
            SessionOptions options);

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;

    /// Advances the video clock. Forward motion fires every trigger crossed
    /// since the furthest clock reached; seeking back never re-fires.
    std::vector<SessionEvent> on_clock(Seconds video_t);

    /// Logs the message and starts a user-initiated conversation, or queues it
    /// while another conversation is running. Throws ValidationError for blank text.
    std::vector<SessionEvent> on_user_message(std::string_view text);

    std::vector<SessionEvent> transcript() const { return log_.events(); }
    std::string transcript_jsonl() const { return log_.to_jsonl(); }
    const EventLog& log() const { return log_; }

    /// Receives every appended event in order.
    void set_listener(EventLog::Listener listener) { log_.set_listener(std::move(listener)); }

    const std::string& id() const { return options_.session_id; }
    TeamSide supported_team() const { return options_.supported_team; }
    const std::vector<AgentPersona>& roster() const { return roster_; }
    std::optional<TeamSide> side_of(std::string_view agent_id) const;
    const TimelineDoc& timeline() const { return *timeline_; }
    SessionPhase phase() const { return phase_; }
    Seconds clock() const { return clock_t_; }
    const SchedulerState& scheduler_state() const { return scheduler_; }
    std::size_t pending_user_messages() const { return pending_.size(); }
    /// Every automatic decision taken so far, fired or suppressed.
    const std::vector<TriggerDecision>& decisions() const { return decisions_; }
    const std::vector<Conversation>& conversations() const { return conversations_; }
    const std::vector<PlaybackPlan>& plans() const { return plans_; }

private:
    struct TriggerSource {
        std::string kind;
        nlohmann::ordered_json detail;
    };

    SessionEvent emit(EventKind kind, nlohmann::ordered_json payload,
                      std::shared_ptr<const std::vector<std::uint8_t>> audio = nullptr);
    std::string wall_time() const;
    void run_pipeline(const TriggerDecision& decision, const TriggerSource& source,
                      std::optional<std::string> user_text);
    void drain_pending();

    std::shared_ptr<const TimelineDoc> timeline_;
    EngineConfig config_;
    EngineServices services_;
    SessionOptions options_;
    std::vector<AgentPersona> roster_;
    EventLog log_;

    std::vector<TriggerCandidate> candidates_;
    std::size_t next_candidate_ = 0;
    std::optional<Seconds> furthest_t_;
    Seconds clock_t_ = 0;
    SchedulerState scheduler_;
    SessionPhase phase_ = SessionPhase::idle;
    std::deque<std::string> pending_;
    CaptionWindowCache window_cache_;
    int conversation_count_ = 0;
    std::vector<TriggerDecision> decisions_;
    std::vector<Conversation> conversations_;
    std::vector<PlaybackPlan> plans_;
};

/// Server frame for an event: the log record plus inline audio
/// (`audio_b64`) or, above `max_inline_bytes`, a blob URL (`audio_ref`).
nlohmann::ordered_json stream_frame(const SessionEvent& event, std::string_view session_id,
                                    std::size_t max_inline_bytes);

/// Timelines and sessions known to a running engine. Thread-safe.
class Engine {
public:
    Engine(EngineConfig config, EngineServices services);

    /// Validates and stores a timeline; returns its id (the video id, suffixed if taken).
    std::string add_timeline(TimelineDoc doc);
    std::vector<std::pair<std::string, std::shared_ptr<const TimelineDoc>>> timelines() const;
    std::shared_ptr<const TimelineDoc> timeline(const std::string& id) const;

    /// Throws NotFoundError for an unknown timeline.
    std::shared_ptr<Session> create_session(const std::string& timeline_id, TeamSide supported_team,
                                            std::optional<std::uint64_t> seed = std::nullopt);
    /// Throws NotFoundError for an unknown session.
    std::shared_ptr<Session> session(const std::string& id) const;

    const EngineConfig& config() const { return config_; }

private:
    EngineConfig config_;
    EngineServices services_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const TimelineDoc>> timelines_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t session_counter_ = 0;
};

struct SimulationOptions {
    TeamSide supported_team = TeamSide::home;
    std::uint64_t seed = 0;
    std::string session_id = "sim";
    /// Delivered right after the first clock tick at or past their time.
    std::vector<UserMessage> user_messages;
    std::optional<std::string> log_path;
};

struct SimulationResult {
    std::vector<SessionEvent> events;
    std::string transcript_jsonl;
    std::vector<Conversation> conversations;
    std::vector<PlaybackPlan> plans;
    std::vector<TriggerDecision> decisions;
};

/// Batch run with no server: ticks the clock from 0 to the end of the video
/// at the configured cadence and returns the full session record.
SimulationResult simulate(std::shared_ptr<const TimelineDoc> timeline, const EngineConfig& config,
                          const EngineServices& services, const SimulationOptions& options);

} // namespace companioncast
