#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "companioncast/timeline.hpp"

namespace companioncast {

enum class ScenarioKind { goal, penalty, foul, corner, substitution, replay, user_initiated, other };
enum class Intensity { high, medium, low };

inline constexpr std::size_t kScenarioKindCount = 8;

std::string_view to_string(ScenarioKind kind);
std::string_view to_string(Intensity intensity);
std::optional<ScenarioKind> scenario_kind_from_string(std::string_view s);
std::optional<Intensity> intensity_from_string(std::string_view s);

struct ScenarioContext {
    ScenarioKind kind = ScenarioKind::other;
    Intensity intensity = Intensity::low;
    int rounds_total = 1;
    int max_messages_per_round = 3;
    /// Scenario-specific prompt fragment.
    std::string directive;

    friend bool operator==(const ScenarioContext&, const ScenarioContext&) = default;
};

struct UserMessage {
    Seconds t = 0;
    std::string text;
};

struct SchedulerConfig {
    Seconds separation_high_s = 15;
    Seconds separation_medium_s = 30;
    Seconds separation_low_s = 30;
    int rounds_key_moment = 3;
    int rounds_replay = 1;
    int rounds_user = 2;
    int max_messages_per_round = 3;
    std::array<Intensity, kScenarioKindCount> intensity_map = default_intensity_map();
    std::array<std::string, kScenarioKindCount> directives = default_directives();

    static std::array<Intensity, kScenarioKindCount> default_intensity_map();
    static std::array<std::string, kScenarioKindCount> default_directives();

    Intensity intensity_of(ScenarioKind kind) const { return intensity_map[static_cast<std::size_t>(kind)]; }
    const std::string& directive_of(ScenarioKind kind) const { return directives[static_cast<std::size_t>(kind)]; }

    /// Reads the `scheduler` section of the engine config. Missing keys keep defaults.
    static SchedulerConfig from_json(const nlohmann::json& j);
    nlohmann::ordered_json to_json() const;
};

ScenarioContext classify_scenario(const KeyMoment& moment, const SchedulerConfig& config = {});
ScenarioContext classify_scenario(const ReplaySegment& replay, const SchedulerConfig& config = {});
ScenarioContext classify_scenario(const UserMessage& message, const SchedulerConfig& config = {});

Seconds min_separation(Intensity intensity, const SchedulerConfig& config = {});

enum class SuppressReason { too_close, overlapping_conversation };
std::string_view to_string(SuppressReason reason);

struct TriggerDecision {
    bool fire = false;
    Seconds trigger_t = 0;
    ScenarioContext scenario;
    std::optional<SuppressReason> suppressed_reason;
};

struct SchedulerState {
    /// Video time of the last fired automatic trigger.
    std::optional<Seconds> last_fired_t;
    bool conversation_active = false;
    /// Latest candidate time presented, for the ordering precondition.
    std::optional<Seconds> last_candidate_t;
};

/// Applies the separation rules to one candidate and updates `state`.
/// User-initiated scenarios always fire and never touch last_fired_t.
/// Throws OrderingError when candidate_t precedes an earlier candidate.
TriggerDecision next_trigger(SchedulerState& state, Seconds candidate_t, const ScenarioContext& scenario,
                             const SchedulerConfig& config = {});

/// One automatic trigger source, in video-time order.
struct TriggerCandidate {
    Seconds t = 0;
    ScenarioContext scenario;
    /// Index into doc.key_moments or doc.replays.
    std::size_t source_index = 0;
    bool is_replay = false;
};

/// Key moments and replay starts merged into one stream ordered by time.
/// On equal times key moments come before replays, each in document order.
std::vector<TriggerCandidate> trigger_candidates(const TimelineDoc& doc, const SchedulerConfig& config = {});

/// Offline planner: every candidate with its decision, in order.
std::vector<TriggerDecision> plan_timeline(const TimelineDoc& doc, const SchedulerConfig& config = {});

} // namespace companioncast
