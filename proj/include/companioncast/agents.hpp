#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "companioncast/chat_backend.hpp"
#include "companioncast/conversation.hpp"
#include "companioncast/errors.hpp"
#include "companioncast/judge.hpp"
#include "companioncast/scheduler.hpp"
#include "companioncast/timeline.hpp"

namespace companioncast {

enum class RoleKind { diehard, analyst, comedian };
/// Allegiance relative to the team the viewer supports.
enum class Allegiance { user_team, opponent_team, neutral };

std::string_view to_string(RoleKind r);
std::string_view to_string(Allegiance a);
std::optional<RoleKind> role_kind_from_string(std::string_view s);
std::optional<Allegiance> allegiance_from_string(std::string_view s);

struct AgentPersona {
    std::string id;
    std::string display_name;
    RoleKind role_kind = RoleKind::diehard;
    Allegiance allegiance = Allegiance::user_team;
    std::string style_prompt;
    double temperature = 0.7;
    std::string voice_profile_id;
    /// Horizontal placement around the listener; the role default applies when unset.
    std::optional<double> spatial_azimuth_deg;

    static AgentPersona from_json(const nlohmann::json& j);
    nlohmann::ordered_json to_json() const;
};

/// The three-fan roster: a die-hard and an analyst backing the viewer's team,
/// and a sarcastic comedian backing the opponent.
std::vector<AgentPersona> default_roster();

/// Side the persona cheers for, or nullopt for neutral personas.
std::optional<TeamSide> allegiance_side(const AgentPersona& persona, TeamSide supported_team);

inline constexpr std::size_t kMaxTurnChars = 280;

std::string build_system_prompt(const AgentPersona& persona, const ScenarioContext& scenario, const TimelineDoc& doc,
                                TeamSide supported_team);

/// A round stopped because an agent's backend failed. Turns produced before
/// the failure stay on the conversation.
class RoundError : public Error {
public:
    RoundError(std::string agent_id, int round_index, const std::string& cause);

    const std::string& agent_id() const { return agent_id_; }
    int round_index() const { return round_index_; }

private:
    std::string agent_id_;
    int round_index_;
};

/// Inputs shared by every round of one conversation.
struct ConversationSetup {
    const TimelineDoc* doc = nullptr;
    TeamSide supported_team = TeamSide::home;
    GameScore score;
    std::optional<std::uint64_t> seed;
    std::size_t max_turn_chars = kMaxTurnChars;
};

/// Runs one round: up to max_messages_per_round agents in roster order, each
/// seeing the context, every earlier turn and the latest feedback note.
/// Appends the new turns to `conv` and returns them.
std::vector<Turn> run_round(Conversation& conv, std::string_view context_text, std::span<const AgentPersona> roster,
                            const ChatBackend& backend, const std::optional<std::string>& feedback,
                            const ConversationSetup& setup);

/// Runs the full round budget with judge feedback between rounds and a final
/// logging-only evaluation. Judge failures skip that round's feedback; agent
/// failures end the conversation early with the error recorded.
Conversation run_conversation(const TriggerDecision& trigger, std::string conv_id, std::string_view context_text,
                              std::span<const AgentPersona> roster, const ChatBackend& agent_backend,
                              const JudgeHandle& judge, const ConversationSetup& setup,
                              std::optional<std::string> user_text = std::nullopt);

} // namespace companioncast
