#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace companioncast {

enum class ChatRole { system, user, assistant };
std::string_view to_string(ChatRole role);

struct ChatMessage {
    ChatRole role = ChatRole::user;
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

/// One chat-completion call. `tags` carry structured request metadata
/// (agent id, round, scenario) that live backends ignore and scripted ones use.
struct ChatRequest {
    std::string system_prompt;
    std::vector<ChatMessage> messages;
    double temperature = 0.7;
    std::optional<std::uint64_t> seed;
    std::map<std::string, std::string> tags;

    std::string tag(const std::string& key) const {
        const auto it = tags.find(key);
        return it == tags.end() ? std::string{} : it->second;
    }
};

/// Chat-completion service. Implementations must be safe for concurrent use.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;

    /// Returns the completion text. Throws BackendError on failure.
    virtual std::string complete(const ChatRequest& request) const = 0;
};

/// Timeout and retry policy for live backends.
struct RetryPolicy {
    std::chrono::milliseconds timeout{20000};
    int retries = 2;
    std::chrono::milliseconds initial_backoff{500};

    std::chrono::milliseconds backoff_for(int attempt) const { return initial_backoff * (1 << attempt); }
};

/// Runs `attempt` up to 1 + policy.retries times with exponential backoff,
/// rethrowing the last failure as BackendError.
std::string with_retries(const RetryPolicy& policy, std::string_view what,
                         const std::function<std::string()>& attempt);

/// Deterministic agent backend driven by a script of response templates.
///
/// Script shape: `{"<agent_id>": {"<round>": template | [variants...], "*": ...}, "default": template}`.
/// Templates may use {scenario_kind}, {score}, {team}, {agent_id} and {round}.
/// With several variants one is picked from (seed, conversation, agent, round).
class ScriptedChatBackend final : public ChatBackend {
public:
    ScriptedChatBackend() = default;
    explicit ScriptedChatBackend(const nlohmann::json& script);

    static ScriptedChatBackend from_file(const std::string& path);

    std::string complete(const ChatRequest& request) const override;

private:
    std::map<std::string, std::map<std::string, std::vector<std::string>>> templates_;
    std::string default_template_ = "{agent_id} on the {scenario_kind}: it is {score} and {team} fans are watching closely.";
};

/// Deterministic judge backend. Dimension i in round r scores
/// `base + step * r + offsets[i]`, emitted as the strict JSON object judges return.
class ScriptedJudgeBackend final : public ChatBackend {
public:
    struct Schedule {
        double base = 5.0;
        double step = 1.5;
        std::vector<double> offsets;
        std::string feedback = "Tie reactions more closely to the latest play and let each fan's personality show.";
    };

    ScriptedJudgeBackend() = default;
    explicit ScriptedJudgeBackend(Schedule schedule) : schedule_(std::move(schedule)) {}

    std::string complete(const ChatRequest& request) const override;

    const Schedule& schedule() const { return schedule_; }

private:
    Schedule schedule_;
};

/// Adapts a callable; handy for tests that need to observe or fail requests.
class CallbackChatBackend final : public ChatBackend {
public:
    using Fn = std::function<std::string(const ChatRequest&)>;
    explicit CallbackChatBackend(Fn fn) : fn_(std::move(fn)) {}

    std::string complete(const ChatRequest& request) const override { return fn_(request); }

private:
    Fn fn_;
};

/// FNV-1a, used wherever a platform-stable hash is needed for seeding.
std::uint64_t stable_hash(std::string_view s, std::uint64_t basis = 14695981039346656037ULL);

} // namespace companioncast
