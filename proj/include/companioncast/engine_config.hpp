#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "companioncast/agents.hpp"
#include "companioncast/chat_backend.hpp"
#include "companioncast/judge.hpp"
#include "companioncast/scheduler.hpp"
#include "companioncast/voice.hpp"

namespace companioncast {

/// Where one backend's completions or clips come from.
struct BackendSpec {
    /// "scripted" or "http" for chat backends; "mock" or "http" for TTS.
    std::string type;
    std::string url;
    std::string model;
    /// Environment variable holding the API key.
    std::string api_key_env;
    RetryPolicy retry;
    /// Agent script (inline object, or loaded from script_path).
    nlohmann::json script;
    ScriptedJudgeBackend::Schedule judge_schedule;

    static BackendSpec of_type(std::string type) {
        BackendSpec spec;
        spec.type = std::move(type);
        return spec;
    }
};

/// Engine configuration file. Every key is optional; secrets come from the environment.
struct EngineConfig {
    Seconds context_width_s = kDefaultContextWidth;
    SchedulerConfig scheduler;
    std::vector<AgentPersona> roster = default_roster();
    Rubric rubric = rubric_preset(kDefaultRubric);
    double judge_temperature = 0.2;
    std::optional<double> early_accept_overall;
    BackendSpec agents = BackendSpec::of_type("scripted");
    BackendSpec judge = BackendSpec::of_type("scripted");
    BackendSpec tts = BackendSpec::of_type("mock");
    StagingOptions staging;
    /// Clips above this size are served as blob references instead of inline base64.
    std::size_t max_inline_audio_bytes = 512 * 1024;
    Seconds clock_cadence_s = 0.5;
    std::string data_dir = "data";

    /// Relative script paths and data_dir resolve against `base_dir`. Throws ValidationError.
    static EngineConfig from_json(const nlohmann::json& j, const std::string& base_dir = ".");
    static EngineConfig load(const std::string& path);
};

struct EngineServices {
    std::shared_ptr<const ChatBackend> agents;
    JudgeHandle judge;
    std::shared_ptr<const TtsBackend> tts;
};

EngineServices make_services(const EngineConfig& config);

} // namespace companioncast
