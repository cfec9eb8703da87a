#include "companioncast/engine_config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "companioncast/errors.hpp"
#include "companioncast/http_backends.hpp"

namespace companioncast {

namespace {

nlohmann::json read_json_file(const std::string& path, std::string_view what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw NotFoundError(fmt::format("cannot open {} '{}'", what, path));
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(fmt::format("{} '{}': {}", what, path, e.what()));
    }
}

RetryPolicy retry_from_json(const nlohmann::json& j, RetryPolicy r) {
    if (j.contains("timeout_s")) {
        r.timeout = std::chrono::milliseconds(static_cast<long>(j.at("timeout_s").get<double>() * 1000));
    }
    r.retries = j.value("retries", r.retries);
    if (j.contains("backoff_s")) {
        r.initial_backoff = std::chrono::milliseconds(static_cast<long>(j.at("backoff_s").get<double>() * 1000));
    }
    return r;
}

BackendSpec backend_from_json(const nlohmann::json& j, BackendSpec spec, const std::string& base_dir) {
    spec.type = j.value("type", spec.type);
    spec.url = j.value("url", spec.url);
    spec.model = j.value("model", spec.model);
    spec.api_key_env = j.value("api_key_env", spec.api_key_env);
    spec.retry = retry_from_json(j, spec.retry);
    if (j.contains("script")) {
        spec.script = j.at("script");
    }
    if (j.contains("script_path")) {
        std::filesystem::path p = j.at("script_path").get<std::string>();
        if (p.is_relative()) {
            p = std::filesystem::path(base_dir) / p;
        }
        spec.script = read_json_file(p.string(), "agent script");
    }
    if (j.contains("schedule")) {
        const auto& s = j.at("schedule");
        spec.judge_schedule.base = s.value("base", spec.judge_schedule.base);
        spec.judge_schedule.step = s.value("step", spec.judge_schedule.step);
        spec.judge_schedule.offsets = s.value("offsets", spec.judge_schedule.offsets);
        spec.judge_schedule.feedback = s.value("feedback", spec.judge_schedule.feedback);
    }
    return spec;
}

Rubric rubric_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        return rubric_preset(j.get<std::string>());
    }
    Rubric r;
    r.name = j.value("name", std::string("custom"));
    r.scale_max = j.value("scale_max", 10);
    for (const auto& d : j.at("dimensions")) {
        r.dimensions.push_back({d.at("key").get<std::string>(), d.value("description", std::string{})});
    }
    return r;
}

std::string env_or_empty(const std::string& name) {
    if (name.empty()) {
        return {};
    }
    const char* v = std::getenv(name.c_str());
    return v ? v : "";
}

std::shared_ptr<const ChatBackend> make_chat_backend(const BackendSpec& spec, bool is_judge) {
    if (spec.type == "scripted") {
        if (is_judge) {
            return std::make_shared<ScriptedJudgeBackend>(spec.judge_schedule);
        }
        return spec.script.is_null() ? std::make_shared<ScriptedChatBackend>()
                                     : std::make_shared<ScriptedChatBackend>(spec.script);
    }
    if (spec.type == "http") {
        if (spec.url.empty()) {
            throw ValidationError("http backend: url is required");
        }
        auto [base, path] = split_url(spec.url);
        if (path == "/") {
            path.clear();
        }
        return std::make_shared<HttpChatBackend>(HttpEndpoint{base, path, env_or_empty(spec.api_key_env), spec.retry},
                                                 spec.model);
    }
    throw ValidationError(fmt::format("unknown chat backend type '{}'", spec.type));
}

} // namespace

EngineConfig EngineConfig::from_json(const nlohmann::json& j, const std::string& base_dir) {
    EngineConfig c;
    if (j.is_null()) {
        return c;
    }
    if (!j.is_object()) {
        throw ValidationError("engine config: expected an object");
    }
    try {
        c.context_width_s = j.value("context_width_s", c.context_width_s);
        if (!(c.context_width_s > 0.0)) {
            throw ValidationError("engine config: context_width_s must be positive");
        }
        if (j.contains("scheduler")) {
            c.scheduler = SchedulerConfig::from_json(j.at("scheduler"));
        }
        if (j.contains("roster")) {
            c.roster.clear();
            for (const auto& p : j.at("roster")) {
                c.roster.push_back(AgentPersona::from_json(p));
            }
        }
        validate_roster(c.roster);
        if (j.contains("judge")) {
            const auto& jj = j.at("judge");
            if (jj.contains("rubric")) {
                c.rubric = rubric_from_json(jj.at("rubric"));
            }
            c.judge_temperature = jj.value("temperature", c.judge_temperature);
            if (jj.contains("early_accept_overall") && !jj.at("early_accept_overall").is_null()) {
                c.early_accept_overall = jj.at("early_accept_overall").get<double>();
            }
        }
        c.rubric.validate();
        if (j.contains("backends")) {
            const auto& b = j.at("backends");
            if (b.contains("agents")) c.agents = backend_from_json(b.at("agents"), c.agents, base_dir);
            if (b.contains("judge")) c.judge = backend_from_json(b.at("judge"), c.judge, base_dir);
            if (b.contains("tts")) c.tts = backend_from_json(b.at("tts"), c.tts, base_dir);
        }
        if (j.contains("staging")) {
            const auto& s = j.at("staging");
            c.staging.gap_s = s.value("gap_s", c.staging.gap_s);
            c.max_inline_audio_bytes = s.value("max_inline_audio_bytes", c.max_inline_audio_bytes);
        }
        c.clock_cadence_s = j.value("clock_cadence_s", c.clock_cadence_s);
        if (!(c.clock_cadence_s > 0.0)) {
            throw ValidationError("engine config: clock_cadence_s must be positive");
        }
        if (j.contains("data_dir")) {
            std::filesystem::path d = j.at("data_dir").get<std::string>();
            if (!d.empty() && d.is_relative()) {
                d = std::filesystem::path(base_dir) / d;
            }
            c.data_dir = d.string();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(fmt::format("engine config: {}", e.what()));
    }
    return c;
}

EngineConfig EngineConfig::load(const std::string& path) {
    const auto j = read_json_file(path, "engine config");
    const auto base = std::filesystem::path(path).parent_path().string();
    return from_json(j, base.empty() ? "." : base);
}

EngineServices make_services(const EngineConfig& config) {
    EngineServices s;
    s.agents = make_chat_backend(config.agents, false);
    s.judge.rubric = config.rubric;
    s.judge.backend = make_chat_backend(config.judge, true);
    s.judge.temperature = config.judge_temperature;
    s.judge.source = config.judge.type == "http" ? JudgedBy::live : JudgedBy::scripted;
    s.judge.early_accept_overall = config.early_accept_overall;
    if (config.tts.type == "mock") {
        s.tts = std::make_shared<MockTtsBackend>();
    } else if (config.tts.type == "http") {
        s.tts = std::make_shared<HttpTtsBackend>(HttpTtsBackend::from_env(config.tts.retry));
    } else {
        throw ValidationError(fmt::format("unknown tts backend type '{}'", config.tts.type));
    }
    return s;
}

} // namespace companioncast
