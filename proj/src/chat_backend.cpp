#include "companioncast/chat_backend.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "companioncast/errors.hpp"
#include "companioncast/text.hpp"

namespace companioncast {

std::string_view to_string(ChatRole role) {
    switch (role) {
    case ChatRole::system: return "system";
    case ChatRole::user: return "user";
    case ChatRole::assistant: return "assistant";
    }
    return "user";
}

std::uint64_t stable_hash(std::string_view s, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string with_retries(const RetryPolicy& policy, std::string_view what,
                         const std::function<std::string()>& attempt) {
    std::string last_error;
    for (int i = 0; i <= policy.retries; ++i) {
        if (i > 0) {
            std::this_thread::sleep_for(policy.backoff_for(i - 1));
        }
        try {
            return attempt();
        } catch (const std::exception& e) {
            last_error = e.what();
            spdlog::warn("{}: attempt {} of {} failed: {}", what, i + 1, policy.retries + 1, last_error);
        }
    }
    throw BackendError(fmt::format("{}: failed after {} attempts: {}", what, policy.retries + 1, last_error));
}

namespace {

std::string substitute(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tmpl.size());
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        if (tmpl[i] == '{') {
            const auto close = tmpl.find('}', i);
            if (close != std::string_view::npos) {
                const auto it = vars.find(std::string(tmpl.substr(i + 1, close - i - 1)));
                if (it != vars.end()) {
                    out += it->second;
                    i = close;
                    continue;
                }
            }
        }
        out += tmpl[i];
    }
    return out;
}

std::vector<std::string> variants_of(const nlohmann::json& v, const std::string& where) {
    if (v.is_string()) {
        return {v.get<std::string>()};
    }
    if (v.is_array() && !v.empty()) {
        std::vector<std::string> out;
        for (const auto& item : v) {
            if (!item.is_string()) {
                throw ValidationError(fmt::format("script {}: variants must be strings", where));
            }
            out.push_back(item.get<std::string>());
        }
        return out;
    }
    throw ValidationError(fmt::format("script {}: expected a string or a non-empty array of strings", where));
}

} // namespace

ScriptedChatBackend::ScriptedChatBackend(const nlohmann::json& script) {
    if (!script.is_object()) {
        throw ValidationError("script: expected an object keyed by agent id");
    }
    for (const auto& [agent, rounds] : script.items()) {
        if (agent == "default") {
            if (!rounds.is_string()) {
                throw ValidationError("script.default: expected a string");
            }
            default_template_ = rounds.get<std::string>();
            continue;
        }
        if (!rounds.is_object()) {
            throw ValidationError(fmt::format("script.{}: expected an object keyed by round index", agent));
        }
        for (const auto& [round, value] : rounds.items()) {
            templates_[agent][round] = variants_of(value, fmt::format("{}.{}", agent, round));
        }
    }
}

ScriptedChatBackend ScriptedChatBackend::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw NotFoundError(fmt::format("cannot open script file '{}'", path));
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return ScriptedChatBackend(nlohmann::json::parse(buf.str()));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(fmt::format("script file '{}': {}", path, e.what()));
    }
}

std::string ScriptedChatBackend::complete(const ChatRequest& request) const {
    const auto agent = request.tag("agent_id");
    const auto round = request.tag("round_index");
    const std::vector<std::string>* variants = nullptr;
    if (const auto a = templates_.find(agent); a != templates_.end()) {
        if (const auto r = a->second.find(round); r != a->second.end()) {
            variants = &r->second;
        } else if (const auto w = a->second.find("*"); w != a->second.end()) {
            variants = &w->second;
        }
    }
    std::string_view chosen = default_template_;
    if (variants) {
        std::uint64_t h = stable_hash(fmt::format("{}|{}|{}|{}", request.seed.value_or(0), request.tag("conv_id"),
                                                  agent, round));
        chosen = (*variants)[h % variants->size()];
    }
    const std::map<std::string, std::string> vars = {
        {"scenario_kind", request.tag("scenario_kind")},
        {"score", request.tag("score")},
        {"team", request.tag("team")},
        {"agent_id", agent},
        {"round", round},
    };
    return substitute(chosen, vars);
}

std::string ScriptedJudgeBackend::complete(const ChatRequest& request) const {
    const auto keys_tag = request.tag("rubric_keys");
    if (keys_tag.empty()) {
        throw BackendError("scripted judge: request carries no rubric_keys tag");
    }
    int round = 0;
    try {
        round = std::stoi(request.tag("round_index"));
    } catch (const std::exception&) {
        throw BackendError("scripted judge: request carries no round_index tag");
    }
    nlohmann::ordered_json out;
    std::size_t i = 0;
    std::size_t pos = 0;
    while (pos <= keys_tag.size()) {
        const auto comma = keys_tag.find(',', pos);
        const auto key = keys_tag.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        const double offset = i < schedule_.offsets.size() ? schedule_.offsets[i] : 0.0;
        out[key] = schedule_.base + schedule_.step * round + offset;
        ++i;
        if (comma == std::string::npos) {
            break;
        }
        pos = comma + 1;
    }
    out["feedback"] = schedule_.feedback;
    return out.dump();
}

} // namespace companioncast
