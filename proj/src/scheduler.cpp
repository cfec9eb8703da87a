#include "companioncast/scheduler.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "companioncast/errors.hpp"

namespace companioncast {

namespace {

constexpr std::array<ScenarioKind, kScenarioKindCount> kAllKinds = {
    ScenarioKind::goal,    ScenarioKind::penalty,        ScenarioKind::foul,  ScenarioKind::corner,
    ScenarioKind::substitution, ScenarioKind::replay, ScenarioKind::user_initiated, ScenarioKind::other};

std::size_t idx(ScenarioKind k) { return static_cast<std::size_t>(k); }

ScenarioKind scenario_of(MomentKind kind) {
    switch (kind) {
    case MomentKind::goal: return ScenarioKind::goal;
    case MomentKind::penalty: return ScenarioKind::penalty;
    case MomentKind::foul: return ScenarioKind::foul;
    case MomentKind::corner: return ScenarioKind::corner;
    case MomentKind::substitution: return ScenarioKind::substitution;
    case MomentKind::other: return ScenarioKind::other;
    }
    return ScenarioKind::other;
}

ScenarioContext make_scenario(ScenarioKind kind, int rounds, const SchedulerConfig& config) {
    return ScenarioContext{kind, config.intensity_of(kind), rounds, config.max_messages_per_round,
                           config.directive_of(kind)};
}

int positive_int(const nlohmann::json& j, const char* key, int fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<int>() < 1) {
        throw ValidationError(fmt::format("scheduler.{}: expected a positive integer", key));
    }
    return v.get<int>();
}

Seconds nonneg_seconds(const nlohmann::json& j, const char* key, Seconds fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    const auto& v = j.at(key);
    if (!v.is_number() || v.get<double>() < 0.0) {
        throw ValidationError(fmt::format("scheduler.separation_s.{}: expected a non-negative number", key));
    }
    return v.get<double>();
}

} // namespace

std::string_view to_string(ScenarioKind kind) {
    switch (kind) {
    case ScenarioKind::goal: return "goal";
    case ScenarioKind::penalty: return "penalty";
    case ScenarioKind::foul: return "foul";
    case ScenarioKind::corner: return "corner";
    case ScenarioKind::substitution: return "substitution";
    case ScenarioKind::replay: return "replay";
    case ScenarioKind::user_initiated: return "user_initiated";
    case ScenarioKind::other: return "other";
    }
    return "other";
}

std::string_view to_string(Intensity intensity) {
    switch (intensity) {
    case Intensity::high: return "high";
    case Intensity::medium: return "medium";
    case Intensity::low: return "low";
    }
    return "low";
}

std::string_view to_string(SuppressReason reason) {
    return reason == SuppressReason::too_close ? "too_close" : "overlapping_conversation";
}

std::optional<ScenarioKind> scenario_kind_from_string(std::string_view s) {
    for (auto k : kAllKinds) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

std::optional<Intensity> intensity_from_string(std::string_view s) {
    for (auto i : {Intensity::high, Intensity::medium, Intensity::low}) {
        if (to_string(i) == s) return i;
    }
    return std::nullopt;
}

std::array<Intensity, kScenarioKindCount> SchedulerConfig::default_intensity_map() {
    std::array<Intensity, kScenarioKindCount> m{};
    m[idx(ScenarioKind::goal)] = Intensity::high;
    m[idx(ScenarioKind::penalty)] = Intensity::high;
    m[idx(ScenarioKind::foul)] = Intensity::medium;
    m[idx(ScenarioKind::corner)] = Intensity::medium;
    m[idx(ScenarioKind::replay)] = Intensity::medium;
    m[idx(ScenarioKind::substitution)] = Intensity::low;
    m[idx(ScenarioKind::other)] = Intensity::low;
    m[idx(ScenarioKind::user_initiated)] = Intensity::low;
    return m;
}

std::array<std::string, kScenarioKindCount> SchedulerConfig::default_directives() {
    std::array<std::string, kScenarioKindCount> d{};
    d[idx(ScenarioKind::goal)] =
        "A goal was just scored. React with peak emotion: celebrate or despair according to your allegiance, "
        "and keep the exchange fast and punchy.";
    d[idx(ScenarioKind::penalty)] =
        "A penalty has been given. Build the tension, argue about whether it was deserved, "
        "and anticipate the kick.";
    d[idx(ScenarioKind::foul)] =
        "A foul was committed. Debate the referee's call and the player's intent with moderate heat.";
    d[idx(ScenarioKind::corner)] =
        "A corner kick is coming. Talk about the set-piece threat and who might win the header.";
    d[idx(ScenarioKind::substitution)] =
        "A substitution was made. Discuss calmly what the change means tactically.";
    d[idx(ScenarioKind::replay)] =
        "A replay of an earlier moment is showing. Revisit the moment briefly with a fresh observation.";
    d[idx(ScenarioKind::user_initiated)] =
        "The viewer spoke to the group. Answer the viewer directly and keep the conversation friendly.";
    d[idx(ScenarioKind::other)] = "Something notable happened. Share a short reaction in character.";
    return d;
}

SchedulerConfig SchedulerConfig::from_json(const nlohmann::json& j) {
    SchedulerConfig c;
    if (j.is_null()) {
        return c;
    }
    if (!j.is_object()) {
        throw ValidationError("scheduler: expected an object");
    }
    if (j.contains("separation_s")) {
        const auto& s = j.at("separation_s");
        c.separation_high_s = nonneg_seconds(s, "high", c.separation_high_s);
        const Seconds fallback = nonneg_seconds(s, "default", c.separation_medium_s);
        c.separation_medium_s = nonneg_seconds(s, "medium", fallback);
        c.separation_low_s = nonneg_seconds(s, "low", fallback);
    }
    if (j.contains("rounds")) {
        const auto& r = j.at("rounds");
        c.rounds_key_moment = positive_int(r, "key_moment", c.rounds_key_moment);
        c.rounds_replay = positive_int(r, "replay", c.rounds_replay);
        c.rounds_user = positive_int(r, "user", c.rounds_user);
    }
    c.max_messages_per_round = positive_int(j, "max_messages_per_round", c.max_messages_per_round);
    if (j.contains("intensity_map")) {
        for (const auto& [key, value] : j.at("intensity_map").items()) {
            const auto kind = scenario_kind_from_string(key);
            const auto level = value.is_string() ? intensity_from_string(value.get<std::string>()) : std::nullopt;
            if (!kind || !level) {
                throw ValidationError(fmt::format("scheduler.intensity_map.{}: unknown kind or intensity", key));
            }
            c.intensity_map[idx(*kind)] = *level;
        }
    }
    if (j.contains("directives")) {
        for (const auto& [key, value] : j.at("directives").items()) {
            const auto kind = scenario_kind_from_string(key);
            if (!kind || !value.is_string()) {
                throw ValidationError(fmt::format("scheduler.directives.{}: unknown kind or non-string", key));
            }
            c.directives[idx(*kind)] = value.get<std::string>();
        }
    }
    return c;
}

nlohmann::ordered_json SchedulerConfig::to_json() const {
    nlohmann::ordered_json j;
    j["separation_s"] = {{"high", separation_high_s}, {"medium", separation_medium_s}, {"low", separation_low_s}};
    j["rounds"] = {{"key_moment", rounds_key_moment}, {"replay", rounds_replay}, {"user", rounds_user}};
    j["max_messages_per_round"] = max_messages_per_round;
    nlohmann::ordered_json imap;
    for (auto k : kAllKinds) {
        imap[std::string(to_string(k))] = to_string(intensity_of(k));
    }
    j["intensity_map"] = std::move(imap);
    return j;
}

ScenarioContext classify_scenario(const KeyMoment& moment, const SchedulerConfig& config) {
    return make_scenario(scenario_of(moment.kind), config.rounds_key_moment, config);
}

ScenarioContext classify_scenario(const ReplaySegment& /*replay*/, const SchedulerConfig& config) {
    return make_scenario(ScenarioKind::replay, config.rounds_replay, config);
}

ScenarioContext classify_scenario(const UserMessage& /*message*/, const SchedulerConfig& config) {
    return make_scenario(ScenarioKind::user_initiated, config.rounds_user, config);
}

Seconds min_separation(Intensity intensity, const SchedulerConfig& config) {
    switch (intensity) {
    case Intensity::high: return config.separation_high_s;
    case Intensity::medium: return config.separation_medium_s;
    case Intensity::low: return config.separation_low_s;
    }
    return config.separation_low_s;
}

TriggerDecision next_trigger(SchedulerState& state, Seconds candidate_t, const ScenarioContext& scenario,
                             const SchedulerConfig& config) {
    TriggerDecision d{false, candidate_t, scenario, std::nullopt};
    if (scenario.kind == ScenarioKind::user_initiated) {
        d.fire = true;
        return d;
    }
    if (state.last_candidate_t && candidate_t < *state.last_candidate_t) {
        throw OrderingError(fmt::format("trigger candidate at t={} arrived after candidate at t={}", candidate_t,
                                        *state.last_candidate_t));
    }
    state.last_candidate_t = candidate_t;

    if (state.conversation_active) {
        d.suppressed_reason = SuppressReason::overlapping_conversation;
        return d;
    }
    if (state.last_fired_t && candidate_t - *state.last_fired_t < min_separation(scenario.intensity, config)) {
        d.suppressed_reason = SuppressReason::too_close;
        return d;
    }
    d.fire = true;
    state.last_fired_t = candidate_t;
    return d;
}

std::vector<TriggerCandidate> trigger_candidates(const TimelineDoc& doc, const SchedulerConfig& config) {
    std::vector<TriggerCandidate> out;
    out.reserve(doc.key_moments.size() + doc.replays.size());
    for (std::size_t i = 0; i < doc.key_moments.size(); ++i) {
        out.push_back({doc.key_moments[i].t, classify_scenario(doc.key_moments[i], config), i, false});
    }
    for (std::size_t i = 0; i < doc.replays.size(); ++i) {
        out.push_back({doc.replays[i].start, classify_scenario(doc.replays[i], config), i, true});
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
    return out;
}

std::vector<TriggerDecision> plan_timeline(const TimelineDoc& doc, const SchedulerConfig& config) {
    SchedulerState state;
    std::vector<TriggerDecision> plan;
    for (const auto& c : trigger_candidates(doc, config)) {
        plan.push_back(next_trigger(state, c.t, c.scenario, config));
    }
    return plan;
}

} // namespace companioncast
