#include "companioncast/agents.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "companioncast/text.hpp"

namespace companioncast {

std::string_view to_string(RoleKind r) {
    switch (r) {
    case RoleKind::diehard: return "diehard";
    case RoleKind::analyst: return "analyst";
    case RoleKind::comedian: return "comedian";
    }
    return "diehard";
}

std::string_view to_string(Allegiance a) {
    switch (a) {
    case Allegiance::user_team: return "user_team";
    case Allegiance::opponent_team: return "opponent_team";
    case Allegiance::neutral: return "neutral";
    }
    return "neutral";
}

std::optional<RoleKind> role_kind_from_string(std::string_view s) {
    for (auto r : {RoleKind::diehard, RoleKind::analyst, RoleKind::comedian}) {
        if (to_string(r) == s) return r;
    }
    return std::nullopt;
}

std::optional<Allegiance> allegiance_from_string(std::string_view s) {
    for (auto a : {Allegiance::user_team, Allegiance::opponent_team, Allegiance::neutral}) {
        if (to_string(a) == s) return a;
    }
    return std::nullopt;
}

AgentPersona AgentPersona::from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw ValidationError("roster entry: expected an object");
    }
    AgentPersona p;
    try {
        p.id = j.at("id").get<std::string>();
        const auto role = role_kind_from_string(j.at("role_kind").get<std::string>());
        if (!role) {
            throw ValidationError(fmt::format("roster entry '{}': unknown role_kind", p.id));
        }
        p.role_kind = *role;
        const auto allegiance = allegiance_from_string(j.value("allegiance", std::string("user_team")));
        if (!allegiance) {
            throw ValidationError(fmt::format("roster entry '{}': unknown allegiance", p.id));
        }
        p.allegiance = *allegiance;
        p.display_name = j.value("display_name", p.id);
        p.style_prompt = j.value("style_prompt", std::string{});
        p.temperature = j.value("temperature", 0.7);
        p.voice_profile_id = j.value("voice_profile_id", p.id);
        if (j.contains("spatial_azimuth_deg") && !j.at("spatial_azimuth_deg").is_null()) {
            p.spatial_azimuth_deg = j.at("spatial_azimuth_deg").get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(fmt::format("roster entry: {}", e.what()));
    }
    if (p.id.empty()) {
        throw ValidationError("roster entry: id must be non-empty");
    }
    if (!(p.temperature >= 0.0 && p.temperature <= 2.0)) {
        throw ValidationError(fmt::format("roster entry '{}': temperature must lie in [0, 2]", p.id));
    }
    return p;
}

nlohmann::ordered_json AgentPersona::to_json() const {
    nlohmann::ordered_json j = {{"id", id},
                                {"display_name", display_name},
                                {"role_kind", to_string(role_kind)},
                                {"allegiance", to_string(allegiance)},
                                {"style_prompt", style_prompt},
                                {"temperature", temperature},
                                {"voice_profile_id", voice_profile_id}};
    j["spatial_azimuth_deg"] =
        spatial_azimuth_deg ? nlohmann::ordered_json(*spatial_azimuth_deg) : nlohmann::ordered_json(nullptr);
    return j;
}

std::vector<AgentPersona> default_roster() {
    return {
        AgentPersona{"diehard", "DieHard_fan", RoleKind::diehard, Allegiance::user_team,
                     "You are a passionate lifelong supporter. You are loud and emotional, you celebrate every good "
                     "moment and you take setbacks personally.",
                     0.7, "voice_diehard", std::nullopt},
        AgentPersona{"analyst", "Analyst_fan", RoleKind::analyst, Allegiance::user_team,
                     "You follow the team closely and read the game tactically. You give calm, specific observations "
                     "about positioning, pressing and decisions.",
                     0.7, "voice_analyst", std::nullopt},
        AgentPersona{"comedian", "Comedian_fan", RoleKind::comedian, Allegiance::opponent_team,
                     "You support the other side and love a wind-up. You tease the other fans with sarcastic, "
                     "good-natured jokes and never miss a chance to needle them.",
                     0.7, "voice_comedian", std::nullopt},
    };
}

std::optional<TeamSide> allegiance_side(const AgentPersona& persona, TeamSide supported_team) {
    switch (persona.allegiance) {
    case Allegiance::user_team: return supported_team;
    case Allegiance::opponent_team: return opposite(supported_team);
    case Allegiance::neutral: return std::nullopt;
    }
    return std::nullopt;
}

std::string build_system_prompt(const AgentPersona& persona, const ScenarioContext& scenario, const TimelineDoc& doc,
                                TeamSide supported_team) {
    std::string out;
    out += fmt::format("You are {}, watching {} vs {} together with a viewer and other fans.\n", persona.display_name,
                       doc.home_team, doc.away_team);
    if (!persona.style_prompt.empty()) {
        out += fmt::format("Personality: {}\n", persona.style_prompt);
    }
    if (const auto side = allegiance_side(persona, supported_team)) {
        out += fmt::format("Allegiance: you support {} ({}). The viewer supports {} ({}).\n", doc.team_name(*side),
                           to_string(*side), doc.team_name(supported_team), to_string(supported_team));
    } else {
        out += fmt::format("Allegiance: you are neutral. The viewer supports {} ({}).\n", doc.team_name(supported_team),
                           to_string(supported_team));
    }
    out += fmt::format("Scenario: {} (emotional intensity: {}). {}\n", to_string(scenario.kind),
                       to_string(scenario.intensity), scenario.directive);
    out += fmt::format(
        "Rules: write exactly one message of at most {} characters. Stay in character, speak casually as a fan, "
        "and react to what the other fans said.\n",
        kMaxTurnChars);
    return out;
}

RoundError::RoundError(std::string agent_id, int round_index, const std::string& cause)
    : Error(fmt::format("round {} failed at agent '{}': {}", round_index, agent_id, cause)),
      agent_id_(std::move(agent_id)), round_index_(round_index) {}

namespace {

const AgentPersona* find_persona(std::span<const AgentPersona> roster, const std::string& id) {
    for (const auto& p : roster) {
        if (p.id == id) {
            return &p;
        }
    }
    return nullptr;
}

std::vector<ChatMessage> agent_messages(const Conversation& conv, std::string_view context_text,
                                        std::span<const AgentPersona> roster, const AgentPersona& me, int round,
                                        int rounds_total) {
    std::vector<ChatMessage> msgs;
    msgs.push_back({ChatRole::user, fmt::format("Match information:\n{}", context_text)});
    if (conv.user_text) {
        msgs.push_back({ChatRole::user, fmt::format("The viewer says: \"{}\"", *conv.user_text)});
    }
    auto note_it = conv.feedback.begin();
    int current_round = -1;
    for (const auto& t : conv.turns) {
        if (t.round_index != current_round) {
            current_round = t.round_index;
            for (; note_it != conv.feedback.end() && note_it->before_round <= current_round; ++note_it) {
                msgs.push_back({ChatRole::system, note_it->text});
            }
        }
        if (t.agent_id == me.id) {
            msgs.push_back({ChatRole::assistant, t.text});
        } else {
            const auto* other = find_persona(roster, t.agent_id);
            msgs.push_back({ChatRole::user, fmt::format("{}: {}", other ? other->display_name : t.agent_id, t.text)});
        }
    }
    for (; note_it != conv.feedback.end() && note_it->before_round <= round; ++note_it) {
        msgs.push_back({ChatRole::system, note_it->text});
    }
    if (round == 0) {
        msgs.push_back({ChatRole::user, fmt::format("Round 1 of {}: give your reaction now.", rounds_total)});
    } else {
        msgs.push_back({ChatRole::user,
                        fmt::format("Round {} of {}: give an improved reaction that addresses the evaluator feedback.",
                                    round + 1, rounds_total)});
    }
    return msgs;
}

} // namespace

std::vector<Turn> run_round(Conversation& conv, std::string_view context_text, std::span<const AgentPersona> roster,
                            const ChatBackend& backend, const std::optional<std::string>& feedback,
                            const ConversationSetup& setup) {
    if (conv.final) {
        throw PreconditionError(fmt::format("run_round: conversation {} is already final", conv.conv_id));
    }
    if (setup.doc == nullptr) {
        throw PreconditionError("run_round: setup carries no timeline");
    }
    const int round = conv.turns.empty() ? 0 : conv.turns.back().round_index + 1;
    if (round >= conv.scenario.rounds_total) {
        throw PreconditionError(fmt::format("run_round: conversation {} already used its {} rounds", conv.conv_id,
                                            conv.scenario.rounds_total));
    }
    if (feedback) {
        conv.feedback.push_back({round, *feedback});
    }

    const auto cap = std::min<std::size_t>(roster.size(), static_cast<std::size_t>(conv.scenario.max_messages_per_round));
    const auto score_text = fmt::format("{}-{}", setup.score.home, setup.score.away);
    std::vector<Turn> produced;
    for (std::size_t i = 0; i < cap; ++i) {
        const auto& persona = roster[i];
        ChatRequest request;
        request.system_prompt = build_system_prompt(persona, conv.scenario, *setup.doc, setup.supported_team);
        request.messages = agent_messages(conv, context_text, roster, persona, round, conv.scenario.rounds_total);
        request.temperature = persona.temperature;
        request.seed = setup.seed;
        const auto side = allegiance_side(persona, setup.supported_team);
        request.tags = {{"conv_id", conv.conv_id},
                        {"agent_id", persona.id},
                        {"round_index", std::to_string(round)},
                        {"scenario_kind", std::string(to_string(conv.scenario.kind))},
                        {"score", score_text},
                        {"team", side ? setup.doc->team_name(*side) : std::string("neutral")}};

        std::string reply;
        try {
            reply = backend.complete(request);
        } catch (const std::exception& e) {
            conv.partial_round = round;
            throw RoundError(persona.id, round, e.what());
        }
        auto text = text::truncate_at_sentence(reply, setup.max_turn_chars);
        if (text.empty()) {
            conv.partial_round = round;
            throw RoundError(persona.id, round, "backend returned an empty message");
        }
        Turn turn{persona.id, round, std::move(text), conv.trigger_t, static_cast<int>(conv.turns.size())};
        conv.turns.push_back(turn);
        produced.push_back(std::move(turn));
    }
    return produced;
}

Conversation run_conversation(const TriggerDecision& trigger, std::string conv_id, std::string_view context_text,
                              std::span<const AgentPersona> roster, const ChatBackend& agent_backend,
                              const JudgeHandle& judge, const ConversationSetup& setup,
                              std::optional<std::string> user_text) {
    if (!trigger.fire) {
        throw PreconditionError("run_conversation: trigger did not fire");
    }
    Conversation conv;
    conv.conv_id = std::move(conv_id);
    conv.scenario = trigger.scenario;
    conv.trigger_t = trigger.trigger_t;
    conv.user_text = std::move(user_text);

    std::optional<std::string> feedback;
    const int rounds = conv.scenario.rounds_total;
    for (int round = 0; round < rounds; ++round) {
        try {
            run_round(conv, context_text, roster, agent_backend, feedback, setup);
        } catch (const RoundError& e) {
            spdlog::warn("conversation {}: {}", conv.conv_id, e.what());
            conv.errors.emplace_back(e.what());
            if (!conv.turns_in_round(round).empty()) {
                conv.reports.push_back(evaluate(conv, round, conv.scenario, judge));
            }
            break;
        }
        const auto& report = conv.reports.emplace_back(evaluate(conv, round, conv.scenario, judge));
        if (round + 1 == rounds) {
            break;
        }
        if (report.judged_by == JudgedBy::skipped) {
            feedback.reset();
            continue;
        }
        if (judge.early_accept_overall && report.overall >= *judge.early_accept_overall) {
            conv.early_accepted = true;
            break;
        }
        feedback = refine_feedback(report, judge.rubric);
    }
    conv.final = true;
    return conv;
}

} // namespace companioncast
