#include "companioncast/judge.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "companioncast/errors.hpp"
#include "companioncast/text.hpp"

namespace companioncast {

void Rubric::validate() const {
    if (dimensions.empty() || dimensions.size() > 10) {
        throw ValidationError(fmt::format("rubric '{}': needs 1 to 10 dimensions, has {}", name, dimensions.size()));
    }
    if (scale_max <= 0) {
        throw ValidationError(fmt::format("rubric '{}': scale_max must be positive", name));
    }
    std::set<std::string> seen;
    for (const auto& d : dimensions) {
        if (d.key.empty() || d.key == "feedback") {
            throw ValidationError(fmt::format("rubric '{}': invalid dimension key '{}'", name, d.key));
        }
        if (!seen.insert(d.key).second) {
            throw ValidationError(fmt::format("rubric '{}': duplicate dimension key '{}'", name, d.key));
        }
    }
}

std::vector<std::string> Rubric::keys() const {
    std::vector<std::string> out;
    for (const auto& d : dimensions) {
        out.push_back(d.key);
    }
    return out;
}

Rubric rubric_preset(std::string_view name) {
    if (name == "implementation") {
        return Rubric{"implementation",
                      {{"relevance", "relevance to the game events and the scenario context"},
                       {"emotional_appropriateness", "emotional tone fitting the scenario's intensity"},
                       {"personality_consistency", "each fan staying consistent with their assigned role"},
                       {"conversation_flow", "messages that respond to each other and read naturally"},
                       {"engagement", "overall engagement quality for the viewer"}},
                      10};
    }
    if (name == "framework") {
        return Rubric{"framework",
                      {{"relevance", "relevance to the game events and context"},
                       {"authenticity", "believable fan reactions and football knowledge"},
                       {"engagement", "entertainment value for the viewer"},
                       {"diversity", "a range of perspectives and lively dynamics"},
                       {"personality_consistency", "each fan keeping a consistent personality"}},
                      10};
    }
    throw ValidationError(fmt::format("unknown rubric preset '{}'", name));
}

std::string judge_prompt(const Conversation& conv, int round_index, const ScenarioContext& scenario,
                         const Rubric& rubric) {
    const auto turns = conv.turns_in_round(round_index);
    if (turns.empty()) {
        throw PreconditionError(
            fmt::format("judge_prompt: conversation {} has no turns in round {}", conv.conv_id, round_index));
    }
    std::string out;
    out += "You evaluate short group conversations between AI sports fans who are watching a match with a viewer.\n";
    out += fmt::format("Scenario: {} (emotional intensity: {})\n", to_string(scenario.kind),
                       to_string(scenario.intensity));
    out += fmt::format("Scenario directive: {}\n", scenario.directive);
    if (conv.user_text) {
        out += fmt::format("The viewer said: \"{}\"\n", *conv.user_text);
    }
    out += fmt::format("Round {} of {}.\n\nConversation:\n", round_index + 1, scenario.rounds_total);
    for (const auto& t : turns) {
        out += fmt::format("[{}] {}\n", t.agent_id, t.text);
    }
    out += fmt::format("\nScore each dimension from 0 to {}:\n", rubric.scale_max);
    for (const auto& d : rubric.dimensions) {
        out += fmt::format("- {}: {}\n", d.key, d.description);
    }
    std::string fields;
    for (const auto& d : rubric.dimensions) {
        fields += fmt::format("\"{}\", ", d.key);
    }
    out += fmt::format(
        "\nRespond with only a JSON object containing exactly these numeric fields: {}"
        "and a string field \"feedback\" with concrete suggestions for the next round.\n",
        fields);
    return out;
}

std::optional<ParsedJudgement> parse_judgement(std::string_view reply, const Rubric& rubric) {
    const auto open = reply.find('{');
    const auto close = reply.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) {
        return std::nullopt;
    }
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(reply.substr(open, close - open + 1));
    } catch (const nlohmann::json::parse_error&) {
        return std::nullopt;
    }
    if (!obj.is_object()) {
        return std::nullopt;
    }
    ParsedJudgement out;
    for (const auto& d : rubric.dimensions) {
        const auto it = obj.find(d.key);
        if (it == obj.end() || !it->is_number()) {
            return std::nullopt;
        }
        const double raw = it->get<double>();
        if (!std::isfinite(raw)) {
            return std::nullopt;
        }
        const double clamped = std::clamp(raw, 0.0, static_cast<double>(rubric.scale_max));
        if (clamped != raw) {
            out.clamped.push_back(d.key);
        }
        out.scores.push_back({d.key, clamped});
    }
    const auto fb = obj.find("feedback");
    if (fb == obj.end() || !fb->is_string()) {
        return std::nullopt;
    }
    out.feedback = fb->get<std::string>();
    return out;
}

EvaluationReport evaluate(const Conversation& conv, int round_index, const ScenarioContext& scenario,
                          const JudgeHandle& handle) {
    EvaluationReport report;
    report.conv_id = conv.conv_id;
    report.round_index = round_index;
    report.judged_by = JudgedBy::skipped;

    const auto prompt = judge_prompt(conv, round_index, scenario, handle.rubric);
    if (!handle.backend) {
        report.feedback = "no judge backend configured";
        return report;
    }

    ChatRequest request;
    request.system_prompt = "You are a strict, fair conversation-quality evaluator. Output JSON only.";
    request.messages = {{ChatRole::user, prompt}};
    request.temperature = handle.temperature;
    request.tags = {{"conv_id", conv.conv_id},
                    {"round_index", std::to_string(round_index)},
                    {"scenario_kind", std::string(to_string(scenario.kind))},
                    {"rubric_keys", fmt::format("{}", fmt::join(handle.rubric.keys(), ","))}};

    std::optional<ParsedJudgement> parsed;
    try {
        auto reply = handle.backend->complete(request);
        parsed = parse_judgement(reply, handle.rubric);
        if (!parsed) {
            spdlog::warn("judge: unparseable reply for {} round {}, asking again", conv.conv_id, round_index);
            request.messages.push_back({ChatRole::assistant, reply});
            request.messages.push_back(
                {ChatRole::user, "That reply was not a valid JSON object with every required field. "
                                 "Respond again with only the JSON object."});
            request.tags["reask"] = "1";
            parsed = parse_judgement(handle.backend->complete(request), handle.rubric);
        }
    } catch (const std::exception& e) {
        spdlog::warn("judge: backend failure for {} round {}: {}", conv.conv_id, round_index, e.what());
        report.feedback = fmt::format("judge backend failure: {}", e.what());
        return report;
    }
    if (!parsed) {
        report.feedback = "judge output could not be parsed";
        return report;
    }
    for (const auto& key : parsed->clamped) {
        spdlog::warn("judge: score for '{}' in {} round {} clamped into [0, {}]", key, conv.conv_id, round_index,
                     handle.rubric.scale_max);
    }
    report.scores = std::move(parsed->scores);
    report.feedback = std::move(parsed->feedback);
    report.overall = std::accumulate(report.scores.begin(), report.scores.end(), 0.0,
                                     [](double acc, const DimensionScore& s) { return acc + s.score; }) /
                     static_cast<double>(report.scores.size());
    report.judged_by = handle.source;
    return report;
}

std::string refine_feedback(const EvaluationReport& report, const Rubric& rubric) {
    if (report.judged_by == JudgedBy::skipped) {
        throw PreconditionError(
            fmt::format("refine_feedback: report for {} round {} was skipped", report.conv_id, report.round_index));
    }
    std::vector<std::size_t> order(rubric.dimensions.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> scores(rubric.dimensions.size(), 0.0);
    for (std::size_t i = 0; i < rubric.dimensions.size(); ++i) {
        scores[i] = report.score_of(rubric.dimensions[i].key).value_or(0.0);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    std::string out = "Evaluator feedback on the previous round.\n";
    for (std::size_t i = 0; i < std::min<std::size_t>(2, order.size()); ++i) {
        const auto& d = rubric.dimensions[order[i]];
        out += fmt::format("- Improve {} ({}): scored {}/{}.\n", d.key, d.description,
                           text::format_number(scores[order[i]]), rubric.scale_max);
    }
    out += fmt::format("Notes: {}", report.feedback);
    return std::string(text::prefix_chars(out, kMaxFeedbackChars));
}

} // namespace companioncast
