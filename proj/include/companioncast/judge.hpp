#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "companioncast/chat_backend.hpp"
#include "companioncast/conversation.hpp"

namespace companioncast {

struct RubricDimension {
    std::string key;
    std::string description;
};

struct Rubric {
    std::string name;
    std::vector<RubricDimension> dimensions;
    int scale_max = 10;

    /// Throws ValidationError unless 1..10 dimensions with unique, non-empty keys.
    void validate() const;
    std::vector<std::string> keys() const;
};

/// Named presets: "implementation" (default) and "framework".
Rubric rubric_preset(std::string_view name);
inline constexpr std::string_view kDefaultRubric = "implementation";

struct JudgeHandle {
    Rubric rubric = rubric_preset(kDefaultRubric);
    std::shared_ptr<const ChatBackend> backend;
    double temperature = 0.2;
    /// Label recorded on successful reports.
    JudgedBy source = JudgedBy::scripted;
    /// Stop refining once a round reaches this overall score. Disabled by default.
    std::optional<double> early_accept_overall;
};

/// Evaluation prompt for one round. Throws PreconditionError if the round has no turns.
std::string judge_prompt(const Conversation& conv, int round_index, const ScenarioContext& scenario,
                         const Rubric& rubric);

struct ParsedJudgement {
    std::vector<DimensionScore> scores;
    std::string feedback;
    /// Keys whose raw value fell outside [0, scale_max].
    std::vector<std::string> clamped;
};

/// Extracts the JSON object from a judge reply. Scores are clamped into
/// [0, scale_max]. Returns nullopt if any key or the feedback is missing.
std::optional<ParsedJudgement> parse_judgement(std::string_view reply, const Rubric& rubric);

/// Scores one round. One re-ask on unparseable output; after that, or on
/// backend failure, returns a report with judged_by = skipped. Never throws
/// for backend problems.
EvaluationReport evaluate(const Conversation& conv, int round_index, const ScenarioContext& scenario,
                          const JudgeHandle& handle);

/// Feedback for the next round naming the two lowest-scoring dimensions
/// (ties by rubric order) plus the judge's notes, at most 600 characters.
/// Throws PreconditionError for skipped reports.
std::string refine_feedback(const EvaluationReport& report, const Rubric& rubric);

inline constexpr std::size_t kMaxFeedbackChars = 600;

} // namespace companioncast
