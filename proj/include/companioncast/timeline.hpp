#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace companioncast {

/// Video-time position in seconds.
using Seconds = double;

enum class TeamSide { home, away };

enum class MomentKind { goal, penalty, foul, corner, substitution, other };

/// Team credited with a key moment.
enum class MomentTeam { home, away, neutral };

std::string_view to_string(TeamSide side);
std::string_view to_string(MomentKind kind);
std::string_view to_string(MomentTeam team);
TeamSide opposite(TeamSide side);
std::optional<TeamSide> team_side_from_string(std::string_view s);
std::optional<MomentKind> moment_kind_from_string(std::string_view s);
std::optional<MomentTeam> moment_team_from_string(std::string_view s);

struct CaptionEvent {
    Seconds t = 0;
    std::string text;
    bool important = false;

    friend bool operator==(const CaptionEvent&, const CaptionEvent&) = default;
};

struct KeyMoment {
    Seconds t = 0;
    MomentKind kind = MomentKind::other;
    MomentTeam team = MomentTeam::neutral;
    std::string label;

    friend bool operator==(const KeyMoment&, const KeyMoment&) = default;
};

struct ReplaySegment {
    Seconds start = 0;
    Seconds end = 0;
    /// Video time of the live event being replayed, when known.
    std::optional<Seconds> links_to;

    friend bool operator==(const ReplaySegment&, const ReplaySegment&) = default;
};

/// Normalized per-video annotation record. Immutable after parsing.
struct TimelineDoc {
    std::string video_id;
    Seconds duration_s = 0;
    std::string home_team;
    std::string away_team;
    std::vector<CaptionEvent> captions;
    std::vector<KeyMoment> key_moments;
    std::vector<ReplaySegment> replays;

    const std::string& team_name(TeamSide side) const { return side == TeamSide::home ? home_team : away_team; }

    friend bool operator==(const TimelineDoc&, const TimelineDoc&) = default;
};

/// Parses a timeline JSON document, sorts its event lists (stably) and validates it.
///
/// Unknown fields are ignored; a description of each is appended to `warnings`
/// when provided and logged otherwise. Throws ParseError for malformed
/// documents and ValidationError for invariant violations.
TimelineDoc parse_timeline(std::string_view raw, std::vector<std::string>* warnings = nullptr);

TimelineDoc load_timeline_file(const std::string& path, std::vector<std::string>* warnings = nullptr);

nlohmann::ordered_json timeline_to_json(const TimelineDoc& doc);
std::string serialize_timeline(const TimelineDoc& doc);

/// Throws ValidationError naming the first offending record.
void validate_timeline(const TimelineDoc& doc);

struct ContextWindow {
    Seconds query_t = 0;
    Seconds width_s = 60;
    std::vector<CaptionEvent> entries;
};

inline constexpr Seconds kDefaultContextWidth = 60.0;

/// Captions with t in the closed interval [query_t - width_s, query_t].
/// query_t is clamped into [0, duration_s].
ContextWindow context_window(const TimelineDoc& doc, Seconds query_t, Seconds width_s = kDefaultContextWidth);

/// Per-session incremental variant of context_window. Forward queries advance
/// the window in place; backward seeks rebuild it.
class CaptionWindowCache {
public:
    explicit CaptionWindowCache(const TimelineDoc& doc, Seconds width_s = kDefaultContextWidth);

    ContextWindow query(Seconds query_t);

    Seconds width() const { return width_s_; }

private:
    const TimelineDoc* doc_;
    Seconds width_s_;
    std::optional<Seconds> last_query_;
    std::size_t begin_ = 0;
    std::size_t end_ = 0;
};

struct GameScore {
    int home = 0;
    int away = 0;

    friend bool operator==(const GameScore&, const GameScore&) = default;
};

/// Goals credited to each team at or before `t`.
GameScore score_at(const TimelineDoc& doc, Seconds t);

/// Structured game-information block given to agents: team names, score and
/// one "[mm:ss] text" line per caption in the window.
std::string format_context(const ContextWindow& window, const TimelineDoc& doc, const GameScore& score);

} // namespace companioncast
