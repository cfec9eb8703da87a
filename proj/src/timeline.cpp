#include "companioncast/timeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "companioncast/errors.hpp"
#include "companioncast/text.hpp"

namespace companioncast {

using nlohmann::json;

std::string_view to_string(TeamSide side) { return side == TeamSide::home ? "home" : "away"; }

std::string_view to_string(MomentKind kind) {
    switch (kind) {
    case MomentKind::goal: return "goal";
    case MomentKind::penalty: return "penalty";
    case MomentKind::foul: return "foul";
    case MomentKind::corner: return "corner";
    case MomentKind::substitution: return "substitution";
    case MomentKind::other: return "other";
    }
    return "other";
}

std::string_view to_string(MomentTeam team) {
    switch (team) {
    case MomentTeam::home: return "home";
    case MomentTeam::away: return "away";
    case MomentTeam::neutral: return "neutral";
    }
    return "neutral";
}

TeamSide opposite(TeamSide side) { return side == TeamSide::home ? TeamSide::away : TeamSide::home; }

std::optional<TeamSide> team_side_from_string(std::string_view s) {
    if (s == "home") return TeamSide::home;
    if (s == "away") return TeamSide::away;
    return std::nullopt;
}

std::optional<MomentKind> moment_kind_from_string(std::string_view s) {
    for (auto k : {MomentKind::goal, MomentKind::penalty, MomentKind::foul, MomentKind::corner,
                   MomentKind::substitution, MomentKind::other}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

std::optional<MomentTeam> moment_team_from_string(std::string_view s) {
    for (auto k : {MomentTeam::home, MomentTeam::away, MomentTeam::neutral}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

namespace {

// Reads typed fields out of one JSON object, reporting errors with a path.
class FieldReader {
public:
    FieldReader(const json& obj, std::string path, std::vector<std::string>& warnings)
        : obj_(obj), path_(std::move(path)), warnings_(warnings) {
        if (!obj_.is_object()) {
            throw ParseError(fmt::format("{}: expected an object", path_));
        }
    }

    double number(const char* key) {
        const auto& v = required(key);
        if (!v.is_number()) {
            throw ParseError(fmt::format("{}.{}: expected a number", path_, key));
        }
        const double d = v.get<double>();
        if (!std::isfinite(d)) {
            throw ParseError(fmt::format("{}.{}: expected a finite number", path_, key));
        }
        return d;
    }

    std::optional<double> optional_number(const char* key) {
        seen_.emplace_back(key);
        const auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null()) {
            return std::nullopt;
        }
        if (!it->is_number()) {
            throw ParseError(fmt::format("{}.{}: expected a number or null", path_, key));
        }
        return it->get<double>();
    }

    std::string string(const char* key) {
        const auto& v = required(key);
        if (!v.is_string()) {
            throw ParseError(fmt::format("{}.{}: expected a string", path_, key));
        }
        return v.get<std::string>();
    }

    bool boolean(const char* key, bool fallback) {
        seen_.emplace_back(key);
        const auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null()) {
            return fallback;
        }
        if (!it->is_boolean()) {
            throw ParseError(fmt::format("{}.{}: expected a boolean", path_, key));
        }
        return it->get<bool>();
    }

    const json& array(const char* key) {
        const auto& v = required(key);
        if (!v.is_array()) {
            throw ParseError(fmt::format("{}.{}: expected an array", path_, key));
        }
        return v;
    }

    const json* optional_array(const char* key) {
        seen_.emplace_back(key);
        const auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null()) {
            return nullptr;
        }
        if (!it->is_array()) {
            throw ParseError(fmt::format("{}.{}: expected an array", path_, key));
        }
        return &*it;
    }

    const json& object(const char* key) {
        const auto& v = required(key);
        if (!v.is_object()) {
            throw ParseError(fmt::format("{}.{}: expected an object", path_, key));
        }
        return v;
    }

    /// Warns about every key that was not consumed.
    void finish() {
        for (const auto& [key, value] : obj_.items()) {
            if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
                warnings_.push_back(fmt::format("{}.{}: unknown field ignored", path_, key));
            }
        }
    }

private:
    const json& required(const char* key) {
        seen_.emplace_back(key);
        const auto it = obj_.find(key);
        if (it == obj_.end()) {
            throw ParseError(fmt::format("{}: missing field '{}'", path_, key));
        }
        return *it;
    }

    const json& obj_;
    std::string path_;
    std::vector<std::string>& warnings_;
    std::vector<std::string> seen_;
};

std::pair<std::size_t, std::size_t> line_and_column(std::string_view raw, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < raw.size() && i + 1 < byte; ++i) {
        if (raw[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

bool in_range(Seconds t, Seconds duration) { return t >= 0.0 && t <= duration; }

} // namespace

void validate_timeline(const TimelineDoc& doc) {
    if (!(doc.duration_s >= 0.0) || !std::isfinite(doc.duration_s)) {
        throw ValidationError(fmt::format("video.duration_s: must be a non-negative number, got {}", doc.duration_s));
    }
    for (std::size_t i = 0; i < doc.captions.size(); ++i) {
        const auto& c = doc.captions[i];
        if (!in_range(c.t, doc.duration_s)) {
            throw ValidationError(
                fmt::format("captions[{}] (t={}): timestamp outside [0, {}]", i, c.t, doc.duration_s));
        }
        if (text::trim(c.text).empty()) {
            throw ValidationError(fmt::format("captions[{}] (t={}): text is empty", i, c.t));
        }
        if (i > 0 && doc.captions[i - 1].t > c.t) {
            throw ValidationError(fmt::format("captions[{}] (t={}): not sorted by time", i, c.t));
        }
    }
    for (std::size_t i = 0; i < doc.key_moments.size(); ++i) {
        const auto& m = doc.key_moments[i];
        if (!in_range(m.t, doc.duration_s)) {
            throw ValidationError(
                fmt::format("key_moments[{}] (t={}): timestamp outside [0, {}]", i, m.t, doc.duration_s));
        }
        if (i > 0 && doc.key_moments[i - 1].t > m.t) {
            throw ValidationError(fmt::format("key_moments[{}] (t={}): not sorted by time", i, m.t));
        }
    }
    for (std::size_t i = 0; i < doc.replays.size(); ++i) {
        const auto& r = doc.replays[i];
        const auto where = fmt::format("replays[{}] (start={}, end={})", i, r.start, r.end);
        if (!in_range(r.start, doc.duration_s) || !in_range(r.end, doc.duration_s)) {
            throw ValidationError(fmt::format("{}: timestamp outside [0, {}]", where, doc.duration_s));
        }
        if (!(r.start < r.end)) {
            throw ValidationError(fmt::format("{}: start must be before end", where));
        }
        if (r.links_to) {
            if (!in_range(*r.links_to, doc.duration_s)) {
                throw ValidationError(fmt::format("{}: links_to={} outside [0, {}]", where, *r.links_to, doc.duration_s));
            }
            if (*r.links_to > r.start) {
                throw ValidationError(fmt::format("{}: links_to={} is after the replay start", where, *r.links_to));
            }
        }
        if (i > 0 && doc.replays[i - 1].start > r.start) {
            throw ValidationError(fmt::format("{}: not sorted by start", where));
        }
    }
}

TimelineDoc parse_timeline(std::string_view raw, std::vector<std::string>* warnings) {
    json root;
    try {
        root = json::parse(raw.begin(), raw.end());
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_and_column(raw, e.byte);
        throw ParseError(fmt::format("timeline: malformed JSON at line {}, column {}: {}", line, col, e.what()));
    }

    std::vector<std::string> local_warnings;
    auto& warn = warnings ? *warnings : local_warnings;

    TimelineDoc doc;
    FieldReader top(root, "timeline", warn);
    {
        FieldReader video(top.object("video"), "video", warn);
        doc.video_id = video.string("id");
        doc.duration_s = video.number("duration_s");
        doc.home_team = video.string("home_team");
        doc.away_team = video.string("away_team");
        video.finish();
    }

    if (const auto* captions = top.optional_array("captions")) {
        for (std::size_t i = 0; i < captions->size(); ++i) {
            FieldReader r((*captions)[i], fmt::format("captions[{}]", i), warn);
            CaptionEvent c;
            c.t = r.number("t");
            c.text = r.string("text");
            c.important = r.boolean("important", false);
            r.finish();
            doc.captions.push_back(std::move(c));
        }
    }
    if (const auto* moments = top.optional_array("key_moments")) {
        for (std::size_t i = 0; i < moments->size(); ++i) {
            const auto path = fmt::format("key_moments[{}]", i);
            FieldReader r((*moments)[i], path, warn);
            KeyMoment m;
            m.t = r.number("t");
            const auto kind = r.string("kind");
            const auto parsed_kind = moment_kind_from_string(kind);
            if (!parsed_kind) {
                throw ValidationError(fmt::format("{} (t={}): unknown kind '{}'", path, m.t, kind));
            }
            m.kind = *parsed_kind;
            const auto team = r.string("team");
            const auto parsed_team = moment_team_from_string(team);
            if (!parsed_team) {
                throw ValidationError(fmt::format("{} (t={}): unknown team '{}'", path, m.t, team));
            }
            m.team = *parsed_team;
            m.label = r.string("label");
            r.finish();
            doc.key_moments.push_back(std::move(m));
        }
    }
    if (const auto* replays = top.optional_array("replays")) {
        for (std::size_t i = 0; i < replays->size(); ++i) {
            FieldReader r((*replays)[i], fmt::format("replays[{}]", i), warn);
            ReplaySegment s;
            s.start = r.number("start");
            s.end = r.number("end");
            s.links_to = r.optional_number("links_to");
            r.finish();
            doc.replays.push_back(s);
        }
    }
    top.finish();

    std::stable_sort(doc.captions.begin(), doc.captions.end(),
                     [](const auto& a, const auto& b) { return a.t < b.t; });
    std::stable_sort(doc.key_moments.begin(), doc.key_moments.end(),
                     [](const auto& a, const auto& b) { return a.t < b.t; });
    std::stable_sort(doc.replays.begin(), doc.replays.end(),
                     [](const auto& a, const auto& b) { return a.start < b.start; });

    validate_timeline(doc);

    if (!warnings) {
        for (const auto& w : local_warnings) {
            spdlog::warn("{}", w);
        }
    }
    return doc;
}

TimelineDoc load_timeline_file(const std::string& path, std::vector<std::string>* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw NotFoundError(fmt::format("cannot open timeline file '{}'", path));
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_timeline(buf.str(), warnings);
}

nlohmann::ordered_json timeline_to_json(const TimelineDoc& doc) {
    nlohmann::ordered_json out;
    out["video"] = {{"id", doc.video_id},
                    {"duration_s", doc.duration_s},
                    {"home_team", doc.home_team},
                    {"away_team", doc.away_team}};
    out["captions"] = nlohmann::ordered_json::array();
    for (const auto& c : doc.captions) {
        out["captions"].push_back({{"t", c.t}, {"text", c.text}, {"important", c.important}});
    }
    out["key_moments"] = nlohmann::ordered_json::array();
    for (const auto& m : doc.key_moments) {
        out["key_moments"].push_back(
            {{"t", m.t}, {"kind", to_string(m.kind)}, {"team", to_string(m.team)}, {"label", m.label}});
    }
    out["replays"] = nlohmann::ordered_json::array();
    for (const auto& r : doc.replays) {
        nlohmann::ordered_json rec = {{"start", r.start}, {"end", r.end}};
        rec["links_to"] = r.links_to ? nlohmann::ordered_json(*r.links_to) : nlohmann::ordered_json(nullptr);
        out["replays"].push_back(std::move(rec));
    }
    return out;
}

std::string serialize_timeline(const TimelineDoc& doc) { return timeline_to_json(doc).dump(2); }

ContextWindow context_window(const TimelineDoc& doc, Seconds query_t, Seconds width_s) {
    if (!(width_s > 0.0)) {
        throw PreconditionError(fmt::format("context_window: width_s must be positive, got {}", width_s));
    }
    const Seconds clamped = std::clamp(query_t, 0.0, doc.duration_s);
    if (clamped != query_t) {
        spdlog::info("context_window: query_t {} clamped to {}", query_t, clamped);
    }
    const Seconds lo = clamped - width_s;
    const auto first = std::lower_bound(doc.captions.begin(), doc.captions.end(), lo,
                                        [](const CaptionEvent& c, Seconds v) { return c.t < v; });
    const auto last = std::upper_bound(first, doc.captions.end(), clamped,
                                       [](Seconds v, const CaptionEvent& c) { return v < c.t; });
    return ContextWindow{clamped, width_s, std::vector<CaptionEvent>(first, last)};
}

CaptionWindowCache::CaptionWindowCache(const TimelineDoc& doc, Seconds width_s) : doc_(&doc), width_s_(width_s) {
    if (!(width_s > 0.0)) {
        throw PreconditionError(fmt::format("CaptionWindowCache: width_s must be positive, got {}", width_s));
    }
}

ContextWindow CaptionWindowCache::query(Seconds query_t) {
    const auto& caps = doc_->captions;
    const Seconds t = std::clamp(query_t, 0.0, doc_->duration_s);
    const Seconds lo = t - width_s_;
    if (!last_query_ || t < *last_query_) {
        begin_ = 0;
        end_ = 0;
    }
    while (end_ < caps.size() && caps[end_].t <= t) {
        ++end_;
    }
    while (begin_ < end_ && caps[begin_].t < lo) {
        ++begin_;
    }
    last_query_ = t;
    return ContextWindow{t, width_s_,
                         std::vector<CaptionEvent>(caps.begin() + static_cast<std::ptrdiff_t>(begin_),
                                                   caps.begin() + static_cast<std::ptrdiff_t>(end_))};
}

GameScore score_at(const TimelineDoc& doc, Seconds t) {
    GameScore score;
    for (const auto& m : doc.key_moments) {
        if (m.t > t) {
            break;
        }
        if (m.kind != MomentKind::goal) {
            continue;
        }
        if (m.team == MomentTeam::home) {
            ++score.home;
        } else if (m.team == MomentTeam::away) {
            ++score.away;
        }
    }
    return score;
}

std::string format_context(const ContextWindow& window, const TimelineDoc& doc, const GameScore& score) {
    std::string out;
    out += fmt::format("Match: {} (home) vs {} (away)\n", doc.home_team, doc.away_team);
    out += fmt::format("Score: {} {} - {} {}\n", doc.home_team, score.home, score.away, doc.away_team);
    out += fmt::format("Video time: [{}]\n", text::clock_label(window.query_t));
    out += fmt::format("Recent events (past {} s):\n", text::format_number(window.width_s));
    for (const auto& c : window.entries) {
        out += fmt::format("[{}] {}\n", text::clock_label(c.t), c.text);
    }
    return out;
}

} // namespace companioncast
