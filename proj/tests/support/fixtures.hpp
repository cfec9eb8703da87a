#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "companioncast/engine_config.hpp"
#include "companioncast/session.hpp"
#include "companioncast/timeline.hpp"

namespace fixtures {

using namespace companioncast;

inline CaptionEvent cap(double t, std::string text, bool important = false) {
    return {t, std::move(text), important};
}

inline KeyMoment moment(double t, MomentKind kind, MomentTeam team = MomentTeam::home, std::string label = "") {
    if (label.empty()) {
        label = std::string(to_string(kind));
    }
    return {t, kind, team, std::move(label)};
}

inline TimelineDoc doc(double duration = 300, std::vector<CaptionEvent> caps = {}, std::vector<KeyMoment> moments = {},
                       std::vector<ReplaySegment> replays = {}) {
    TimelineDoc d;
    d.video_id = "test-match";
    d.duration_s = duration;
    d.home_team = "Home";
    d.away_team = "Away";
    d.captions = std::move(caps);
    d.key_moments = std::move(moments);
    d.replays = std::move(replays);
    return d;
}

/// Goal at 100, corner at 115, replay 140-150 of the goal, with a caption
/// every 10 s so every window is non-empty.
inline TimelineDoc goal_corner_replay() {
    std::vector<CaptionEvent> caps;
    for (int t = 0; t <= 300; t += 10) {
        caps.push_back(cap(t, "caption at " + std::to_string(t), t == 100));
    }
    return doc(300, caps, {moment(100, MomentKind::goal), moment(115, MomentKind::corner)},
               {ReplaySegment{140, 150, 100.0}});
}

/// Scripted backends, mock TTS, default protocol constants, no session files.
inline EngineConfig scripted_config() {
    auto c = EngineConfig{};
    c.judge.judge_schedule.offsets = {0.5, -1.0, 0.0, 1.0, -0.5};
    c.data_dir.clear();
    return c;
}

inline SimulationResult run_sim(const TimelineDoc& d, const EngineConfig& config, std::uint64_t seed = 1,
                                std::vector<UserMessage> msgs = {}) {
    SimulationOptions opts;
    opts.seed = seed;
    opts.user_messages = std::move(msgs);
    return simulate(std::make_shared<const TimelineDoc>(d), config, make_services(config), opts);
}

inline std::vector<EventKind> kinds_of(const std::vector<SessionEvent>& events) {
    std::vector<EventKind> out;
    for (const auto& e : events) {
        out.push_back(e.kind);
    }
    return out;
}

} // namespace fixtures
