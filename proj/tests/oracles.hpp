#pragma once

// Brute-force reference implementations and random generators shared by the
// unit and acceptance suites. Nothing here calls into the code paths it checks.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "companioncast/timeline.hpp"

namespace oracle {

using companioncast::CaptionEvent;
using companioncast::KeyMoment;
using companioncast::MomentKind;
using companioncast::MomentTeam;
using companioncast::ReplaySegment;
using companioncast::TimelineDoc;

/// Linear scan over every caption with the closed-interval test.
inline std::vector<CaptionEvent> window_filter(const TimelineDoc& doc, double query_t, double width_s) {
    const double q = std::min(std::max(query_t, 0.0), doc.duration_s);
    std::vector<CaptionEvent> out;
    for (const auto& c : doc.captions) {
        if (c.t >= q - width_s && c.t <= q) {
            out.push_back(c);
        }
    }
    return out;
}

struct PlannedTrigger {
    double t;
    bool fire;
    bool high;
};

/// Default intensity table: goals and penalties are high, everything else
/// (including replays) waits the normal separation.
inline bool is_high(MomentKind k) { return k == MomentKind::goal || k == MomentKind::penalty; }

/// Straight-loop planner: merge moments and replay starts by time (moments
/// first on ties), then fire whenever the gap to the last firing reaches
/// 15 s for high-intensity candidates or 30 s otherwise.
inline std::vector<PlannedTrigger> plan_loop(const TimelineDoc& doc) {
    struct Cand {
        double t;
        bool high;
        int order;
    };
    std::vector<Cand> cands;
    int order = 0;
    for (const auto& m : doc.key_moments) {
        cands.push_back({m.t, is_high(m.kind), order++});
    }
    for (const auto& r : doc.replays) {
        cands.push_back({r.start, false, order++});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        return a.t < b.t || (a.t == b.t && a.order < b.order);
    });
    std::vector<PlannedTrigger> out;
    std::optional<double> last;
    for (const auto& c : cands) {
        const double gap = c.high ? 15.0 : 30.0;
        const bool fire = !last || c.t - *last >= gap;
        if (fire) {
            last = c.t;
        }
        out.push_back({c.t, fire, c.high});
    }
    return out;
}

/// Random but valid timeline. Times sit on a 0.5 s grid so exact
/// separation boundaries (gaps of 15 and 30) occur often.
inline TimelineDoc random_timeline(std::mt19937_64& rng, int max_events = 25) {
    auto uniform = [&](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    };
    auto grid = [](double v) { return std::round(v * 2.0) / 2.0; };
    TimelineDoc doc;
    doc.video_id = "random";
    doc.home_team = "Home FC";
    doc.away_team = "Away FC";
    doc.duration_s = grid(uniform(30.0, 900.0));
    const int n_caps = static_cast<int>(rng() % (max_events * 2 + 1));
    for (int i = 0; i < n_caps; ++i) {
        doc.captions.push_back({grid(uniform(0.0, doc.duration_s)), "caption " + std::to_string(i), (rng() & 1) != 0});
    }
    const int n_moments = static_cast<int>(rng() % (max_events + 1));
    for (int i = 0; i < n_moments; ++i) {
        doc.key_moments.push_back({grid(uniform(0.0, doc.duration_s)), static_cast<MomentKind>(rng() % 6),
                                   static_cast<MomentTeam>(rng() % 3), "moment " + std::to_string(i)});
    }
    const int n_replays = static_cast<int>(rng() % 6);
    for (int i = 0; i < n_replays; ++i) {
        const double start = grid(uniform(0.0, std::max(0.0, doc.duration_s - 1.0)));
        const double end = std::min(doc.duration_s, start + 0.5 + grid(uniform(0.0, 20.0)));
        ReplaySegment r{start, end, std::nullopt};
        if (rng() % 2 == 0) {
            r.links_to = grid(uniform(0.0, start));
        }
        doc.replays.push_back(r);
    }
    auto by_t = [](const auto& a, const auto& b) { return a.t < b.t; };
    std::stable_sort(doc.captions.begin(), doc.captions.end(), by_t);
    std::stable_sort(doc.key_moments.begin(), doc.key_moments.end(), by_t);
    std::stable_sort(doc.replays.begin(), doc.replays.end(),
                     [](const auto& a, const auto& b) { return a.start < b.start; });
    return doc;
}

/// Query times biased towards interesting points: exact caption times,
/// exact window-start boundaries, and values outside [0, duration].
inline double random_query(std::mt19937_64& rng, const TimelineDoc& doc, double width) {
    const auto pick = rng() % 5;
    if (!doc.captions.empty() && pick == 0) {
        return doc.captions[rng() % doc.captions.size()].t;
    }
    if (!doc.captions.empty() && pick == 1) {
        return doc.captions[rng() % doc.captions.size()].t + width;
    }
    if (pick == 2) {
        return (rng() & 1) ? -5.0 : doc.duration_s + 10.0;
    }
    return static_cast<double>(rng() % static_cast<std::uint64_t>(doc.duration_s * 4 + 1)) / 4.0;
}

} // namespace oracle
