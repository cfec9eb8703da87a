#include "companioncast/session.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <random>

#include <boost/beast/core/detail/base64.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "companioncast/errors.hpp"
#include "companioncast/text.hpp"

namespace companioncast {

std::string_view to_string(SessionPhase phase) {
    switch (phase) {
    case SessionPhase::idle: return "idle";
    case SessionPhase::conversing: return "conversing";
    case SessionPhase::staging: return "staging";
    }
    return "idle";
}

namespace {

nlohmann::ordered_json scenario_json(const ScenarioContext& s) {
    return {{"kind", to_string(s.kind)},
            {"intensity", to_string(s.intensity)},
            {"rounds_total", s.rounds_total},
            {"max_messages_per_round", s.max_messages_per_round}};
}

nlohmann::ordered_json report_json(const EvaluationReport& r) {
    nlohmann::ordered_json scores = nlohmann::ordered_json::object();
    for (const auto& s : r.scores) {
        scores[s.key] = s.score;
    }
    return {{"conv_id", r.conv_id}, {"round_index", r.round_index}, {"judged_by", to_string(r.judged_by)},
            {"scores", std::move(scores)}, {"overall", r.overall}, {"feedback", r.feedback}};
}

std::string base64(const std::vector<std::uint8_t>& bytes) {
    namespace b64 = boost::beast::detail::base64;
    std::string out(b64::encoded_size(bytes.size()), '\0');
    out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
    return out;
}

} // namespace

Session::Session(std::shared_ptr<const TimelineDoc> timeline, const EngineConfig& config, EngineServices services,
                 SessionOptions options)
    : timeline_(std::move(timeline)), config_(config), services_(std::move(services)), options_(std::move(options)),
      roster_(config_.roster), log_(options_.log_path),
      window_cache_(*timeline_, config_.context_width_s) {
    validate_roster(roster_);
    if (!services_.agents || !services_.tts) {
        throw PreconditionError("session: agent and TTS backends are required");
    }
    candidates_ = trigger_candidates(*timeline_, config_.scheduler);

    nlohmann::ordered_json roster = nlohmann::ordered_json::array();
    for (const auto& p : roster_) {
        const auto side = allegiance_side(p, options_.supported_team);
        const auto cue = spatial_cue(p);
        roster.push_back({{"agent_id", p.id},
                          {"display_name", p.display_name},
                          {"role_kind", to_string(p.role_kind)},
                          {"allegiance", side ? std::string(to_string(*side)) : std::string("neutral")},
                          {"voice_profile_id", p.voice_profile_id},
                          {"azimuth_deg", cue.azimuth_deg}});
    }
    emit(EventKind::session_created, {{"session_id", options_.session_id},
                                      {"video_id", timeline_->video_id},
                                      {"supported_team", to_string(options_.supported_team)},
                                      {"seed", options_.seed},
                                      {"roster", std::move(roster)}});
}

std::optional<TeamSide> Session::side_of(std::string_view agent_id) const {
    for (const auto& p : roster_) {
        if (p.id == agent_id) {
            return allegiance_side(p, options_.supported_team);
        }
    }
    throw NotFoundError(fmt::format("no agent '{}' in session {}", agent_id, options_.session_id));
}

std::string Session::wall_time() const {
    if (options_.virtual_wall_clock) {
        return iso8601_utc(std::llround(clock_t_ * 1000.0));
    }
    const auto now = std::chrono::system_clock::now();
    return iso8601_utc(std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count());
}

SessionEvent Session::emit(EventKind kind, nlohmann::ordered_json payload,
                           std::shared_ptr<const std::vector<std::uint8_t>> audio) {
    return log_.append(kind, wall_time(), std::move(payload), std::move(audio));
}

std::vector<SessionEvent> Session::on_clock(Seconds video_t) {
    const auto first = log_.next_seq();
    const Seconds previous = clock_t_;
    const Seconds t = std::clamp(video_t, 0.0, timeline_->duration_s);
    if (t != video_t) {
        spdlog::info("session {}: clock {} clamped to {}", options_.session_id, video_t, t);
    }
    if (furthest_t_ && t < clock_t_) {
        spdlog::info("session {}: clock moved back from {} to {}", options_.session_id, clock_t_, t);
        clock_t_ = t;
        emit(EventKind::clock_sync, {{"video_t", t}, {"previous_t", previous}, {"seek", "backward"}});
        return log_.events_since(first);
    }
    clock_t_ = t;
    if (furthest_t_ && t <= *furthest_t_) {
        return log_.events_since(first);
    }
    furthest_t_ = t;

    std::size_t crossed_end = next_candidate_;
    while (crossed_end < candidates_.size() && candidates_[crossed_end].t <= t) {
        ++crossed_end;
    }
    if (crossed_end == next_candidate_) {
        drain_pending();
        return log_.events_since(first);
    }
    emit(EventKind::clock_sync,
         {{"video_t", t}, {"previous_t", previous}, {"crossed", crossed_end - next_candidate_}});

    for (; next_candidate_ < crossed_end; ++next_candidate_) {
        const auto& c = candidates_[next_candidate_];
        scheduler_.conversation_active = phase_ != SessionPhase::idle;
        auto decision = next_trigger(scheduler_, c.t, c.scenario, config_.scheduler);
        decisions_.push_back(decision);
        if (!decision.fire) {
            spdlog::debug("session {}: {} at {} suppressed ({})", options_.session_id, to_string(c.scenario.kind),
                          c.t, to_string(*decision.suppressed_reason));
            continue;
        }
        TriggerSource source;
        if (c.is_replay) {
            const auto& r = timeline_->replays[c.source_index];
            source.kind = "replay";
            source.detail = {{"start", r.start}, {"end", r.end}};
            source.detail["links_to"] = r.links_to ? nlohmann::ordered_json(*r.links_to) : nlohmann::ordered_json();
        } else {
            const auto& m = timeline_->key_moments[c.source_index];
            source.kind = "key_moment";
            source.detail = {{"t", m.t}, {"team", to_string(m.team)}, {"label", m.label}};
        }
        run_pipeline(decision, source, std::nullopt);
    }
    drain_pending();
    return log_.events_since(first);
}

std::vector<SessionEvent> Session::on_user_message(std::string_view text) {
    const auto trimmed = text::trim(text);
    if (trimmed.empty()) {
        throw ValidationError("user message text must be non-empty");
    }
    const auto first = log_.next_seq();
    const bool busy = phase_ != SessionPhase::idle;
    emit(EventKind::user_message, {{"text", trimmed}, {"video_t", clock_t_}, {"queued", busy}});
    pending_.emplace_back(trimmed);
    if (!busy) {
        drain_pending();
    }
    return log_.events_since(first);
}

void Session::drain_pending() {
    while (phase_ == SessionPhase::idle && !pending_.empty()) {
        auto text = std::move(pending_.front());
        pending_.pop_front();
        const UserMessage msg{clock_t_, text};
        const auto decision = next_trigger(scheduler_, clock_t_, classify_scenario(msg, config_.scheduler),
                                           config_.scheduler);
        run_pipeline(decision, TriggerSource{"user", {{"text", text}}}, text);
    }
}

void Session::run_pipeline(const TriggerDecision& decision, const TriggerSource& source,
                           std::optional<std::string> user_text) {
    const int index = conversation_count_++;
    const auto conv_id = fmt::format("{}-c{:03d}", options_.session_id, index);
    phase_ = SessionPhase::conversing;
    emit(EventKind::conversation_started, {{"conv_id", conv_id},
                                           {"trigger_t", decision.trigger_t},
                                           {"source", source.kind},
                                           {"detail", source.detail},
                                           {"scenario", scenario_json(decision.scenario)}});

    const auto window = window_cache_.query(decision.trigger_t);
    const auto score = score_at(*timeline_, decision.trigger_t);
    const auto context = format_context(window, *timeline_, score);
    ConversationSetup setup{timeline_.get(), options_.supported_team, score,
                            stable_hash(fmt::format("{}:{}", options_.seed, index)), kMaxTurnChars};

    auto conv = run_conversation(decision, conv_id, context, roster_, *services_.agents, services_.judge, setup,
                                 std::move(user_text));

    phase_ = SessionPhase::staging;
    auto plan = stage_conversation(conv, roster_, *services_.tts, config_.staging);

    const auto final_round = conv.last_round();
    for (const auto& turn : conv.turns) {
        nlohmann::ordered_json p = {{"conv_id", conv_id},
                                    {"turn_seq", turn.seq},
                                    {"agent_id", turn.agent_id},
                                    {"round_index", turn.round_index},
                                    {"final_round", final_round && turn.round_index == *final_round},
                                    {"t_video", turn.t_video},
                                    {"text", turn.text}};
        std::shared_ptr<const std::vector<std::uint8_t>> audio;
        const auto item = std::find_if(plan.items.begin(), plan.items.end(),
                                       [&](const PlaybackItem& i) { return i.turn_seq == turn.seq; });
        if (item != plan.items.end()) {
            p["start_offset_s"] = item->start_offset_s;
            if (item->clip) {
                p["audio"] = {{"sample_rate_hz", item->clip->sample_rate_hz},
                              {"duration_s", item->clip->duration_s},
                              {"bytes", item->clip->wav.size()}};
                audio = std::make_shared<const std::vector<std::uint8_t>>(item->clip->wav);
            } else {
                p["audio"] = nullptr;
            }
            p["cue"] = {{"azimuth_deg", item->cue.azimuth_deg}, {"gain", item->cue.gain}};
        } else {
            p["audio"] = nullptr;
            p["cue"] = nullptr;
        }
        emit(EventKind::agent_turn, std::move(p), std::move(audio));
    }
    if (plan.duck) {
        emit(EventKind::duck_on, {{"conv_id", conv_id}, {"at_offset_s", plan.duck->on_at}});
        emit(EventKind::duck_off, {{"conv_id", conv_id}, {"at_offset_s", plan.duck->off_at}});
    }
    for (const auto& report : conv.reports) {
        emit(EventKind::evaluation_report, report_json(report));
    }
    for (const auto& err : conv.errors) {
        emit(EventKind::error, {{"conv_id", conv_id}, {"stage", "agents"}, {"message", err}});
    }
    for (const auto& item : plan.items) {
        if (!item.clip) {
            emit(EventKind::error, {{"conv_id", conv_id},
                                    {"stage", "tts"},
                                    {"message", fmt::format("turn {} has no audio", item.turn_seq)}});
        }
    }

    std::optional<double> final_overall;
    for (auto it = conv.reports.rbegin(); it != conv.reports.rend(); ++it) {
        if (it->judged_by != JudgedBy::skipped) {
            final_overall = it->overall;
            break;
        }
    }
    emit(EventKind::conversation_ended,
         {{"conv_id", conv_id},
          {"rounds_total", conv.scenario.rounds_total},
          {"rounds_executed", conv.rounds_executed()},
          {"feedback_injections", conv.feedback.size()},
          {"turns", conv.turns.size()},
          {"final_overall", final_overall ? nlohmann::ordered_json(*final_overall) : nlohmann::ordered_json()},
          {"early_accepted", conv.early_accepted},
          {"aborted", !conv.errors.empty()},
          {"playback_s", plan.total_duration()}});

    conversations_.push_back(std::move(conv));
    plans_.push_back(std::move(plan));
    phase_ = SessionPhase::idle;
}

nlohmann::ordered_json stream_frame(const SessionEvent& event, std::string_view session_id,
                                    std::size_t max_inline_bytes) {
    auto frame = event.to_json();
    if (event.kind == EventKind::agent_turn) {
        if (event.audio && event.audio->size() <= max_inline_bytes) {
            frame["audio_b64"] = base64(*event.audio);
        } else {
            frame["audio_b64"] = nullptr;
            if (event.audio) {
                frame["audio_ref"] = fmt::format("/sessions/{}/blobs/{}", session_id, event.seq);
            }
        }
    }
    return frame;
}

Engine::Engine(EngineConfig config, EngineServices services)
    : config_(std::move(config)), services_(std::move(services)) {}

std::string Engine::add_timeline(TimelineDoc doc) {
    validate_timeline(doc);
    std::lock_guard lock(mutex_);
    std::string id = doc.video_id.empty() ? "timeline" : doc.video_id;
    for (int n = 2; timelines_.count(id) != 0; ++n) {
        id = fmt::format("{}-{}", doc.video_id, n);
    }
    timelines_.emplace(id, std::make_shared<const TimelineDoc>(std::move(doc)));
    return id;
}

std::vector<std::pair<std::string, std::shared_ptr<const TimelineDoc>>> Engine::timelines() const {
    std::lock_guard lock(mutex_);
    return {timelines_.begin(), timelines_.end()};
}

std::shared_ptr<const TimelineDoc> Engine::timeline(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = timelines_.find(id);
    if (it == timelines_.end()) {
        throw NotFoundError(fmt::format("unknown timeline '{}'", id));
    }
    return it->second;
}

std::shared_ptr<Session> Engine::create_session(const std::string& timeline_id, TeamSide supported_team,
                                                std::optional<std::uint64_t> seed) {
    auto doc = timeline(timeline_id);
    std::string id;
    {
        std::lock_guard lock(mutex_);
        std::random_device rd;
        id = fmt::format("s{:04d}-{:08x}", ++session_counter_, rd());
    }
    SessionOptions opts;
    opts.session_id = id;
    opts.supported_team = supported_team;
    opts.seed = seed.value_or(0);
    if (!config_.data_dir.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(config_.data_dir, ec);
        if (!ec) {
            opts.log_path = (std::filesystem::path(config_.data_dir) / (id + ".jsonl")).string();
        }
    }
    auto session = std::make_shared<Session>(std::move(doc), config_, services_, std::move(opts));
    std::lock_guard lock(mutex_);
    sessions_.emplace(id, session);
    return session;
}

std::shared_ptr<Session> Engine::session(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) {
        throw NotFoundError(fmt::format("unknown session '{}'", id));
    }
    return it->second;
}

SimulationResult simulate(std::shared_ptr<const TimelineDoc> timeline, const EngineConfig& config,
                          const EngineServices& services, const SimulationOptions& options) {
    SessionOptions sopts;
    sopts.session_id = options.session_id;
    sopts.supported_team = options.supported_team;
    sopts.seed = options.seed;
    sopts.virtual_wall_clock = true;
    sopts.log_path = options.log_path;
    const Seconds duration = timeline->duration_s;
    Session session(std::move(timeline), config, services, sopts);

    auto messages = options.user_messages;
    std::stable_sort(messages.begin(), messages.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
    std::size_t next_msg = 0;

    for (std::int64_t k = 0;; ++k) {
        const Seconds t = std::min(static_cast<double>(k) * config.clock_cadence_s, duration);
        session.on_clock(t);
        while (next_msg < messages.size() && messages[next_msg].t <= t) {
            session.on_user_message(messages[next_msg].text);
            ++next_msg;
        }
        if (t >= duration) {
            break;
        }
    }
    for (; next_msg < messages.size(); ++next_msg) {
        session.on_user_message(messages[next_msg].text);
    }

    return SimulationResult{session.transcript(), session.transcript_jsonl(), session.conversations(),
                            session.plans(), session.decisions()};
}

} // namespace companioncast
