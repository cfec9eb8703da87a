#include "companioncast/voice.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "companioncast/errors.hpp"
#include "companioncast/text.hpp"

namespace companioncast {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFFU));
    }
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFFU));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFFU));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
           (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t get_u16(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
    return std::memcmp(b.data() + at, tag, 4) == 0;
}

} // namespace

std::vector<std::uint8_t> silent_wav(std::size_t sample_count, int sample_rate_hz) {
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(sample_count * 2);
    std::vector<std::uint8_t> out;
    out.reserve(44 + data_bytes);
    put_tag(out, "RIFF");
    put_u32(out, 36 + data_bytes);
    put_tag(out, "WAVE");
    put_tag(out, "fmt ");
    put_u32(out, 16);
    put_u16(out, 1); // PCM
    put_u16(out, 1); // mono
    put_u32(out, static_cast<std::uint32_t>(sample_rate_hz));
    put_u32(out, static_cast<std::uint32_t>(sample_rate_hz) * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    put_tag(out, "data");
    put_u32(out, data_bytes);
    out.resize(out.size() + data_bytes, 0);
    return out;
}

WavInfo inspect_wav(std::span<const std::uint8_t> wav) {
    if (wav.size() < 12 || !tag_is(wav, 0, "RIFF") || !tag_is(wav, 8, "WAVE")) {
        throw ParseError("wav: missing RIFF/WAVE header");
    }
    WavInfo info;
    bool have_fmt = false;
    std::size_t at = 12;
    while (at + 8 <= wav.size()) {
        const auto size = get_u32(wav, at + 4);
        const std::size_t body = at + 8;
        if (body + size > wav.size()) {
            throw ParseError("wav: chunk runs past end of file");
        }
        if (tag_is(wav, at, "fmt ")) {
            if (size < 16 || get_u16(wav, body) != 1) {
                throw ParseError("wav: only PCM format is supported");
            }
            info.channels = get_u16(wav, body + 2);
            info.sample_rate_hz = static_cast<int>(get_u32(wav, body + 4));
            info.bits_per_sample = get_u16(wav, body + 14);
            have_fmt = true;
        } else if (tag_is(wav, at, "data")) {
            if (!have_fmt || info.channels <= 0 || info.bits_per_sample <= 0) {
                throw ParseError("wav: data chunk before a valid fmt chunk");
            }
            info.sample_count = size / (static_cast<std::size_t>(info.channels) * (info.bits_per_sample / 8));
            return info;
        }
        at = body + size + (size & 1U);
    }
    throw ParseError("wav: no data chunk");
}

double MockTtsBackend::duration_for(std::string_view text) {
    return std::max(kMinDuration, static_cast<double>(text::char_count(text)) / kCharsPerSecond);
}

AudioClip MockTtsBackend::synthesize(std::string_view text, std::string_view /*voice_profile_id*/) const {
    AudioClip clip;
    clip.sample_rate_hz = kSampleRate;
    clip.duration_s = duration_for(text);
    clip.sample_count = static_cast<std::size_t>(std::llround(clip.duration_s * kSampleRate));
    clip.wav = silent_wav(clip.sample_count, kSampleRate);
    return clip;
}

double default_azimuth(RoleKind role) {
    switch (role) {
    case RoleKind::diehard: return -60.0;
    case RoleKind::analyst: return 60.0;
    case RoleKind::comedian: return 180.0;
    }
    return 0.0;
}

SpatialCue spatial_cue(const AgentPersona& persona) {
    return SpatialCue{persona.id, persona.spatial_azimuth_deg.value_or(default_azimuth(persona.role_kind)), 1.0};
}

void validate_roster(std::span<const AgentPersona> roster) {
    if (roster.empty()) {
        throw ValidationError("roster: at least one persona is required");
    }
    std::set<std::string> ids;
    std::vector<std::pair<double, std::string>> placed;
    for (const auto& p : roster) {
        if (!ids.insert(p.id).second) {
            throw ValidationError(fmt::format("roster: duplicate persona id '{}'", p.id));
        }
        const auto cue = spatial_cue(p);
        if (!(cue.azimuth_deg > -180.0 && cue.azimuth_deg <= 180.0)) {
            throw ValidationError(
                fmt::format("roster: persona '{}' azimuth {} outside (-180, 180]", p.id, cue.azimuth_deg));
        }
        for (const auto& [az, other] : placed) {
            if (az == cue.azimuth_deg) {
                throw ValidationError(
                    fmt::format("roster: personas '{}' and '{}' share azimuth {}", other, p.id, cue.azimuth_deg));
            }
        }
        placed.emplace_back(cue.azimuth_deg, p.id);
    }
}

PlaybackPlan stage_conversation(const Conversation& conv, std::span<const AgentPersona> roster, const TtsBackend& tts,
                                const StagingOptions& options) {
    if (!conv.final) {
        throw PreconditionError(fmt::format("stage_conversation: conversation {} is not final", conv.conv_id));
    }
    PlaybackPlan plan;
    plan.conv_id = conv.conv_id;
    const auto last = conv.last_round();
    if (!last) {
        return plan;
    }

    bool placed = false;
    double last_end = 0.0;
    for (const auto& turn : conv.turns_in_round(*last)) {
        const auto persona = std::find_if(roster.begin(), roster.end(),
                                          [&](const AgentPersona& p) { return p.id == turn.agent_id; });
        if (persona == roster.end()) {
            throw PreconditionError(fmt::format("stage_conversation: agent '{}' is not in the roster", turn.agent_id));
        }
        PlaybackItem item;
        item.turn_seq = turn.seq;
        item.agent_id = turn.agent_id;
        item.text = turn.text;
        item.cue = spatial_cue(*persona);
        try {
            auto clip = tts.synthesize(turn.text, persona->voice_profile_id);
            clip.turn_seq = turn.seq;
            if (!(clip.duration_s > 0.0) || clip.wav.empty()) {
                throw BackendError("synthesized clip is empty");
            }
            item.clip = std::move(clip);
        } catch (const std::exception& e) {
            spdlog::warn("stage_conversation: {} turn {} stays text-only: {}", conv.conv_id, turn.seq, e.what());
        }
        if (item.clip) {
            item.start_offset_s = placed ? last_end + options.gap_s : 0.0;
            last_end = item.start_offset_s + item.clip->duration_s;
            placed = true;
        } else {
            item.start_offset_s = placed ? last_end : 0.0;
        }
        plan.items.push_back(std::move(item));
    }
    if (placed) {
        plan.duck = DuckInterval{0.0, last_end};
    }
    return plan;
}

} // namespace companioncast
