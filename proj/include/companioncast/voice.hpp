#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "companioncast/agents.hpp"
#include "companioncast/conversation.hpp"

namespace companioncast {

/// Mono PCM clip carried as a complete WAV file.
struct AudioClip {
    int turn_seq = 0;
    int sample_rate_hz = 16000;
    std::size_t sample_count = 0;
    double duration_s = 0;
    std::vector<std::uint8_t> wav;
};

/// 16-bit mono WAV of silence.
std::vector<std::uint8_t> silent_wav(std::size_t sample_count, int sample_rate_hz);

struct WavInfo {
    int sample_rate_hz = 0;
    int channels = 0;
    int bits_per_sample = 0;
    std::size_t sample_count = 0;
};

/// Reads the fmt/data chunks of a PCM WAV file. Throws ParseError otherwise.
WavInfo inspect_wav(std::span<const std::uint8_t> wav);

/// Text-to-speech service. Implementations must tolerate concurrent use.
class TtsBackend {
public:
    virtual ~TtsBackend() = default;
    /// Throws BackendError on failure.
    virtual AudioClip synthesize(std::string_view text, std::string_view voice_profile_id) const = 0;
};

/// Deterministic stand-in: max(0.5, chars / 15) seconds of 16 kHz silence.
class MockTtsBackend final : public TtsBackend {
public:
    static constexpr double kCharsPerSecond = 15.0;
    static constexpr double kMinDuration = 0.5;
    static constexpr int kSampleRate = 16000;

    static double duration_for(std::string_view text);

    AudioClip synthesize(std::string_view text, std::string_view voice_profile_id) const override;
};

struct SpatialCue {
    std::string agent_id;
    double azimuth_deg = 0;
    double gain = 1.0;

    friend bool operator==(const SpatialCue&, const SpatialCue&) = default;
};

/// Role placement when a persona has no explicit azimuth.
double default_azimuth(RoleKind role);

SpatialCue spatial_cue(const AgentPersona& persona);

/// Throws ValidationError for an empty roster, duplicate ids, azimuths
/// outside (-180, 180] or two personas sharing an azimuth.
void validate_roster(std::span<const AgentPersona> roster);

struct PlaybackItem {
    int turn_seq = 0;
    std::string agent_id;
    std::string text;
    double start_offset_s = 0;
    /// Absent when synthesis failed; the turn is then shown as text only.
    std::optional<AudioClip> clip;
    SpatialCue cue;

    double duration_s() const { return clip ? clip->duration_s : 0.0; }
};

struct DuckInterval {
    double on_at = 0;
    double off_at = 0;
};

struct PlaybackPlan {
    std::string conv_id;
    std::vector<PlaybackItem> items;
    /// Absent when no item has audio.
    std::optional<DuckInterval> duck;

    double total_duration() const { return duck ? duck->off_at : 0.0; }
};

struct StagingOptions {
    double gap_s = 0.3;
};

/// Synthesizes the final round of a finished conversation into a sequential
/// playback plan with spatial cues and a mute interval over the speech.
PlaybackPlan stage_conversation(const Conversation& conv, std::span<const AgentPersona> roster, const TtsBackend& tts,
                                const StagingOptions& options = {});

} // namespace companioncast
