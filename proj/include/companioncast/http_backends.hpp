#pragma once

#include <string>

#include "companioncast/chat_backend.hpp"
#include "companioncast/voice.hpp"

namespace companioncast {

struct HttpEndpoint {
    /// Scheme, host and optional port, e.g. "https://api.example.com".
    std::string base_url;
    std::string path;
    std::string api_key;
    RetryPolicy retry;
};

/// OpenAI-style chat-completions client:
/// POST {"model", "messages", "temperature", "seed"?} and read choices[0].message.content.
class HttpChatBackend final : public ChatBackend {
public:
    HttpChatBackend(HttpEndpoint endpoint, std::string model);

    std::string complete(const ChatRequest& request) const override;

    /// Request body for `request`; exposed for tests.
    std::string request_body(const ChatRequest& request) const;

private:
    HttpEndpoint endpoint_;
    std::string model_;
};

/// Speech service client: POST {"text", "voice_id", "sample_rate"} and expect
/// an audio/wav body. Configured from CC_TTS_URL / CC_TTS_KEY by from_env().
class HttpTtsBackend final : public TtsBackend {
public:
    explicit HttpTtsBackend(HttpEndpoint endpoint);

    /// Throws ValidationError when CC_TTS_URL is unset.
    static HttpTtsBackend from_env(RetryPolicy retry = {});

    AudioClip synthesize(std::string_view text, std::string_view voice_profile_id) const override;

private:
    HttpEndpoint endpoint_;
};

/// Splits "http://host:port/some/path" into base URL and path.
std::pair<std::string, std::string> split_url(const std::string& url);

} // namespace companioncast
