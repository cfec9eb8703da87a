#include "companioncast/http_backends.hpp"

#include <cstdlib>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "companioncast/errors.hpp"

namespace companioncast {

namespace {

httplib::Client make_client(const HttpEndpoint& ep) {
    httplib::Client client(ep.base_url);
    const auto t = ep.retry.timeout;
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(t);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(t - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    if (!ep.api_key.empty()) {
        client.set_bearer_token_auth(ep.api_key);
    }
    return client;
}

std::string post_json(const HttpEndpoint& ep, const std::string& body, std::string_view what) {
    return with_retries(ep.retry, what, [&] {
        auto client = make_client(ep);
        auto res = client.Post(ep.path, body, "application/json");
        if (!res) {
            throw BackendError(fmt::format("transport error: {}", httplib::to_string(res.error())));
        }
        if (res->status < 200 || res->status >= 300) {
            throw BackendError(fmt::format("HTTP {}: {}", res->status, res->body.substr(0, 200)));
        }
        return res->body;
    });
}

} // namespace

std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme = url.find("://");
    const auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

HttpChatBackend::HttpChatBackend(HttpEndpoint endpoint, std::string model)
    : endpoint_(std::move(endpoint)), model_(std::move(model)) {
    if (endpoint_.path.empty()) {
        endpoint_.path = "/v1/chat/completions";
    }
}

std::string HttpChatBackend::request_body(const ChatRequest& request) const {
    nlohmann::ordered_json body;
    body["model"] = model_;
    body["messages"] = nlohmann::ordered_json::array();
    if (!request.system_prompt.empty()) {
        body["messages"].push_back({{"role", "system"}, {"content", request.system_prompt}});
    }
    for (const auto& m : request.messages) {
        body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
    }
    body["temperature"] = request.temperature;
    if (request.seed) {
        body["seed"] = *request.seed;
    }
    return body.dump();
}

std::string HttpChatBackend::complete(const ChatRequest& request) const {
    const auto raw = post_json(endpoint_, request_body(request), "chat completion");
    try {
        const auto j = nlohmann::json::parse(raw);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(fmt::format("chat completion: unexpected response shape: {}", e.what()));
    }
}

HttpTtsBackend::HttpTtsBackend(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {
    if (endpoint_.path.empty()) {
        endpoint_.path = "/";
    }
}

HttpTtsBackend HttpTtsBackend::from_env(RetryPolicy retry) {
    const char* url = std::getenv("CC_TTS_URL");
    if (url == nullptr || *url == '\0') {
        throw ValidationError("CC_TTS_URL is not set");
    }
    const char* key = std::getenv("CC_TTS_KEY");
    auto [base, path] = split_url(url);
    return HttpTtsBackend(HttpEndpoint{base, path, key ? key : "", retry});
}

AudioClip HttpTtsBackend::synthesize(std::string_view text, std::string_view voice_profile_id) const {
    const nlohmann::ordered_json body = {{"text", text}, {"voice_id", voice_profile_id}, {"sample_rate", 16000}};
    const auto raw = post_json(endpoint_, body.dump(), "tts");
    AudioClip clip;
    clip.wav.assign(raw.begin(), raw.end());
    const auto info = inspect_wav(clip.wav);
    if (info.channels != 1 || info.sample_rate_hz <= 0 || info.sample_count == 0) {
        throw BackendError("tts: expected a non-empty mono PCM clip");
    }
    clip.sample_rate_hz = info.sample_rate_hz;
    clip.sample_count = info.sample_count;
    clip.duration_s = static_cast<double>(info.sample_count) / info.sample_rate_hz;
    return clip;
}

} // namespace companioncast
