#pragma once

// OpenAI-compatible chat-completions client: single-turn, one user message
// per request, bounded concurrency, exponential backoff with jitter on
// transport errors and rate-limit signals.

#include <httplib.h>

#include "sealkit/backend.hpp"

namespace sealkit {

struct ParsedUrl {
    std::string base;  // scheme://host[:port]
    std::string path;  // /v1/chat/completions
};

inline ParsedUrl parse_url(const std::string& url) {
    size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) fail(ErrorCode::Config, "endpoint URL needs a scheme: " + url);
    size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

class HttpBackend : public ChatBackend {
public:
    explicit HttpBackend(BackendConfig config)
        : config_(std::move(config)),
          limiter_(std::max(1, config_.parallelism)),
          jitter_rng_(std::random_device{}()) {
        if (config_.endpoint_url.empty()) fail(ErrorCode::Config, "endpoint_url is required");
        if (config_.temperature < 0) fail(ErrorCode::Config, "temperature must be >= 0");
        if (!config_.audit_log_path.empty()) set_audit_log(config_.audit_log_path);
    }

    std::string id() const override { return "http:" + config_.model_name; }

    const BackendConfig& config() const { return config_; }

protected:
    std::string do_complete(const std::string& prompt, int& attempts) override {
        ParsedUrl url = parse_url(config_.endpoint_url);
        json body = {{"model", config_.model_name},
                     {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
                     {"temperature", config_.temperature}};
        std::string payload = body.dump();

        std::string api_key;
        if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key = key;

        std::string last_error;
        for (int attempt = 1; attempt <= config_.max_retries + 1; ++attempt) {
            attempts = attempt;
            httplib::Result res = post(url, payload, api_key);
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
            } else if (res->status == 429 || res->status >= 500) {
                last_error = "status " + std::to_string(res->status);
            } else if (res->status != 200) {
                fail(ErrorCode::BadResponse,
                     "status " + std::to_string(res->status) + ": " + res->body);
            } else {
                return extract_content(res->body);
            }
            if (attempt <= config_.max_retries) backoff(attempt);
        }
        fail(ErrorCode::BackendExhausted,
             last_error + " after " + std::to_string(config_.max_retries + 1) + " attempts");
    }

private:
    httplib::Result post(const ParsedUrl& url, const std::string& payload,
                         const std::string& api_key) {
        limiter_.acquire();
        struct Release {
            std::counting_semaphore<>& sem;
            ~Release() { sem.release(); }
        } release{limiter_};
        httplib::Client client(url.base);
        auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.request_timeout);
        client.set_connection_timeout(secs.count(), 0);
        client.set_read_timeout(secs.count(), 0);
        httplib::Headers headers;
        if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
        return client.Post(url.path, headers, payload, "application/json");
    }

    std::string extract_content(const std::string& body) {
        json parsed = json::parse(body, nullptr, false);
        if (parsed.is_discarded()) fail(ErrorCode::BadResponse, "response body is not JSON");
        if (!parsed.contains("choices") || !parsed["choices"].is_array() || parsed["choices"].empty())
            fail(ErrorCode::BadResponse, "response has no choices");
        const json& message = parsed["choices"][0].value("message", json::object());
        if (!message.contains("content") || !message["content"].is_string())
            fail(ErrorCode::BadResponse, "choice carries no text content");
        return message["content"].get<std::string>();
    }

    void backoff(int attempt) {
        auto base = config_.retry_base_delay.count();
        long long delay = base << (attempt - 1);
        long long jitter = 0;
        if (base > 0) {
            std::lock_guard lock(rng_mutex_);
            jitter = static_cast<long long>(jitter_rng_() % static_cast<uint64_t>(base / 2 + 1));
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(delay + jitter));
    }

    BackendConfig config_;
    std::counting_semaphore<> limiter_;
    std::mutex rng_mutex_;
    std::mt19937_64 jitter_rng_;
};

}  // namespace sealkit
