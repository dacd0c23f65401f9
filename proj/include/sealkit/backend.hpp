#pragma once

// Chat-completion backends: an OpenAI-compatible HTTP client for live
// generation and a deterministic scripted backend for tests and golden-file
// pipelines. Handles are shareable across threads; retry and rate-limit
// state is synchronized internally.

#include <chrono>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <memory>
#include <mutex>
#include <random>
#include <semaphore>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "sealkit/errors.hpp"
#include "sealkit/schema.hpp"
#include "sealkit/text.hpp"

namespace sealkit {

struct BackendConfig {
    std::string endpoint_url;  // e.g. http://localhost:8080/v1/chat/completions
    std::string model_name;
    double temperature = 0.7;
    int max_retries = 3;
    std::chrono::milliseconds request_timeout{30000};
    int parallelism = 4;
    std::string api_key_env = "LLM_API_KEY";  // the key value itself is never persisted
    std::chrono::milliseconds retry_base_delay{1000};  // doubles per attempt, plus jitter
    std::string audit_log_path;  // completions.jsonl; empty disables auditing
};

struct CompletionRecord {
    std::string prompt;
    std::string response;
    std::chrono::milliseconds latency{0};
    int attempt_count = 1;
    std::string backend_id;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;

    virtual std::string id() const = 0;

    CompletionRecord complete(const std::string& prompt) {
        if (prompt.empty()) fail(ErrorCode::Precondition, "empty prompt");
        auto start = std::chrono::steady_clock::now();
        int attempts = 1;
        std::string response;
        try {
            response = do_complete(prompt, attempts);
        } catch (...) {
            audit(prompt, "", attempts, start, false);
            throw;
        }
        CompletionRecord record{prompt, std::move(response), {}, attempts, id()};
        record.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start);
        audit(record.prompt, record.response, attempts, start, true);
        return record;
    }

    void set_audit_log(std::string path) {
        std::lock_guard lock(audit_mutex_);
        audit_path_ = std::move(path);
    }

protected:
    virtual std::string do_complete(const std::string& prompt, int& attempts) = 0;

private:
    // Audit lines carry hashes, latency and attempts -- never the API key
    // and never the raw prompt.
    void audit(const std::string& prompt, const std::string& response, int attempts,
               std::chrono::steady_clock::time_point start, bool ok) {
        std::lock_guard lock(audit_mutex_);
        if (audit_path_.empty()) return;
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
        json line = {{"backend", id()},
                     {"prompt_hash", fnv1a64_hex(prompt)},
                     {"response_hash", ok ? fnv1a64_hex(response) : ""},
                     {"latency_ms", ms},
                     {"attempts", attempts},
                     {"ok", ok}};
        std::ofstream out(audit_path_, std::ios::app);
        if (out) out << line.dump() << '\n';
    }

    std::mutex audit_mutex_;
    std::string audit_path_;
};

// ---------------------------------------------------------------------------
// Scripted backend

enum class ScriptKeyMode { Exact, Hash, Sequence };

inline std::string_view to_string(ScriptKeyMode m) {
    switch (m) {
        case ScriptKeyMode::Exact: return "exact";
        case ScriptKeyMode::Hash: return "hash";
        case ScriptKeyMode::Sequence: return "sequence";
    }
    return "exact";
}

// Deterministic backend driven by a prepared script. Exact and hash modes
// resolve by prompt; sequence mode pops responses in order regardless of the
// prompt (pops are serialized, each response is delivered exactly once).
// Hash mode keys collide after whitespace normalization: last write wins.
class ScriptedBackend : public ChatBackend {
public:
    ScriptedBackend(ScriptKeyMode mode, std::vector<std::pair<std::string, std::string>> entries,
                    std::string backend_id = "scripted")
        : mode_(mode), id_(std::move(backend_id)) {
        if (entries.empty()) fail(ErrorCode::Config, "scripted backend needs at least one response");
        for (auto& [key, response] : entries) {
            switch (mode_) {
                case ScriptKeyMode::Sequence:
                    queue_.push_back(std::move(response));
                    break;
                case ScriptKeyMode::Exact:
                    table_[key] = std::move(response);
                    break;
                case ScriptKeyMode::Hash:
                    table_[fnv1a64_hex(collapse_whitespace(key))] = std::move(response);
                    break;
            }
        }
    }

    static std::shared_ptr<ScriptedBackend> sequence(std::vector<std::string> responses,
                                                     std::string backend_id = "scripted") {
        std::vector<std::pair<std::string, std::string>> entries;
        entries.reserve(responses.size());
        for (auto& r : responses) entries.emplace_back("", std::move(r));
        return std::make_shared<ScriptedBackend>(ScriptKeyMode::Sequence, std::move(entries),
                                                 std::move(backend_id));
    }

    std::string id() const override { return id_; }

    size_t remaining() const {
        std::lock_guard lock(mutex_);
        return queue_.size();
    }

protected:
    std::string do_complete(const std::string& prompt, int& attempts) override {
        attempts = 1;
        std::lock_guard lock(mutex_);
        switch (mode_) {
            case ScriptKeyMode::Sequence: {
                if (queue_.empty()) fail(ErrorCode::ScriptExhausted, "scripted responses exhausted");
                std::string response = std::move(queue_.front());
                queue_.pop_front();
                return response;
            }
            case ScriptKeyMode::Exact: {
                auto it = table_.find(prompt);
                if (it == table_.end())
                    fail(ErrorCode::ScriptMiss, "no scripted response for prompt (exact mode)");
                return it->second;
            }
            case ScriptKeyMode::Hash: {
                auto it = table_.find(fnv1a64_hex(collapse_whitespace(prompt)));
                if (it == table_.end())
                    fail(ErrorCode::ScriptMiss, "no scripted response for prompt (hash mode)");
                return it->second;
            }
        }
        fail(ErrorCode::ScriptMiss, "unreachable");
    }

private:
    ScriptKeyMode mode_;
    std::string id_;
    mutable std::mutex mutex_;
    std::deque<std::string> queue_;
    std::unordered_map<std::string, std::string> table_;
};

// Script file shape: {"mode": "sequence"|"exact"|"hash",
//                     "responses": [..] or {key: response}}
inline std::shared_ptr<ScriptedBackend> scripted_backend_from_json(const json& raw,
                                                                   std::string backend_id = "scripted") {
    std::string mode_token = raw.value("mode", "sequence");
    ScriptKeyMode mode;
    if (mode_token == "sequence") mode = ScriptKeyMode::Sequence;
    else if (mode_token == "exact") mode = ScriptKeyMode::Exact;
    else if (mode_token == "hash") mode = ScriptKeyMode::Hash;
    else fail(ErrorCode::Config, "unknown script mode \"" + mode_token + "\"");
    if (!raw.contains("responses")) fail(ErrorCode::Config, "script file needs \"responses\"");
    std::vector<std::pair<std::string, std::string>> entries;
    const json& responses = raw["responses"];
    if (responses.is_array()) {
        for (const auto& r : responses) entries.emplace_back("", r.get<std::string>());
    } else if (responses.is_object()) {
        for (auto it = responses.begin(); it != responses.end(); ++it)
            entries.emplace_back(it.key(), it.value().get<std::string>());
    } else {
        fail(ErrorCode::Config, "script \"responses\" must be an array or object");
    }
    return std::make_shared<ScriptedBackend>(mode, std::move(entries), std::move(backend_id));
}

}  // namespace sealkit
