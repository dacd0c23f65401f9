#pragma once

// Dense retrieval through an external embedding service (OpenAI-compatible
// shape). Inference only: document vectors are cached and unit-normalized,
// similarity is cosine, ties break by tool name like the sparse path.

#include <cmath>
#include <mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include <httplib.h>

#include "sealkit/retrieval.hpp"

namespace sealkit {

class EmbeddingClient {
public:
    virtual ~EmbeddingClient() = default;

    // One vector per input text, all of equal dimension.
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& inputs) = 0;
};

struct EmbeddingEndpointConfig {
    std::string endpoint_url;  // e.g. http://localhost:8080/v1/embeddings
    std::string model_name;
    std::string api_key_env = "LLM_API_KEY";
    std::chrono::milliseconds request_timeout{30000};
};

// POST {"input": [texts], "model": name} -> {"data": [{"embedding": [...]}]}
class HttpEmbeddingClient : public EmbeddingClient {
public:
    explicit HttpEmbeddingClient(EmbeddingEndpointConfig config) : config_(std::move(config)) {
        if (config_.endpoint_url.empty()) fail(ErrorCode::Config, "embedding endpoint_url is required");
    }

    std::vector<std::vector<double>> embed(const std::vector<std::string>& inputs) override {
        size_t scheme_end = config_.endpoint_url.find("://");
        if (scheme_end == std::string::npos)
            fail(ErrorCode::Config, "embedding endpoint URL needs a scheme");
        size_t path_start = config_.endpoint_url.find('/', scheme_end + 3);
        std::string base = path_start == std::string::npos ? config_.endpoint_url
                                                           : config_.endpoint_url.substr(0, path_start);
        std::string path = path_start == std::string::npos ? "/"
                                                           : config_.endpoint_url.substr(path_start);
        httplib::Client client(base);
        auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.request_timeout);
        client.set_connection_timeout(secs.count(), 0);
        client.set_read_timeout(secs.count(), 0);
        httplib::Headers headers;
        if (const char* key = std::getenv(config_.api_key_env.c_str()))
            headers.emplace("Authorization", std::string("Bearer ") + key);
        json body = {{"input", inputs}, {"model", config_.model_name}};
        httplib::Result res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) fail(ErrorCode::EmbedBackendDown, httplib::to_string(res.error()));
        if (res->status != 200)
            fail(ErrorCode::EmbedBackendDown, "status " + std::to_string(res->status));
        json parsed = json::parse(res->body, nullptr, false);
        if (parsed.is_discarded() || !parsed.contains("data") || !parsed["data"].is_array())
            fail(ErrorCode::BadResponse, "embedding response lacks data array");
        std::vector<std::vector<double>> out;
        for (const json& item : parsed["data"]) {
            if (!item.contains("embedding") || !item["embedding"].is_array())
                fail(ErrorCode::BadResponse, "embedding item lacks vector");
            out.push_back(item["embedding"].get<std::vector<double>>());
        }
        if (out.size() != inputs.size())
            fail(ErrorCode::BadResponse, "embedding count does not match input count");
        return out;
    }

private:
    EmbeddingEndpointConfig config_;
};

// Deterministic client for tests: exact text -> vector table.
class ScriptedEmbeddingClient : public EmbeddingClient {
public:
    explicit ScriptedEmbeddingClient(std::unordered_map<std::string, std::vector<double>> table)
        : table_(std::move(table)) {}

    std::vector<std::vector<double>> embed(const std::vector<std::string>& inputs) override {
        std::vector<std::vector<double>> out;
        for (const std::string& input : inputs) {
            auto it = table_.find(input);
            if (it == table_.end()) fail(ErrorCode::ScriptMiss, "no scripted embedding for input");
            out.push_back(it->second);
        }
        return out;
    }

private:
    std::unordered_map<std::string, std::vector<double>> table_;
};

inline void unit_normalize(std::vector<double>& v) {
    double norm_sq = 0.0;
    for (double x : v) norm_sq += x * x;
    double norm = std::sqrt(norm_sq);
    if (!(norm > 1e-12))
        fail(ErrorCode::DimensionMismatch, "embedding vector has (near-)zero norm");
    for (double& x : v) x /= norm;
}

// Cosine-similarity retriever over cached, unit-normalized tool-document
// embeddings. Document vectors are fetched once (single batch, single
// flight); each search embeds only the query.
class DenseRetriever {
public:
    DenseRetriever(EmbeddingClient& client, const ToolPool& pool,
                   unsigned mask = field_mask::kAll)
        : client_(client), mask_(mask) {
        if (pool.empty()) fail(ErrorCode::EmptyPool, "cannot embed an empty pool");
        for (const ToolSpec& tool : pool.tools()) {
            names_.push_back(tool.name);
            texts_.push_back(tool_document_text(tool, mask));
        }
    }

    std::vector<ScoredTool> search(const std::string& query, int k) {
        if (k < 1) fail(ErrorCode::Precondition, "k must be >= 1");
        ensure_documents();
        std::vector<double> q = embed_one(query);
        if (q.size() != dim_)
            fail(ErrorCode::DimensionMismatch,
                 "query dimension " + std::to_string(q.size()) + " != document dimension " +
                     std::to_string(dim_));
        std::vector<ScoredTool> scored;
        scored.reserve(names_.size());
        for (size_t i = 0; i < names_.size(); ++i) {
            double dot = 0.0;
            for (size_t d = 0; d < dim_; ++d) dot += q[d] * vectors_[i][d];
            scored.push_back({names_[i], dot});
        }
        std::sort(scored.begin(), scored.end(), [](const ScoredTool& a, const ScoredTool& x) {
            if (a.score != x.score) return a.score > x.score;
            return a.tool_name < x.tool_name;
        });
        if (scored.size() > static_cast<size_t>(k)) scored.resize(static_cast<size_t>(k));
        return scored;
    }

    Retriever as_retriever() {
        return [this](const std::string& query, int k) {
            std::vector<std::string> names;
            for (const ScoredTool& hit : search(query, k)) names.push_back(hit.tool_name);
            return names;
        };
    }

private:
    void ensure_documents() {
        std::lock_guard lock(mutex_);
        if (!vectors_.empty()) return;
        std::vector<std::vector<double>> vectors = client_.embed(texts_);
        if (vectors.empty()) fail(ErrorCode::BadResponse, "embedding service returned nothing");
        dim_ = vectors.front().size();
        for (auto& v : vectors) {
            if (v.size() != dim_)
                fail(ErrorCode::DimensionMismatch, "document embeddings disagree on dimension");
            unit_normalize(v);
        }
        vectors_ = std::move(vectors);
    }

    std::vector<double> embed_one(const std::string& text) {
        std::vector<std::vector<double>> out = client_.embed({text});
        if (out.size() != 1) fail(ErrorCode::BadResponse, "expected one query embedding");
        unit_normalize(out.front());
        return out.front();
    }

    EmbeddingClient& client_;
    unsigned mask_;
    std::vector<std::string> names_;
    std::vector<std::string> texts_;
    std::vector<std::vector<double>> vectors_;
    size_t dim_ = 0;
    std::mutex mutex_;
};

}  // namespace sealkit
