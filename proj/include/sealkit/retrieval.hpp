#pragma once

// Candidate-tool retrieval: BM25 over tool documents built from the pool,
// plus the micro recall@k harness. The index is immutable after build;
// concurrent searches are safe.

#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sealkit/instance.hpp"
#include "sealkit/schema.hpp"

namespace sealkit {

// Tokenization: lowercase, split on any non-alphanumeric byte, drop empties.
// No stemming, no stopwords.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (ascii_alnum(c)) {
            current.push_back(ascii_lower(c));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

// Which tool fields feed the indexed document text.
namespace field_mask {
inline constexpr unsigned kName = 1u;
inline constexpr unsigned kDescription = 2u;
inline constexpr unsigned kParamDescriptions = 4u;
inline constexpr unsigned kAll = kName | kDescription | kParamDescriptions;
}  // namespace field_mask

inline std::string tool_document_text(const ToolSpec& tool, unsigned mask) {
    std::string text;
    auto append = [&text](std::string_view part) {
        if (part.empty()) return;
        if (!text.empty()) text += ' ';
        text += part;
    };
    if (mask & field_mask::kName) append(tool.name);
    if (mask & field_mask::kDescription) append(tool.description);
    if (mask & field_mask::kParamDescriptions)
        for (const auto& p : tool.parameters) append(p.description);
    return text;
}

struct ToolDocument {
    std::string tool_name;
    std::string text;
    std::map<std::string, int> token_counts;
    int length = 0;  // always the sum of token_counts
};

struct ScoredTool {
    std::string tool_name;
    double score = 0.0;

    bool operator==(const ScoredTool&) const = default;
};

// BM25 index with standard parameters (k1=1.2, b=0.75 by default) and the
// non-negative idf variant: ln(1 + (N - df + 0.5) / (df + 0.5)). Repeated
// query tokens contribute once per occurrence. Ties break by ascending
// tool name so rankings are reproducible.
class ToolIndex {
public:
    static ToolIndex build(const ToolPool& pool, unsigned mask = field_mask::kAll,
                           double k1 = 1.2, double b = 0.75) {
        if (pool.empty()) fail(ErrorCode::EmptyPool, "cannot index an empty pool");
        ToolIndex index;
        index.mask_ = mask;
        index.k1_ = k1;
        index.b_ = b;
        for (const ToolSpec& tool : pool.tools()) {
            ToolDocument doc;
            doc.tool_name = tool.name;
            doc.text = tool_document_text(tool, mask);
            for (std::string& token : tokenize(doc.text)) {
                doc.token_counts[token] += 1;
                ++doc.length;
            }
            index.docs_.push_back(std::move(doc));
        }
        index.finish();
        return index;
    }

    std::vector<ScoredTool> search(const std::string& query, int k) const {
        if (k < 1) fail(ErrorCode::Precondition, "k must be >= 1");
        std::vector<std::string> terms = tokenize(query);
        std::vector<ScoredTool> scored;
        scored.reserve(docs_.size());
        for (const ToolDocument& doc : docs_) {
            double score = 0.0;
            for (const std::string& term : terms) {
                auto tf_it = doc.token_counts.find(term);
                if (tf_it == doc.token_counts.end()) continue;
                auto df_it = df_.find(term);
                double df = df_it == df_.end() ? 0.0 : static_cast<double>(df_it->second);
                double n = static_cast<double>(docs_.size());
                double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
                double tf = static_cast<double>(tf_it->second);
                double norm = k1_ * (1.0 - b_ + b_ * static_cast<double>(doc.length) / avg_len_);
                score += idf * tf * (k1_ + 1.0) / (tf + norm);
            }
            scored.push_back({doc.tool_name, score});
        }
        std::sort(scored.begin(), scored.end(), [](const ScoredTool& a, const ScoredTool& x) {
            if (a.score != x.score) return a.score > x.score;
            return a.tool_name < x.tool_name;
        });
        if (scored.size() > static_cast<size_t>(k)) scored.resize(static_cast<size_t>(k));
        return scored;
    }

    const std::vector<ToolDocument>& documents() const { return docs_; }
    double avg_len() const { return avg_len_; }
    double k1() const { return k1_; }
    double b() const { return b_; }
    unsigned mask() const { return mask_; }
    int df(const std::string& token) const {
        auto it = df_.find(token);
        return it == df_.end() ? 0 : it->second;
    }

    // index.json: df table, per-document token counts and params, enough to
    // reload the exact same scoring function.
    json to_json() const {
        json docs = json::array();
        for (const ToolDocument& doc : docs_) {
            json counts = json::object();
            for (const auto& [token, count] : doc.token_counts) counts[token] = count;
            docs.push_back({{"tool_name", doc.tool_name},
                            {"length", doc.length},
                            {"token_counts", std::move(counts)}});
        }
        return {{"k1", k1_}, {"b", b_}, {"field_mask", mask_}, {"documents", std::move(docs)}};
    }

    static ToolIndex from_json(const json& raw) {
        ToolIndex index;
        index.k1_ = raw.at("k1").get<double>();
        index.b_ = raw.at("b").get<double>();
        index.mask_ = raw.at("field_mask").get<unsigned>();
        for (const json& d : raw.at("documents")) {
            ToolDocument doc;
            doc.tool_name = d.at("tool_name").get<std::string>();
            doc.length = d.at("length").get<int>();
            for (auto it = d.at("token_counts").begin(); it != d.at("token_counts").end(); ++it)
                doc.token_counts[it.key()] = it.value().get<int>();
            index.docs_.push_back(std::move(doc));
        }
        index.finish();
        return index;
    }

private:
    void finish() {
        df_.clear();
        size_t total_len = 0;
        for (const ToolDocument& doc : docs_) {
            total_len += static_cast<size_t>(doc.length);
            for (const auto& [token, count] : doc.token_counts) df_[token] += 1;
        }
        avg_len_ = docs_.empty() ? 0.0
                                 : static_cast<double>(total_len) / static_cast<double>(docs_.size());
        if (!docs_.empty() && avg_len_ <= 0.0) avg_len_ = 1.0;  // all-empty documents
    }

    std::vector<ToolDocument> docs_;
    std::unordered_map<std::string, int> df_;
    double avg_len_ = 0.0;
    double k1_ = 1.2;
    double b_ = 0.75;
    unsigned mask_ = field_mask::kAll;
};

// Any ranked retriever: query + k -> tool names, best first.
using Retriever = std::function<std::vector<std::string>(const std::string&, int)>;

inline Retriever bm25_retriever(const ToolIndex& index) {
    return [&index](const std::string& query, int k) {
        std::vector<std::string> names;
        for (const ScoredTool& hit : index.search(query, k)) names.push_back(hit.tool_name);
        return names;
    };
}

// Micro recall over instances: the number of gold tools found in the top-k
// summed over instances, divided by the summed gold-set sizes. Gold is the
// distinct tool names of each instance's calling.
inline double recall_at_k(const Retriever& retrieve, std::span<const Instance> instances, int k,
                          const ToolPool& pool) {
    size_t hits = 0, gold_total = 0;
    for (const Instance& instance : instances) {
        std::unordered_set<std::string> gold;
        for (const auto& call : instance.calling.calls) {
            if (!pool.find_by_name(call.api))
                fail(ErrorCode::UnknownGoldTool,
                     "instance \"" + instance.id + "\" calls unknown tool \"" + call.api + "\"");
            gold.insert(call.api);
        }
        std::vector<std::string> top = retrieve(instance.query, k);
        for (const std::string& name : top)
            if (gold.contains(name)) ++hits;
        gold_total += gold.size();
    }
    if (gold_total == 0) return 0.0;
    return static_cast<double>(hits) / static_cast<double>(gold_total);
}

}  // namespace sealkit
