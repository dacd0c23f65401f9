#pragma once

// Scoring of model outputs against gold instances: format validity, micro
// tool P/R/F1, micro parameter P/R/F1 over (tool, parameter, value) triples,
// per-split reports, and the tool/parameter error taxonomy.

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "sealkit/calling.hpp"
#include "sealkit/extract.hpp"
#include "sealkit/instance.hpp"

namespace sealkit {

struct Prediction {
    std::string id;          // matches an Instance id
    std::string raw_output;  // the model's text, unprocessed
};

// predictions.jsonl: {"id": str, "output": str}
inline std::vector<Prediction> predictions_from_records(const std::vector<json>& records) {
    std::vector<Prediction> out;
    std::set<std::string> seen;
    for (const json& record : records) {
        Prediction p;
        p.id = record.value("id", "");
        if (p.id.empty()) fail(ErrorCode::SchemaError, "prediction record lacks an id");
        if (!seen.insert(p.id).second)
            fail(ErrorCode::IdMismatch, "duplicate prediction id \"" + p.id + "\"");
        if (record.contains("output") && record["output"].is_string())
            p.raw_output = record["output"].get<std::string>();
        else
            p.raw_output = record.value("output", json()).dump();
        out.push_back(std::move(p));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Prediction parsing

enum class FormatErrorKind { NoJson, Schema, Placeholder };

constexpr std::string_view to_string(FormatErrorKind kind) {
    switch (kind) {
        case FormatErrorKind::NoJson: return "NO_JSON";
        case FormatErrorKind::Schema: return "SCHEMA";
        case FormatErrorKind::Placeholder: return "PLACEHOLDER";
    }
    return "SCHEMA";
}

struct ParsedPrediction {
    std::optional<CallSequence> sequence;       // canonical-renumbered on success
    std::optional<FormatErrorKind> error;
    bool json_found = false;                    // extraction succeeded even if schema failed
};

// extract_first_json, then parse_call_sequence, then canonical_renumber.
// Success is what counts as format-correct; failures yield zero-credit match
// counts rather than aborting a corpus run.
inline ParsedPrediction parse_prediction(const std::string& raw_output) {
    ParsedPrediction result;
    json payload;
    try {
        payload = extract_first_json(raw_output);
        result.json_found = true;
    } catch (const Error&) {
        result.error = FormatErrorKind::NoJson;
        return result;
    }
    try {
        result.sequence = canonical_renumber(parse_call_sequence(payload));
    } catch (const Error& e) {
        result.error = (e.code() == ErrorCode::PlaceholderSyntax || e.code() == ErrorCode::DanglingRef)
                           ? FormatErrorKind::Placeholder
                           : FormatErrorKind::Schema;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Matching

struct MatchCounts {
    size_t correct_tools = 0;
    size_t predicted_tools = 0;
    size_t gold_tools = 0;
    size_t correct_params = 0;
    size_t predicted_params = 0;
    size_t gold_params = 0;

    void merge(const MatchCounts& other) {
        correct_tools += other.correct_tools;
        predicted_tools += other.predicted_tools;
        gold_tools += other.gold_tools;
        correct_params += other.correct_params;
        predicted_params += other.predicted_params;
        gold_params += other.gold_params;
    }

    bool operator==(const MatchCounts&) const = default;
};

namespace detail {

inline std::string canon_number(double value) {
    if (std::isfinite(value) && value == static_cast<double>(static_cast<long long>(value)) &&
        value > -9.0e15 && value < 9.0e15) {
        return std::to_string(static_cast<long long>(value));
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

inline bool parse_full_number(std::string_view s, double& out) {
    if (s.empty()) return false;
    std::string owned(s);
    const char* begin = owned.c_str();
    char* end = nullptr;
    double value = std::strtod(begin, &end);
    if (end != begin + owned.size()) return false;
    out = value;
    return true;
}

}  // namespace detail

// A parameter value reduced to a comparable token. Strings are trimmed; a
// string that reads entirely as a number compares numerically; booleans are
// case-insensitive; Refs compare by canonical index; everything else is
// case-sensitive text.
struct NormValue {
    enum class Tag { Blank, Ref, Bool, Number, String, Other };
    Tag tag = Tag::Blank;
    std::string repr;

    auto operator<=>(const NormValue&) const = default;
};

inline NormValue normalize_value(const ParamValue& value) {
    using Tag = NormValue::Tag;
    if (value.is_blank()) return {Tag::Blank, ""};
    if (value.is_ref()) return {Tag::Ref, std::to_string(value.ref)};
    const json& lit = value.literal;
    if (lit.is_boolean()) return {Tag::Bool, lit.get<bool>() ? "true" : "false"};
    if (lit.is_number_integer())
        return {Tag::Number, detail::canon_number(static_cast<double>(lit.get<int64_t>()))};
    if (lit.is_number_unsigned())
        return {Tag::Number, detail::canon_number(static_cast<double>(lit.get<uint64_t>()))};
    if (lit.is_number_float()) return {Tag::Number, detail::canon_number(lit.get<double>())};
    if (lit.is_string()) {
        std::string s = trim(lit.get_ref<const std::string&>());
        std::string lower = to_lower(s);
        if (lower == "true" || lower == "false") return {Tag::Bool, lower};
        double num = 0.0;
        if (detail::parse_full_number(s, num)) return {Tag::Number, detail::canon_number(num)};
        return {Tag::String, s};
    }
    return {Tag::Other, lit.dump()};
}

// Multiset matching. Tools: per-name min of predicted and gold occurrence
// counts. Parameters: per-(tool, parameter, normalized value) triple min.
// Both sides must already be canonical-renumbered so Ref indices compare.
inline MatchCounts match_instance(const CallSequence& pred, const CallSequence& gold) {
    MatchCounts counts;

    std::map<std::string, size_t> pred_names, gold_names;
    for (const auto& call : pred.calls) {
        pred_names[call.api] += 1;
        counts.predicted_tools += 1;
    }
    for (const auto& call : gold.calls) {
        gold_names[call.api] += 1;
        counts.gold_tools += 1;
    }
    for (const auto& [name, pcount] : pred_names) {
        auto it = gold_names.find(name);
        if (it != gold_names.end()) counts.correct_tools += std::min(pcount, it->second);
    }

    using Triple = std::tuple<std::string, std::string, NormValue>;
    std::map<Triple, size_t> pred_triples, gold_triples;
    for (const auto& call : pred.calls)
        for (const auto& [pname, value] : call.parameters) {
            pred_triples[{call.api, pname, normalize_value(value)}] += 1;
            counts.predicted_params += 1;
        }
    for (const auto& call : gold.calls)
        for (const auto& [pname, value] : call.parameters) {
            gold_triples[{call.api, pname, normalize_value(value)}] += 1;
            counts.gold_params += 1;
        }
    for (const auto& [triple, pcount] : pred_triples) {
        auto it = gold_triples.find(triple);
        if (it != gold_triples.end()) counts.correct_params += std::min(pcount, it->second);
    }
    return counts;
}

// ---------------------------------------------------------------------------
// Error taxonomy

namespace error_category {
inline constexpr std::string_view kMissedNotRetrieved = "MISSED_NOT_RETRIEVED";
inline constexpr std::string_view kMissedRetrieved = "MISSED_RETRIEVED";
inline constexpr std::string_view kHallucinated = "HALLUCINATED";
inline constexpr std::string_view kWrongSelection = "WRONG_SELECTION";
inline constexpr std::string_view kOmittedRequired = "OMITTED_REQUIRED";
inline constexpr std::string_view kOverfilledUnmentioned = "OVERFILLED_UNMENTIONED";
inline constexpr std::string_view kWrongValue = "WRONG_VALUE";
}  // namespace error_category

// Tool-side and parameter-side error counts for one instance. `pred` may be
// null (format failure): every gold tool then counts as missed. Tool-side
// categories work on distinct names; parameter-side categories pair calls of
// the same name in order of appearance.
inline std::map<std::string, size_t> classify_errors(const CallSequence* pred,
                                                     const CallSequence& gold,
                                                     const std::vector<std::string>& candidates) {
    std::map<std::string, size_t> counts;
    auto bump = [&counts](std::string_view category, size_t n = 1) {
        if (n) counts[std::string(category)] += n;
    };
    std::set<std::string> candidate_set(candidates.begin(), candidates.end());
    std::set<std::string> gold_set, pred_set;
    for (const auto& call : gold.calls) gold_set.insert(call.api);
    if (pred)
        for (const auto& call : pred->calls) pred_set.insert(call.api);

    for (const std::string& name : gold_set) {
        if (pred_set.contains(name)) continue;
        bump(candidate_set.contains(name) ? error_category::kMissedRetrieved
                                          : error_category::kMissedNotRetrieved);
    }
    for (const std::string& name : pred_set) {
        if (!candidate_set.contains(name)) bump(error_category::kHallucinated);
        else if (!gold_set.contains(name)) bump(error_category::kWrongSelection);
    }

    if (!pred) return counts;

    // Pair predicted calls with gold calls of the same name, in order.
    std::map<std::string, std::vector<const ToolCall*>> gold_by_name;
    for (const auto& call : gold.calls) gold_by_name[call.api].push_back(&call);
    std::map<std::string, size_t> used;
    for (const auto& pcall : pred->calls) {
        auto it = gold_by_name.find(pcall.api);
        if (it == gold_by_name.end()) continue;
        size_t& cursor = used[pcall.api];
        if (cursor >= it->second.size()) continue;
        const ToolCall& gcall = *it->second[cursor++];

        for (const auto& [pname, gvalue] : gcall.parameters) {
            const ParamValue* pvalue = pcall.find_parameter(pname);
            if (!pvalue) bump(error_category::kOmittedRequired);
            else if (normalize_value(*pvalue) != normalize_value(gvalue))
                bump(error_category::kWrongValue);
        }
        for (const auto& [pname, pvalue] : pcall.parameters)
            if (!gcall.find_parameter(pname)) bump(error_category::kOverfilledUnmentioned);
    }
    return counts;
}

// ---------------------------------------------------------------------------
// Corpus evaluation

struct MetricBlock {
    size_t instance_count = 0;
    size_t format_correct = 0;
    MatchCounts counts;
    double format_acc = 0.0;
    double tool_p = 0.0, tool_r = 0.0, tool_f1 = 0.0;
    double param_p = 0.0, param_r = 0.0, param_f1 = 0.0;

    void finalize() {
        auto ratio = [](size_t num, size_t den) {
            return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
        };
        auto f1 = [](double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); };
        format_acc = ratio(format_correct, instance_count);
        tool_p = ratio(counts.correct_tools, counts.predicted_tools);
        tool_r = ratio(counts.correct_tools, counts.gold_tools);
        tool_f1 = f1(tool_p, tool_r);
        param_p = ratio(counts.correct_params, counts.predicted_params);
        param_r = ratio(counts.correct_params, counts.gold_params);
        param_f1 = f1(param_p, param_r);
    }

    json to_json() const {
        return {{"instances", instance_count},
                {"format_acc", format_acc},
                {"tool", {{"p", tool_p}, {"r", tool_r}, {"f1", tool_f1}}},
                {"parameter", {{"p", param_p}, {"r", param_r}, {"f1", param_f1}}},
                {"counts",
                 {{"correct_tools", counts.correct_tools},
                  {"predicted_tools", counts.predicted_tools},
                  {"gold_tools", counts.gold_tools},
                  {"correct_params", counts.correct_params},
                  {"predicted_params", counts.predicted_params},
                  {"gold_params", counts.gold_params},
                  {"format_correct", format_correct}}}};
    }
};

struct EvalReport {
    MetricBlock overall;
    std::map<std::string, MetricBlock> splits;  // single, multiple, nested
    std::map<std::string, size_t> error_breakdown;
    json config = json::object();

    json to_json() const {
        json split_obj = json::object();
        for (const auto& [name, block] : splits) split_obj[name] = block.to_json();
        json errors = json::object();
        for (const auto& [category, count] : error_breakdown) errors[category] = count;
        return {{"overall", overall.to_json()},
                {"splits", std::move(split_obj)},
                {"error_breakdown", std::move(errors)},
                {"config", config}};
    }

    std::string to_markdown() const;
};

struct EvaluateOptions {
    // Strict format requires full schema and placeholder validity; non-strict
    // counts an output as format-correct once any JSON value was extracted.
    bool strict_format = true;
    // Retrieval candidates per instance id, enabling the error taxonomy.
    std::map<std::string, std::vector<std::string>> candidates;
};

// Micro-averaged corpus evaluation. Missing predictions count as format
// failures with empty sequences: full gold counts, zero predicted counts.
inline EvalReport evaluate_corpus(std::span<const Prediction> predictions,
                                  std::span<const Instance> gold,
                                  const EvaluateOptions& opts = {}) {
    std::unordered_map<std::string, const Instance*> gold_by_id;
    for (const Instance& instance : gold) gold_by_id[instance.id] = &instance;
    std::unordered_map<std::string, const Prediction*> pred_by_id;
    for (const Prediction& pred : predictions) {
        if (!gold_by_id.contains(pred.id))
            fail(ErrorCode::IdMismatch, "prediction id \"" + pred.id + "\" has no gold instance");
        if (!pred_by_id.emplace(pred.id, &pred).second)
            fail(ErrorCode::IdMismatch, "duplicate prediction id \"" + pred.id + "\"");
    }

    EvalReport report;
    MetricBlock& overall = report.overall;
    auto& splits = report.splits;
    splits["single"];
    splits["multiple"];
    splits["nested"];

    static const std::vector<std::string> no_candidates;
    for (const Instance& instance : gold) {
        const CallSequence gold_seq = canonical_renumber(instance.calling);

        bool format_ok = false;
        std::optional<CallSequence> pred_seq;
        auto found = pred_by_id.find(instance.id);
        if (found != pred_by_id.end()) {
            ParsedPrediction parsed = parse_prediction(found->second->raw_output);
            pred_seq = std::move(parsed.sequence);
            format_ok = opts.strict_format ? pred_seq.has_value() : parsed.json_found;
        }

        MatchCounts counts;
        if (pred_seq) {
            counts = match_instance(*pred_seq, gold_seq);
        } else {
            counts.gold_tools = gold_seq.calls.size();
            for (const auto& call : gold_seq.calls) counts.gold_params += call.parameters.size();
        }

        auto apply = [&](MetricBlock& block) {
            block.instance_count += 1;
            if (format_ok) block.format_correct += 1;
            block.counts.merge(counts);
        };
        apply(overall);
        apply(splits[instance.category == InstanceCategory::Single ? "single" : "multiple"]);
        if (instance.nested) apply(splits["nested"]);

        // The taxonomy needs retrieval context; with no candidates file at
        // all it would misread every prediction as hallucinated.
        if (!opts.candidates.empty()) {
            auto cand = opts.candidates.find(instance.id);
            const std::vector<std::string>& candidates =
                cand == opts.candidates.end() ? no_candidates : cand->second;
            for (const auto& [category, count] :
                 classify_errors(pred_seq ? &*pred_seq : nullptr, gold_seq, candidates))
                report.error_breakdown[category] += count;
        }
    }

    overall.finalize();
    for (auto& [name, block] : splits) block.finalize();
    report.config = {{"strict_format", opts.strict_format},
                     {"with_candidates", !opts.candidates.empty()}};
    return report;
}

inline std::string EvalReport::to_markdown() const {
    auto pct = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", v * 100.0);
        return std::string(buf);
    };
    std::string out;
    out += "| Split | Instances | Format ACC | Tool P | Tool R | Tool F1 | Param P | Param R | Param F1 |\n";
    out += "|---|---|---|---|---|---|---|---|---|\n";
    auto row = [&](const std::string& name, const MetricBlock& b) {
        out += "| " + name + " | " + std::to_string(b.instance_count) + " | " + pct(b.format_acc) +
               " | " + pct(b.tool_p) + " | " + pct(b.tool_r) + " | " + pct(b.tool_f1) + " | " +
               pct(b.param_p) + " | " + pct(b.param_r) + " | " + pct(b.param_f1) + " |\n";
    };
    row("overall", overall);
    for (const auto& [name, block] : splits) row(name, block);
    if (!error_breakdown.empty()) {
        out += "\n| Error category | Count |\n|---|---|\n";
        for (const auto& [category, count] : error_breakdown)
            out += "| " + category + " | " + std::to_string(count) + " |\n";
    }
    return out;
}

}  // namespace sealkit
