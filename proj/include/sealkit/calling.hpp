#pragma once

// Tool-calling sequences: blank templates with globally numbered
// `API_call_k` response placeholders, nested-reference validation and
// canonical renumbering.
//
// Wire shape (bit-exact keys):
//   [{"api": str, "parameters": {name: value}, "responses": ["API_call_0", ...]}, ...]
// A parameter value of "___" is a blank (templates only); a string matching
// `API_call_<k>` is a reference to an earlier call's response.

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "sealkit/schema.hpp"

namespace sealkit {

inline constexpr std::string_view kBlankMarker = "___";
inline constexpr std::string_view kPlaceholderPrefix = "API_call_";

inline std::string placeholder_label(int k) {
    return std::string(kPlaceholderPrefix) + std::to_string(k);
}

// Exact-match parse of `API_call_<k>`; anything else is nullopt.
inline std::optional<int> parse_placeholder(std::string_view s) {
    if (s.size() <= kPlaceholderPrefix.size() || s.substr(0, kPlaceholderPrefix.size()) != kPlaceholderPrefix)
        return std::nullopt;
    std::string_view digits = s.substr(kPlaceholderPrefix.size());
    long long value = 0;
    for (char c : digits) {
        if (c < '0' || c > '9') return std::nullopt;
        value = value * 10 + (c - '0');
        if (value > 1'000'000'000) fail(ErrorCode::PlaceholderSyntax, "placeholder index out of range: " + std::string(s));
    }
    return static_cast<int>(value);
}

struct ParamValue {
    enum class Kind { Literal, Blank, Ref };

    Kind kind = Kind::Blank;
    json literal;  // meaningful when kind == Literal
    int ref = -1;  // meaningful when kind == Ref

    static ParamValue blank() { return {}; }
    static ParamValue literal_of(json v) { return {Kind::Literal, std::move(v), -1}; }
    static ParamValue ref_to(int k) { return {Kind::Ref, json(), k}; }

    bool is_literal() const { return kind == Kind::Literal; }
    bool is_blank() const { return kind == Kind::Blank; }
    bool is_ref() const { return kind == Kind::Ref; }

    json to_json() const {
        switch (kind) {
            case Kind::Blank: return json(std::string(kBlankMarker));
            case Kind::Ref: return json(placeholder_label(ref));
            case Kind::Literal: return literal;
        }
        return json();
    }

    static ParamValue from_json(const json& v) {
        if (v.is_string()) {
            const std::string& s = v.get_ref<const std::string&>();
            if (s == kBlankMarker) return blank();
            if (auto k = parse_placeholder(s)) return ref_to(*k);
        }
        return literal_of(v);
    }

    bool operator==(const ParamValue&) const = default;
};

struct ToolCall {
    std::string api;
    std::vector<std::pair<std::string, ParamValue>> parameters;  // order preserved
    std::vector<int> responses;  // declared placeholder labels, in order

    const ParamValue* find_parameter(std::string_view name) const {
        for (const auto& [pname, value] : parameters)
            if (pname == name) return &value;
        return nullptr;
    }

    bool operator==(const ToolCall&) const = default;
};

struct CallSequence {
    std::vector<ToolCall> calls;

    bool empty() const { return calls.empty(); }
    size_t size() const { return calls.size(); }

    bool operator==(const CallSequence&) const = default;
};

// True iff any parameter value references an earlier call's response.
inline bool is_nested(const CallSequence& seq) {
    for (const auto& call : seq.calls)
        for (const auto& [name, value] : call.parameters)
            if (value.is_ref()) return true;
    return false;
}

// ---------------------------------------------------------------------------
// Serialization

inline json call_sequence_to_json(const CallSequence& seq) {
    json arr = json::array();
    for (const auto& call : seq.calls) {
        json obj = json::object();
        obj["api"] = call.api;
        json params = json::object();
        for (const auto& [name, value] : call.parameters) params[name] = value.to_json();
        obj["parameters"] = std::move(params);
        if (!call.responses.empty()) {
            json resp = json::array();
            for (int label : call.responses) resp.push_back(placeholder_label(label));
            obj["responses"] = std::move(resp);
        }
        arr.push_back(std::move(obj));
    }
    return arr;
}

// Parses the wire shape. Throws SCHEMA_ERROR with the path of the first
// offending element, or PLACEHOLDER_SYNTAX for malformed response labels.
// Unrecognized per-call keys are ignored; matching scores only api,
// parameters and responses.
inline CallSequence parse_call_sequence(const json& raw) {
    if (!raw.is_array()) fail(ErrorCode::SchemaError, "calling must be a JSON array");
    CallSequence seq;
    for (size_t i = 0; i < raw.size(); ++i) {
        const json& elem = raw[i];
        std::string at = "[" + std::to_string(i) + "]";
        if (!elem.is_object()) fail(ErrorCode::SchemaError, at + " must be an object");
        if (!elem.contains("api") || !elem["api"].is_string())
            fail(ErrorCode::SchemaError, at + ".api must be a string");
        if (!elem.contains("parameters") || !elem["parameters"].is_object())
            fail(ErrorCode::SchemaError, at + ".parameters must be an object");
        ToolCall call;
        call.api = elem["api"].get<std::string>();
        const json& params = elem["parameters"];
        for (auto it = params.begin(); it != params.end(); ++it)
            call.parameters.emplace_back(it.key(), ParamValue::from_json(it.value()));
        if (elem.contains("responses")) {
            if (!elem["responses"].is_array())
                fail(ErrorCode::SchemaError, at + ".responses must be an array");
            const json& resp = elem["responses"];
            for (size_t j = 0; j < resp.size(); ++j) {
                if (!resp[j].is_string())
                    fail(ErrorCode::SchemaError, at + ".responses[" + std::to_string(j) + "] must be a string");
                auto label = parse_placeholder(resp[j].get_ref<const std::string&>());
                if (!label)
                    fail(ErrorCode::PlaceholderSyntax,
                         at + ".responses[" + std::to_string(j) + "]: \"" +
                             resp[j].get<std::string>() + "\"");
                call.responses.push_back(*label);
            }
        }
        seq.calls.push_back(std::move(call));
    }
    return seq;
}

// ---------------------------------------------------------------------------
// Template construction

// One call per tool, in order: parameters are exactly the tool's required
// parameters set to blanks; response placeholders continue a global counter.
inline CallSequence build_template(std::span<const ToolSpec> tools) {
    if (tools.empty()) fail(ErrorCode::EmptySelection, "no tools selected for template");
    CallSequence seq;
    int counter = 0;
    for (const ToolSpec& tool : tools) {
        ToolCall call;
        call.api = tool.name;
        for (const std::string& rname : tool.required)
            call.parameters.emplace_back(rname, ParamValue::blank());
        for (size_t r = 0; r < tool.responses.size(); ++r) call.responses.push_back(counter++);
        seq.calls.push_back(std::move(call));
    }
    return seq;
}

inline CallSequence build_template(const std::vector<ToolSpec>& tools) {
    return build_template(std::span<const ToolSpec>(tools));
}

// ---------------------------------------------------------------------------
// Validation

namespace violation {
inline constexpr std::string_view kUnknownTool = "UNKNOWN_TOOL";
inline constexpr std::string_view kUnknownParam = "UNKNOWN_PARAM";
inline constexpr std::string_view kUnfilledBlank = "UNFILLED_BLANK";
inline constexpr std::string_view kPlaceholderNumbering = "PLACEHOLDER_NUMBERING";
inline constexpr std::string_view kForwardRefOnly = "FORWARD_REF_ONLY";
inline constexpr std::string_view kDanglingRef = "DANGLING_REF";
}  // namespace violation

enum class SequenceMode {
    Template,  // blanks are expected in required slots
    Instance,  // blanks are illegal anywhere
};

// Checks a sequence against the pool. Each failed rule is an independent
// violation: (a) known tools, (b) known parameters, (c) required parameters
// present (and filled, in instance mode), (d) placeholder numbering,
// (e) forward-only references.
inline ValidationReport validate_sequence(const CallSequence& seq, const ToolPool& pool,
                                          SequenceMode mode = SequenceMode::Instance) {
    ValidationReport report;
    for (size_t i = 0; i < seq.calls.size(); ++i) {
        const ToolCall& call = seq.calls[i];
        std::string at = "[" + std::to_string(i) + "] " + call.api;
        const ToolSpec* tool = pool.find_by_name(call.api);
        if (!tool) {
            report.add(violation::kUnknownTool, at + " is not in the pool");
            continue;
        }
        for (const auto& [pname, value] : call.parameters) {
            if (!tool->find_parameter(pname))
                report.add(violation::kUnknownParam, at + " has no parameter \"" + pname + "\"");
            if (mode == SequenceMode::Instance && value.is_blank())
                report.add(violation::kUnfilledBlank, at + " parameter \"" + pname + "\" is blank");
        }
        for (const std::string& rname : tool->required) {
            const ParamValue* value = call.find_parameter(rname);
            if (!value)
                report.add(violation::kRequiredParamMissing,
                           at + " is missing required parameter \"" + rname + "\"");
        }
    }

    // (d) labels must be exactly 0..m-1 in first-declaration order.
    std::vector<int> declared;
    for (const auto& call : seq.calls)
        for (int label : call.responses) declared.push_back(label);
    for (size_t i = 0; i < declared.size(); ++i) {
        if (declared[i] != static_cast<int>(i)) {
            report.add(violation::kPlaceholderNumbering,
                       "expected API_call_" + std::to_string(i) + ", found API_call_" +
                           std::to_string(declared[i]));
            break;
        }
    }

    // (e) references must target a placeholder declared by a strictly earlier call.
    std::unordered_map<int, size_t> declared_at;
    for (size_t i = 0; i < seq.calls.size(); ++i)
        for (int label : seq.calls[i].responses) declared_at.try_emplace(label, i);
    for (size_t i = 0; i < seq.calls.size(); ++i) {
        for (const auto& [pname, value] : seq.calls[i].parameters) {
            if (!value.is_ref()) continue;
            auto it = declared_at.find(value.ref);
            if (it == declared_at.end())
                report.add(violation::kDanglingRef,
                           "[" + std::to_string(i) + "] references undeclared API_call_" +
                               std::to_string(value.ref));
            else if (it->second >= i)
                report.add(violation::kForwardRefOnly,
                           "[" + std::to_string(i) + "] references API_call_" +
                               std::to_string(value.ref) + " declared by call " +
                               std::to_string(it->second));
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Canonical renumbering

// Relabels placeholders 0..m-1 in first-declaration order and rewrites
// references through the same relabeling, so predicted and gold indices are
// comparable. Idempotent. Throws DANGLING_REF for references to labels no
// call declares. A label declared twice keeps distinct new labels per
// declaration; references resolve to its first declaration.
inline CallSequence canonical_renumber(const CallSequence& seq) {
    CallSequence out = seq;
    std::unordered_map<int, int> first_seen;
    int next = 0;
    for (auto& call : out.calls) {
        for (int& label : call.responses) {
            int fresh = next++;
            first_seen.try_emplace(label, fresh);
            label = fresh;
        }
    }
    for (auto& call : out.calls) {
        for (auto& [name, value] : call.parameters) {
            if (!value.is_ref()) continue;
            auto it = first_seen.find(value.ref);
            if (it == first_seen.end())
                fail(ErrorCode::DanglingRef,
                     "reference to undeclared placeholder API_call_" + std::to_string(value.ref));
            value.ref = it->second;
        }
    }
    return out;
}

}  // namespace sealkit
