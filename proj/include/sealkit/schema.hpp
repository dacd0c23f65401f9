#pragma once

// Tool schema layer: the tool template type, the two-level field tree and
// the deduplicating tool pool, plus validation of raw tool JSON.
//
// Wire format for one tool (tools.jsonl, one object per line):
//   {"api_name": str, "api_description": str, "field": "field/subfield",
//    "parameters": {name: {"type": str, "description": str}},
//    "required": [names], "responses": {name: {"type", "description"}}}
// Unknown top-level keys are preserved opaquely and round-tripped.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "sealkit/errors.hpp"
#include "sealkit/text.hpp"

namespace sealkit {

using json = nlohmann::ordered_json;

enum class ParamType { String, Integer, Float, Boolean };

inline std::optional<ParamType> parse_param_type(std::string_view token) {
    if (token == "str") return ParamType::String;
    if (token == "int") return ParamType::Integer;
    if (token == "float") return ParamType::Float;
    if (token == "bool") return ParamType::Boolean;
    return std::nullopt;
}

constexpr std::string_view to_string(ParamType t) {
    switch (t) {
        case ParamType::String: return "str";
        case ParamType::Integer: return "int";
        case ParamType::Float: return "float";
        case ParamType::Boolean: return "bool";
    }
    return "str";
}

struct ParameterSpec {
    std::string name;
    ParamType kind = ParamType::String;
    std::string description;
    std::vector<std::string> example_values;  // parsed from a terminal "(e.g., ...)" clause

    bool operator==(const ParameterSpec&) const = default;
};

struct ResponseSpec {
    std::string name;
    ParamType kind = ParamType::String;
    std::string description;

    bool operator==(const ResponseSpec&) const = default;
};

// If `description` ends with a parenthesized example clause "(e.g., a, b, c)"
// (also accepted: "e.g. ,"; case-insensitive), returns the comma-split trimmed
// values with any trailing "..." token dropped. Anything else is prose: empty.
inline std::vector<std::string> extract_value_examples(std::string_view description) {
    std::string_view s = trim_view(description);
    if (s.empty() || s.back() != ')') return {};
    // Find the '(' matching the final ')'.
    int depth = 0;
    size_t open = std::string_view::npos;
    for (size_t i = s.size(); i-- > 0;) {
        if (s[i] == ')') ++depth;
        else if (s[i] == '(') {
            --depth;
            if (depth == 0) { open = i; break; }
        }
    }
    if (open == std::string_view::npos) return {};
    std::string_view clause = s.substr(open + 1, s.size() - open - 2);
    // Expect "e.g." + optional whitespace + "," at the head of the clause.
    std::string_view head = trim_view(clause);
    if (head.size() < 5) return {};
    const char e = ascii_lower(head[0]), g = ascii_lower(head[2]);
    if (e != 'e' || head[1] != '.' || g != 'g' || head[3] != '.') return {};
    size_t pos = 4;
    while (pos < head.size() && std::isspace(static_cast<unsigned char>(head[pos]))) ++pos;
    if (pos >= head.size() || head[pos] != ',') return {};
    std::string_view values = head.substr(pos + 1);
    // Split on commas at parenthesis depth 0 so nested parens stay balanced.
    std::vector<std::string> out;
    int d = 0;
    size_t start = 0;
    auto flush = [&](size_t end) {
        std::string item = trim(values.substr(start, end - start));
        if (!item.empty() && item.find("...") == std::string::npos) out.push_back(std::move(item));
    };
    for (size_t i = 0; i < values.size(); ++i) {
        if (values[i] == '(') ++d;
        else if (values[i] == ')') --d;
        else if (values[i] == ',' && d == 0) {
            flush(i);
            start = i + 1;
        }
    }
    flush(values.size());
    return out;
}

struct ToolSpec {
    std::string name;
    std::string description;
    std::string field_path;  // "field/subfield"
    std::vector<ParameterSpec> parameters;  // source order preserved
    std::vector<std::string> required;
    std::vector<ResponseSpec> responses;
    json extra = json::object();  // unrecognized top-level keys, kept verbatim

    const ParameterSpec* find_parameter(std::string_view pname) const {
        for (const auto& p : parameters)
            if (p.name == pname) return &p;
        return nullptr;
    }

    ParameterSpec* find_parameter(std::string_view pname) {
        for (auto& p : parameters)
            if (p.name == pname) return &p;
        return nullptr;
    }

    bool operator==(const ToolSpec&) const = default;
};

// Deterministic dedup key: lowercased name with non-alphanumerics stripped.
inline std::string canonical_key(std::string_view name) {
    std::string out;
    out.reserve(name.size());
    for (char c : name)
        if (ascii_alnum(c)) out.push_back(ascii_lower(c));
    return out;
}

inline std::string canonical_key(const ToolSpec& tool) { return canonical_key(tool.name); }

// ---------------------------------------------------------------------------
// Validation

struct Violation {
    std::string code;
    std::string detail;

    bool operator==(const Violation&) const = default;
};

struct ValidationReport {
    bool ok = true;
    std::vector<Violation> violations;

    void add(std::string_view code, std::string detail) {
        ok = false;
        violations.push_back({std::string(code), std::move(detail)});
    }

    bool has(std::string_view code) const {
        for (const auto& v : violations)
            if (v.code == code) return true;
        return false;
    }
};

namespace violation {
inline constexpr std::string_view kMissingKey = "MISSING_KEY";
inline constexpr std::string_view kWrongType = "WRONG_TYPE";
inline constexpr std::string_view kEmptyName = "EMPTY_NAME";
inline constexpr std::string_view kBadFieldPath = "BAD_FIELD_PATH";
inline constexpr std::string_view kUnknownParamType = "UNKNOWN_PARAM_TYPE";
inline constexpr std::string_view kDuplicateParam = "DUPLICATE_PARAM";
inline constexpr std::string_view kRequiredParamMissing = "REQUIRED_PARAM_MISSING";
inline constexpr std::string_view kEmptyResponses = "EMPTY_RESPONSES";
}  // namespace violation

struct ValidateOptions {
    bool allow_empty_responses = false;
};

// Checks every tool invariant against a structurally parsed JSON object and
// reports all failed rules, not just the first. Violations are data.
inline ValidationReport validate_tool(const json& raw, const ValidateOptions& opts = {}) {
    ValidationReport report;
    if (!raw.is_object()) {
        report.add(violation::kWrongType, "tool must be a JSON object");
        return report;
    }

    auto typed_member = [&](const char* key, json::value_t type, const char* type_name) -> const json* {
        auto it = raw.find(key);
        if (it == raw.end()) {
            report.add(violation::kMissingKey, std::string("missing \"") + key + "\"");
            return nullptr;
        }
        if (it->type() != type) {
            report.add(violation::kWrongType, std::string("\"") + key + "\" must be " + type_name);
            return nullptr;
        }
        return &*it;
    };

    const json* name = typed_member("api_name", json::value_t::string, "a string");
    typed_member("api_description", json::value_t::string, "a string");
    const json* field = typed_member("field", json::value_t::string, "a string");
    const json* params = typed_member("parameters", json::value_t::object, "an object");
    const json* required = typed_member("required", json::value_t::array, "an array");
    const json* responses = typed_member("responses", json::value_t::object, "an object");

    if (name && name->get_ref<const std::string&>().empty())
        report.add(violation::kEmptyName, "api_name is empty");

    if (field) {
        const std::string& f = field->get_ref<const std::string&>();
        size_t slash = f.find('/');
        bool good = slash != std::string::npos && slash > 0 && slash + 1 < f.size() &&
                    f.find('/', slash + 1) == std::string::npos;
        if (!good)
            report.add(violation::kBadFieldPath,
                       "field must be \"field/subfield\" with non-empty sides: \"" + f + "\"");
    }

    auto check_typed_map = [&](const json& obj, const char* where) {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (!it.value().is_object() || !it.value().contains("type") ||
                !it.value()["type"].is_string()) {
                report.add(violation::kWrongType,
                           std::string(where) + "." + it.key() + " needs a string \"type\"");
                continue;
            }
            std::string type = it.value()["type"].get<std::string>();
            if (!parse_param_type(type))
                report.add(violation::kUnknownParamType,
                           std::string(where) + "." + it.key() + " has type \"" + type + "\"");
            if (!it.value().contains("description") || !it.value()["description"].is_string())
                report.add(violation::kWrongType,
                           std::string(where) + "." + it.key() + " needs a string \"description\"");
        }
    };

    if (params) check_typed_map(*params, "parameters");
    if (responses) {
        check_typed_map(*responses, "responses");
        if (responses->empty() && !opts.allow_empty_responses)
            report.add(violation::kEmptyResponses, "tool declares no responses");
    }

    if (required && params) {
        for (const auto& entry : *required) {
            if (!entry.is_string()) {
                report.add(violation::kWrongType, "required entries must be strings");
                continue;
            }
            const std::string& rname = entry.get_ref<const std::string&>();
            if (!params->contains(rname))
                report.add(violation::kRequiredParamMissing,
                           "required parameter \"" + rname + "\" is not declared");
        }
    }
    return report;
}

// Parses a raw tool object into a ToolSpec. Assumes validate_tool passed;
// throws SCHEMA_ERROR on structure that cannot be represented at all.
inline ToolSpec parse_tool(const json& raw) {
    if (!raw.is_object()) fail(ErrorCode::SchemaError, "tool must be a JSON object");
    ToolSpec tool;
    auto need = [&](const char* key) -> const json& {
        auto it = raw.find(key);
        if (it == raw.end()) fail(ErrorCode::SchemaError, std::string("tool missing \"") + key + "\"");
        return *it;
    };
    tool.name = need("api_name").get<std::string>();
    tool.description = need("api_description").get<std::string>();
    tool.field_path = need("field").get<std::string>();
    const json& params = need("parameters");
    for (auto it = params.begin(); it != params.end(); ++it) {
        ParameterSpec p;
        p.name = it.key();
        auto kind = parse_param_type(it.value().value("type", ""));
        if (!kind) fail(ErrorCode::SchemaError, "parameter \"" + p.name + "\" has unknown type");
        p.kind = *kind;
        p.description = it.value().value("description", "");
        p.example_values = extract_value_examples(p.description);
        tool.parameters.push_back(std::move(p));
    }
    for (const auto& entry : need("required")) tool.required.push_back(entry.get<std::string>());
    const json& resp = need("responses");
    for (auto it = resp.begin(); it != resp.end(); ++it) {
        ResponseSpec r;
        r.name = it.key();
        auto kind = parse_param_type(it.value().value("type", ""));
        if (!kind) fail(ErrorCode::SchemaError, "response \"" + r.name + "\" has unknown type");
        r.kind = *kind;
        r.description = it.value().value("description", "");
        tool.responses.push_back(std::move(r));
    }
    static const char* known[] = {"api_name", "api_description", "field",
                                  "parameters", "required", "responses"};
    for (auto it = raw.begin(); it != raw.end(); ++it) {
        bool recognized = false;
        for (const char* k : known) recognized = recognized || it.key() == k;
        if (!recognized) tool.extra[it.key()] = it.value();
    }
    return tool;
}

inline json tool_to_json(const ToolSpec& tool) {
    json obj = json::object();
    obj["api_name"] = tool.name;
    obj["api_description"] = tool.description;
    obj["field"] = tool.field_path;
    json params = json::object();
    for (const auto& p : tool.parameters)
        params[p.name] = {{"type", std::string(to_string(p.kind))}, {"description", p.description}};
    obj["parameters"] = std::move(params);
    obj["required"] = tool.required;
    json resp = json::object();
    for (const auto& r : tool.responses)
        resp[r.name] = {{"type", std::string(to_string(r.kind))}, {"description", r.description}};
    obj["responses"] = std::move(resp);
    for (auto it = tool.extra.begin(); it != tool.extra.end(); ++it) obj[it.key()] = it.value();
    return obj;
}

// ---------------------------------------------------------------------------
// Field tree

struct FieldNode {
    std::string name;
    std::vector<std::string> subfields;

    bool operator==(const FieldNode&) const = default;
};

struct FieldTree {
    std::vector<FieldNode> fields;

    size_t subfield_count() const {
        size_t n = 0;
        for (const auto& f : fields) n += f.subfields.size();
        return n;
    }

    bool operator==(const FieldTree&) const = default;
};

// fields.json: {"fields":[{"name":..., "subfields":[...]}]}
inline json field_tree_to_json(const FieldTree& tree) {
    json arr = json::array();
    for (const auto& f : tree.fields)
        arr.push_back({{"name", f.name}, {"subfields", f.subfields}});
    return json{{"fields", std::move(arr)}};
}

inline FieldTree field_tree_from_json(const json& raw) {
    if (!raw.is_object() || !raw.contains("fields") || !raw["fields"].is_array())
        fail(ErrorCode::SchemaError, "fields.json must be {\"fields\": [...]}");
    FieldTree tree;
    for (const auto& f : raw["fields"]) {
        FieldNode node;
        node.name = f.at("name").get<std::string>();
        for (const auto& s : f.at("subfields")) node.subfields.push_back(s.get<std::string>());
        tree.fields.push_back(std::move(node));
    }
    return tree;
}

// ---------------------------------------------------------------------------
// Tool pool

enum class InsertOutcome { Added, Duplicate };

// Insertion-ordered collection of tools, deduplicated on canonical_key.
// Mutation follows a single-writer contract; reads are safe from any number
// of threads once a generation phase has quiesced.
class ToolPool {
public:
    InsertOutcome insert(ToolSpec tool) {
        std::string key = canonical_key(tool);
        if (by_key_.contains(key)) return InsertOutcome::Duplicate;
        size_t pos = tools_.size();
        by_key_.emplace(std::move(key), pos);
        by_name_.emplace(tool.name, pos);
        tools_.push_back(std::move(tool));
        return InsertOutcome::Added;
    }

    bool contains_key(std::string_view name) const {
        return by_key_.contains(canonical_key(name));
    }

    const ToolSpec* find_by_name(std::string_view name) const {
        auto it = by_name_.find(std::string(name));
        return it == by_name_.end() ? nullptr : &tools_[it->second];
    }

    ToolSpec* find_by_name(std::string_view name) {
        auto it = by_name_.find(std::string(name));
        return it == by_name_.end() ? nullptr : &tools_[it->second];
    }

    const std::vector<ToolSpec>& tools() const { return tools_; }
    std::vector<ToolSpec>& tools() { return tools_; }
    size_t size() const { return tools_.size(); }
    bool empty() const { return tools_.empty(); }

private:
    std::vector<ToolSpec> tools_;
    std::unordered_map<std::string, size_t> by_key_;
    std::unordered_map<std::string, size_t> by_name_;
};

inline InsertOutcome insert_tool(ToolPool& pool, ToolSpec tool) {
    return pool.insert(std::move(tool));
}

}  // namespace sealkit
