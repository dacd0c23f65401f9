#pragma once

// Instance: a user query paired with its gold calling sequence.
//
// instances.jsonl record:
//   {"id": str, "query": str, "calling": [...], "category": "single"|"multiple",
//    "nested": bool, "provenance": {...}}
// The reader also accepts records that spell the calling key "api_calling"
// and derives category/nested from the calling itself when the flags are
// absent, so externally produced corpora can be ingested for stats and eval.

#include <string>
#include <vector>

#include "sealkit/calling.hpp"

namespace sealkit {

enum class InstanceCategory { Single, Multiple };

constexpr std::string_view to_string(InstanceCategory c) {
    return c == InstanceCategory::Single ? "single" : "multiple";
}

struct Instance {
    std::string id;
    std::string query;
    CallSequence calling;
    InstanceCategory category = InstanceCategory::Single;
    bool nested = false;
    json provenance = json::object();

    bool operator==(const Instance&) const = default;
};

inline json instance_to_json(const Instance& inst) {
    json obj = json::object();
    obj["id"] = inst.id;
    obj["query"] = inst.query;
    obj["calling"] = call_sequence_to_json(inst.calling);
    obj["category"] = std::string(to_string(inst.category));
    obj["nested"] = inst.nested;
    obj["provenance"] = inst.provenance;
    return obj;
}

inline Instance instance_from_json(const json& raw) {
    if (!raw.is_object()) fail(ErrorCode::SchemaError, "instance must be a JSON object");
    Instance inst;
    inst.id = raw.value("id", "");
    inst.query = raw.value("query", "");
    const json* calling = nullptr;
    if (raw.contains("calling")) calling = &raw["calling"];
    else if (raw.contains("api_calling")) calling = &raw["api_calling"];
    if (!calling) fail(ErrorCode::SchemaError, "instance \"" + inst.id + "\" has no calling");
    inst.calling = parse_call_sequence(*calling);
    if (raw.contains("category") && raw["category"].is_string()) {
        const std::string& c = raw["category"].get_ref<const std::string&>();
        if (c == "single") inst.category = InstanceCategory::Single;
        else if (c == "multiple") inst.category = InstanceCategory::Multiple;
        else fail(ErrorCode::SchemaError, "instance \"" + inst.id + "\" has category \"" + c + "\"");
        bool single_ok = inst.category == InstanceCategory::Single && inst.calling.size() == 1;
        bool multiple_ok = inst.category == InstanceCategory::Multiple && inst.calling.size() >= 2;
        if (!single_ok && !multiple_ok)
            fail(ErrorCode::SchemaError, "instance \"" + inst.id + "\" declares category " + c +
                                             " but has " + std::to_string(inst.calling.size()) +
                                             " calls");
    } else {
        inst.category = inst.calling.size() <= 1 ? InstanceCategory::Single
                                                 : InstanceCategory::Multiple;
    }
    if (raw.contains("nested") && raw["nested"].is_boolean()) {
        inst.nested = raw["nested"].get<bool>();
        if (inst.nested != is_nested(inst.calling))
            fail(ErrorCode::SchemaError, "instance \"" + inst.id +
                                             "\" nested flag contradicts its calling");
    } else {
        inst.nested = is_nested(inst.calling);
    }
    if (raw.contains("provenance")) inst.provenance = raw["provenance"];
    return inst;
}

}  // namespace sealkit
