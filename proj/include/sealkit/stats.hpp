#pragma once

// Corpus statistics over a tool pool and (optionally) its instances.

#include <map>
#include <span>

#include "sealkit/instance.hpp"
#include "sealkit/schema.hpp"

namespace sealkit {

struct InstanceStats {
    size_t total = 0;
    size_t single = 0;
    size_t multiple = 0;
    size_t nested = 0;
};

struct StatsReport {
    size_t tool_count = 0;
    double avg_required = 0.0;
    std::map<size_t, size_t> required_histogram;  // required-count -> number of tools
    double zero_required_fraction = 0.0;
    std::optional<InstanceStats> instances;

    json to_json() const {
        json obj = json::object();
        obj["tool_count"] = tool_count;
        obj["avg_required"] = avg_required;
        json hist = json::object();
        for (const auto& [count, tools] : required_histogram)
            hist[std::to_string(count)] = tools;
        obj["required_histogram"] = std::move(hist);
        obj["zero_required_fraction"] = zero_required_fraction;
        if (instances) {
            obj["instances"] = {{"total", instances->total},
                                {"single", instances->single},
                                {"multiple", instances->multiple},
                                {"nested", instances->nested}};
        }
        return obj;
    }
};

inline StatsReport pool_stats(const ToolPool& pool,
                              std::span<const Instance> instances = {}) {
    if (pool.empty()) fail(ErrorCode::EmptyPool, "cannot compute stats on an empty pool");
    StatsReport report;
    report.tool_count = pool.size();
    size_t required_total = 0, zero_required = 0;
    for (const ToolSpec& tool : pool.tools()) {
        size_t n = tool.required.size();
        required_total += n;
        report.required_histogram[n] += 1;
        if (n == 0) ++zero_required;
    }
    report.avg_required = static_cast<double>(required_total) / static_cast<double>(pool.size());
    report.zero_required_fraction =
        static_cast<double>(zero_required) / static_cast<double>(pool.size());
    if (!instances.empty()) {
        InstanceStats is;
        is.total = instances.size();
        for (const Instance& inst : instances) {
            if (inst.category == InstanceCategory::Single) ++is.single;
            else ++is.multiple;
            if (inst.nested) ++is.nested;
        }
        report.instances = is;
    }
    return report;
}

}  // namespace sealkit
