#pragma once

// Three-stage self-instruct pipeline: fields, tools, instances. Prompts are
// external template files; every reply goes through extraction, validation
// and a lexical QC gate before anything is accepted. With a scripted backend
// and a fixed seed the whole pipeline is byte-reproducible.

#include <algorithm>
#include <ctime>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "sealkit/backend.hpp"
#include "sealkit/calling.hpp"
#include "sealkit/extract.hpp"
#include "sealkit/instance.hpp"
#include "sealkit/prompt_template.hpp"
#include "sealkit/rng.hpp"
#include "sealkit/schema.hpp"

namespace sealkit {

// ---------------------------------------------------------------------------
// Run manifest

struct BatchCounters {
    size_t attempted = 0;
    size_t parsed = 0;
    size_t deduped = 0;
    size_t rejected = 0;
    size_t accepted = 0;

    void merge(const BatchCounters& other) {
        attempted += other.attempted;
        parsed += other.parsed;
        deduped += other.deduped;
        rejected += other.rejected;
        accepted += other.accepted;
    }

    json to_json() const {
        return {{"attempted", attempted},
                {"parsed", parsed},
                {"deduped", deduped},
                {"rejected", rejected},
                {"accepted", accepted}};
    }
};

inline std::string iso8601_utc_now() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Counters for one generation run. Timestamps are isolated to a single
// manifest field so golden comparisons can drop exactly one key.
class RunManifest {
public:
    explicit RunManifest(std::string stage) : stage_(std::move(stage)) {
        started_ = iso8601_utc_now();
    }

    void set_config(json snapshot) { config_ = std::move(snapshot); }

    void record_batch(std::string context, const BatchCounters& counters) {
        json record = counters.to_json();
        record["context"] = std::move(context);
        batches_.push_back(std::move(record));
        totals_.merge(counters);
    }

    // Backfill counts parameters, not stage items; it gets its own section so
    // stage totals keep one unit.
    void record_backfill(std::string context, const BatchCounters& counters) {
        json record = counters.to_json();
        record["context"] = std::move(context);
        backfill_batches_.push_back(std::move(record));
        backfill_totals_.merge(counters);
    }

    void record_stall(const std::string& subfield_path) { stalls_[subfield_path] += 1; }

    void note(const std::string& message) { notes_.push_back(message); }

    const BatchCounters& totals() const { return totals_; }

    json to_json() const {
        json stalls = json::object();
        for (const auto& [path, count] : stalls_) stalls[path] = count;
        json obj = json::object();
        obj["stage"] = stage_;
        obj["config"] = config_;
        obj["batches"] = batches_;
        obj["stalls"] = std::move(stalls);
        obj["totals"] = totals_.to_json();
        if (!backfill_batches_.empty()) {
            obj["backfill"] = {{"batches", backfill_batches_},
                               {"totals", backfill_totals_.to_json()}};
        }
        obj["notes"] = notes_;
        obj["timestamps"] = {{"started", started_}, {"finished", iso8601_utc_now()}};
        return obj;
    }

private:
    std::string stage_;
    json config_ = json::object();
    std::vector<json> batches_;
    std::vector<json> backfill_batches_;
    std::map<std::string, size_t> stalls_;
    std::vector<std::string> notes_;
    BatchCounters totals_;
    BatchCounters backfill_totals_;
    std::string started_;
};

// ---------------------------------------------------------------------------
// QC gate

namespace violation {
inline constexpr std::string_view kEmptyQuery = "EMPTY_QUERY";
inline constexpr std::string_view kValueNotMentioned = "VALUE_NOT_MENTIONED";
inline constexpr std::string_view kApiNameLeak = "API_NAME_LEAK";
inline constexpr std::string_view kParseFailed = "PARSE_FAILED";
inline constexpr std::string_view kUnknownSelection = "UNKNOWN_SELECTION";
inline constexpr std::string_view kTooFewSelected = "TOO_FEW_SELECTED";
inline constexpr std::string_view kNoExampleValues = "NO_EXAMPLE_VALUES";
inline constexpr std::string_view kCategoryMismatch = "CATEGORY_MISMATCH";
}  // namespace violation

class QcError : public Error {
public:
    explicit QcError(ValidationReport report)
        : Error(ErrorCode::QcRejected, summarize(report)), report_(std::move(report)) {}

    const ValidationReport& report() const { return report_; }

private:
    static std::string summarize(const ValidationReport& report) {
        std::string out;
        for (const auto& v : report.violations) {
            if (!out.empty()) out += ", ";
            out += v.code;
        }
        return out.empty() ? "instance rejected" : out;
    }

    ValidationReport report_;
};

[[noreturn]] inline void qc_reject(std::string_view code, std::string detail) {
    ValidationReport report;
    report.add(code, std::move(detail));
    throw QcError(std::move(report));
}

// Text a literal must be findable as in the query: strings verbatim, numbers
// by their decimal rendering, booleans as true/false.
inline std::string mention_text(const json& literal) {
    if (literal.is_string()) return literal.get<std::string>();
    return literal.dump();
}

// Lexical and structural acceptance checks for a generated instance:
// (a) the calling validates against the pool in instance mode, (b) for
// multiple-tool instances every literal parameter value is mentioned in the
// query (case-insensitive, after whitespace collapsing; reference
// placeholders are exempt), (c) no called tool's name appears in the query,
// (d) the query is non-empty. The mention rule is scoped to multiple-tool
// instances: the single-tool demonstration pairs themselves paraphrase
// values (dates, source languages), so a lexical check there would reject
// the very outputs the prompt demonstrates.
inline ValidationReport qc_instance(const Instance& instance, const ToolPool& pool) {
    ValidationReport report = validate_sequence(instance.calling, pool, SequenceMode::Instance);
    if (trim_view(instance.query).empty()) {
        report.add(violation::kEmptyQuery, "query is empty");
        return report;
    }
    std::string query_folded = collapse_whitespace(instance.query);
    bool check_mentions = instance.category == InstanceCategory::Multiple;
    for (const auto& call : instance.calling.calls) {
        if (check_mentions) {
            for (const auto& [pname, value] : call.parameters) {
                if (!value.is_literal()) continue;
                std::string needle = collapse_whitespace(mention_text(value.literal));
                if (needle.empty()) continue;
                if (!contains_ci(query_folded, needle))
                    report.add(violation::kValueNotMentioned,
                               call.api + "." + pname + " value \"" + needle + "\" not in query");
            }
        }
        if (contains_ci(query_folded, call.api))
            report.add(violation::kApiNameLeak, "query mentions \"" + call.api + "\"");
    }
    return report;
}

// ---------------------------------------------------------------------------
// Options and prompt set

struct GenerationOptions {
    int stall_limit = 3;        // consecutive zero-new rounds before switching subfield
    int candidate_count = 14;   // tools offered to the combination prompt
    int max_rounds_per_subfield = 0;  // 0 = stop on stall only
    int backfill_max_passes = 2;
    ValidateOptions validate;
};

struct PromptSet {
    PromptTemplate field;
    PromptTemplate subfield;
    PromptTemplate tool;
    PromptTemplate single_instance;
    PromptTemplate combine;
    PromptTemplate fill;
    PromptTemplate value_backfill;

    static PromptSet load(const std::filesystem::path& dir) {
        return {load_prompt(dir, "field"),  load_prompt(dir, "subfield"),
                load_prompt(dir, "tool"),   load_prompt(dir, "single_instance"),
                load_prompt(dir, "combine"), load_prompt(dir, "fill"),
                load_prompt(dir, "value_backfill")};
    }
};

// ---------------------------------------------------------------------------
// Stage 1: fields

// One field-list call, then one subfield call per field. Replies are parsed
// as python-style list literals and deduplicated case-insensitively.
inline FieldTree generate_field_tree(ChatBackend& backend, const PromptTemplate& field_tpl,
                                     const PromptTemplate& subfield_tpl,
                                     std::span<const std::string> seed_fields,
                                     RunManifest& manifest) {
    std::vector<std::string> seeds(seed_fields.begin(), seed_fields.end());
    std::string reply = backend.complete(field_tpl.fill(seeds)).response;
    std::vector<std::string> raw_fields = parse_list_literal(reply);

    FieldTree tree;
    std::set<std::string> seen;
    BatchCounters fields_batch;
    fields_batch.attempted = raw_fields.empty() ? 1 : raw_fields.size();
    for (const std::string& name : raw_fields) {
        if (name.empty()) continue;
        ++fields_batch.parsed;
        if (!seen.insert(to_lower(name)).second) {
            ++fields_batch.deduped;
            continue;
        }
        tree.fields.push_back({name, {}});
        ++fields_batch.accepted;
    }
    manifest.record_batch("fields", fields_batch);
    if (tree.fields.empty()) fail(ErrorCode::EmptyTree, "no fields parsed from reply");

    for (FieldNode& field : tree.fields) {
        std::string sub_reply = backend.complete(subfield_tpl.fill({field.name})).response;
        std::vector<std::string> raw_subs = parse_list_literal(sub_reply);
        BatchCounters batch;
        batch.attempted = raw_subs.empty() ? 1 : raw_subs.size();
        std::set<std::string> sub_seen;
        for (const std::string& name : raw_subs) {
            if (name.empty()) continue;
            ++batch.parsed;
            if (!sub_seen.insert(to_lower(name)).second) {
                ++batch.deduped;
                continue;
            }
            field.subfields.push_back(name);
            ++batch.accepted;
        }
        manifest.record_batch("subfields:" + field.name, batch);
    }
    return tree;
}

// ---------------------------------------------------------------------------
// Stage 2: tools

inline std::pair<std::string, std::string> split_field_path(const std::string& field_path) {
    size_t slash = field_path.find('/');
    if (slash == std::string::npos) return {field_path, ""};
    return {field_path.substr(0, slash), field_path.substr(slash + 1)};
}

// Per subfield: prompt, parse the reply's tool JSON, validate, insert.
// A round that adds nothing new increments the stall counter; stall_limit
// consecutive stalls advance to the next subfield. Malformed tool objects
// are counted and skipped, never fatal.
inline void generate_tools(ChatBackend& backend, ToolPool& pool, const FieldTree& tree,
                           const ToolSpec& example_tool, const PromptTemplate& tool_tpl,
                           const GenerationOptions& opts, RunManifest& manifest) {
    if (tree.fields.empty()) fail(ErrorCode::EmptyTree, "field tree is empty");
    auto [example_field, example_subfield] = split_field_path(example_tool.field_path);
    std::string example_json = tool_to_json(example_tool).dump();

    for (const FieldNode& field : tree.fields) {
        for (const std::string& subfield : field.subfields) {
            std::string path = field.name + "/" + subfield;
            int stall = 0, round = 0;
            while (stall < opts.stall_limit &&
                   (opts.max_rounds_per_subfield == 0 || round < opts.max_rounds_per_subfield)) {
                ++round;
                std::string prompt = tool_tpl.fill(
                    {example_field, example_subfield, example_json, field.name, subfield});
                std::string reply = backend.complete(prompt).response;

                BatchCounters batch;
                std::vector<json> items;
                try {
                    json payload = extract_first_json(reply);
                    if (payload.is_array())
                        for (auto& elem : payload) items.push_back(std::move(elem));
                    else
                        items.push_back(std::move(payload));
                } catch (const Error&) {
                    batch.attempted = 1;  // a reply that yielded nothing is one failed item
                }

                for (json& item : items) {
                    ++batch.attempted;
                    if (!item.is_object()) continue;
                    ++batch.parsed;
                    item["field"] = path;  // stamp the subfield being prompted
                    ValidationReport report = validate_tool(item, opts.validate);
                    if (!report.ok) {
                        ++batch.rejected;
                        continue;
                    }
                    if (pool.insert(parse_tool(item)) == InsertOutcome::Added)
                        ++batch.accepted;
                    else
                        ++batch.deduped;
                }

                manifest.record_batch(path + ":round" + std::to_string(round), batch);
                if (batch.accepted == 0) {
                    ++stall;
                    manifest.record_stall(path);
                } else {
                    stall = 0;
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Value backfill

inline constexpr std::string_view kSensitiveKeywords[] = {"phone", "email"};

inline bool is_sensitive_param(std::string_view name, std::string_view keyword) {
    return contains_ci(name, keyword);
}

inline std::string rule_email_value(Rng& rng) {
    static constexpr std::string_view domains[] = {"example.com", "example.org", "example.net"};
    size_t letters = 5 + rng.uniform(4);  // 5..8
    size_t digits = rng.uniform(4);       // 0..3
    std::string out;
    for (size_t i = 0; i < letters; ++i) out.push_back(static_cast<char>('a' + rng.uniform(26)));
    for (size_t i = 0; i < digits; ++i) out.push_back(static_cast<char>('0' + rng.uniform(10)));
    out.push_back('@');
    out += domains[rng.uniform(3)];
    return out;
}

inline std::string rule_phone_value(Rng& rng) {
    auto block = [&](size_t n) {
        std::string s;
        for (size_t i = 0; i < n; ++i) s.push_back(static_cast<char>('0' + rng.uniform(10)));
        return s;
    };
    return "+1-" + block(3) + "-" + block(3) + "-" + block(4);
}

// Appends a terminal example clause so extract_value_examples round-trips.
// Values that would break the clause grammar (commas, parens) are dropped.
inline bool apply_example_values(ParameterSpec& param, const std::vector<std::string>& values) {
    std::vector<std::string> safe;
    for (const std::string& v : values) {
        std::string t = trim(v);
        if (t.empty() || t == "...") continue;
        if (t.find_first_of(",()") != std::string::npos) continue;
        safe.push_back(std::move(t));
    }
    if (safe.empty()) return false;
    std::string clause = " (e.g., ";
    for (size_t i = 0; i < safe.size(); ++i) {
        if (i) clause += ", ";
        clause += safe[i];
    }
    clause += ")";
    param.description += clause;
    param.example_values = extract_value_examples(param.description);
    return true;
}

// Ensures every required parameter carries at least one example value.
// Sensitive categories (matched by parameter-name keyword) are filled by
// seeded rule generators; the rest are batched by parameter name and filled
// with one ICL call per batch. Still-empty parameters after the configured
// number of passes raise BACKFILL_INCOMPLETE.
inline void backfill_examples(ChatBackend& backend, ToolPool& pool,
                              const PromptTemplate& backfill_tpl, Rng& rng,
                              const GenerationOptions& opts, RunManifest* manifest = nullptr) {
    auto collect_missing = [&pool]() {
        std::vector<std::pair<size_t, std::string>> missing;  // (tool index, param name)
        const auto& tools = pool.tools();
        for (size_t t = 0; t < tools.size(); ++t)
            for (const std::string& rname : tools[t].required) {
                const ParameterSpec* p = tools[t].find_parameter(rname);
                if (p && p->example_values.empty()) missing.emplace_back(t, rname);
            }
        return missing;
    };

    for (int pass = 0; pass < opts.backfill_max_passes; ++pass) {
        auto missing = collect_missing();
        if (missing.empty()) break;

        // Rule-backed sensitive values first.
        std::vector<std::pair<size_t, std::string>> remaining;
        for (const auto& [t, pname] : missing) {
            ParameterSpec* param = pool.tools()[t].find_parameter(pname);
            std::string value;
            if (is_sensitive_param(pname, kSensitiveKeywords[0])) value = rule_phone_value(rng);
            else if (is_sensitive_param(pname, kSensitiveKeywords[1])) value = rule_email_value(rng);
            if (!value.empty()) apply_example_values(*param, {value});
            else remaining.emplace_back(t, pname);
        }

        // Batch the rest by parameter name; one ICL call per category.
        std::vector<std::string> order;
        std::map<std::string, std::vector<std::pair<size_t, std::string>>> categories;
        for (const auto& entry : remaining) {
            std::string category = to_lower(entry.second);
            if (!categories.contains(category)) order.push_back(category);
            categories[category].push_back(entry);
        }
        for (const std::string& category : order) {
            const auto& members = categories[category];
            const ParameterSpec* sample =
                pool.tools()[members.front().first].find_parameter(members.front().second);
            std::string reply =
                backend.complete(backfill_tpl.fill({category, sample->description})).response;
            std::vector<std::string> values = parse_list_literal(reply);
            BatchCounters batch;
            batch.attempted = members.size();
            batch.parsed = values.empty() ? 0 : members.size();
            for (const auto& [t, pname] : members) {
                ParameterSpec* param = pool.tools()[t].find_parameter(pname);
                if (!values.empty() && apply_example_values(*param, values)) ++batch.accepted;
            }
            batch.rejected = batch.attempted - batch.accepted;
            if (manifest) manifest->record_backfill(category, batch);
        }
    }

    auto still_missing = collect_missing();
    if (!still_missing.empty()) {
        std::string detail;
        for (const auto& [t, pname] : still_missing) {
            if (!detail.empty()) detail += ", ";
            detail += pool.tools()[t].name + "." + pname;
        }
        fail(ErrorCode::BackfillIncomplete, detail);
    }
}

// ---------------------------------------------------------------------------
// Stage 3: instances

// Builds the single-call JSON, asks for a task description, extracts the
// bracketed text and assembles a single-tool instance. Throws QcError when
// the QC gate rejects the result.
inline Instance generate_single_instance(ChatBackend& backend, const ToolPool& pool,
                                         const ToolSpec& tool,
                                         const std::map<std::string, std::string>& chosen_values,
                                         const PromptTemplate& single_tpl, std::string id) {
    for (const std::string& rname : tool.required)
        if (!chosen_values.contains(rname))
            fail(ErrorCode::Precondition, "no chosen value for required parameter \"" + rname + "\"");

    ToolCall call;
    call.api = tool.name;
    for (const std::string& rname : tool.required)
        call.parameters.emplace_back(rname, ParamValue::literal_of(json(chosen_values.at(rname))));
    CallSequence calling;
    calling.calls.push_back(call);

    json calling_json = json::object();
    calling_json["api"] = call.api;
    json params = json::object();
    for (const auto& [pname, value] : call.parameters) params[pname] = value.to_json();
    calling_json["parameters"] = std::move(params);

    std::string reply = backend.complete(single_tpl.fill({calling_json.dump()})).response;
    auto description = extract_bracketed_text(reply);
    if (!description || description->empty())
        qc_reject(violation::kEmptyQuery, "reply carried no task description");

    Instance instance;
    instance.id = std::move(id);
    instance.query = *description;
    instance.calling = std::move(calling);
    instance.category = InstanceCategory::Single;
    instance.nested = false;
    instance.provenance = {{"field", tool.field_path},
                           {"template", single_tpl.name()},
                           {"backend", backend.id()}};

    ValidationReport report = qc_instance(instance, pool);
    if (!report.ok) throw QcError(std::move(report));
    return instance;
}

struct Combination {
    std::vector<std::string> selected;   // tool names, in execution order
    std::string task_sketch;             // the combination prompt's own description
    std::vector<std::string> candidates; // what was offered, for provenance
};

// Python-repr style {'name': 'description'} list, as the combination prompt expects.
inline std::string render_candidate_list(std::span<const ToolSpec* const> candidates) {
    auto quote = [](const std::string& s) {
        std::string out = "'";
        for (char c : s) {
            if (c == '\\' || c == '\'') out.push_back('\\');
            out.push_back(c);
        }
        out += "'";
        return out;
    };
    std::string out = "[";
    for (size_t i = 0; i < candidates.size(); ++i) {
        if (i) out += ", ";
        out += "{" + quote(candidates[i]->name) + ": " + quote(candidates[i]->description) + "}";
    }
    out += "]";
    return out;
}

// Samples candidate tools (seeded, uniform, without replacement), asks the
// model to select a combinable subset, and checks the selection: at least two
// names, all of them among the candidates.
inline Combination combine_tools(ChatBackend& backend, const ToolPool& pool, int candidate_count,
                                 Rng& rng, const PromptTemplate& combine_tpl) {
    if (candidate_count < 2) fail(ErrorCode::Config, "candidate_count must be >= 2");
    if (pool.size() < static_cast<size_t>(candidate_count))
        fail(ErrorCode::Precondition, "pool smaller than candidate_count");

    std::vector<size_t> picks = rng.sample_indices(pool.size(), static_cast<size_t>(candidate_count));
    std::vector<const ToolSpec*> candidates;
    candidates.reserve(picks.size());
    for (size_t idx : picks) candidates.push_back(&pool.tools()[idx]);

    std::string reply =
        backend.complete(combine_tpl.fill({render_candidate_list(candidates)})).response;

    std::vector<std::string> selected = parse_list_literal(reply);
    if (selected.size() < 2)
        qc_reject(violation::kTooFewSelected,
                  "selection has " + std::to_string(selected.size()) + " names");

    Combination result;
    for (const auto* tool : candidates) result.candidates.push_back(tool->name);
    for (const std::string& name : selected) {
        bool known = std::find(result.candidates.begin(), result.candidates.end(), name) !=
                     result.candidates.end();
        if (!known) qc_reject(violation::kUnknownSelection, "\"" + name + "\" is not a candidate");
    }
    result.selected = std::move(selected);

    // The task sketch is the next string-list literal after the selection.
    ListLiteral selection = find_list_literal(reply);
    ListLiteral sketch = find_list_literal(reply, selection.end);
    if (sketch.found && !sketch.items.empty()) result.task_sketch = sketch.items.front();
    return result;
}

// Prompts with the full tool JSON plus the blanked template, parses the
// improved calling and the task description, and assembles a multiple-tool
// instance. One retry on parse failure, then QC rejection.
inline Instance fill_template(ChatBackend& backend, const ToolPool& pool,
                              std::span<const ToolSpec> tools, const CallSequence& origin,
                              const PromptTemplate& fill_tpl, std::string id) {
    json api_list = json::array();
    for (const ToolSpec& tool : tools) api_list.push_back(tool_to_json(tool));
    std::string origin_json = call_sequence_to_json(origin).dump();
    std::string prompt = fill_tpl.fill({api_list.dump(), origin_json});

    CallSequence improved;
    std::string query;
    bool parsed = false;
    for (int attempt = 0; attempt < 2 && !parsed; ++attempt) {
        std::string reply = backend.complete(prompt).response;
        try {
            JsonRegion region = extract_first_json_region(reply);
            if (!region.value.is_array())
                fail(ErrorCode::SchemaError, "improved calling must be an array");
            improved = parse_call_sequence(region.value);
            auto described = parse_list_literal_after(reply, region.end);
            query = described.empty() ? "" : described.front();
            parsed = true;
        } catch (const Error&) {
            if (attempt == 1) qc_reject(violation::kParseFailed, "reply did not parse after retry");
        }
    }

    for (const auto& call : improved.calls)
        for (const auto& [pname, value] : call.parameters)
            if (value.is_blank())
                qc_reject(violation::kUnfilledBlank, call.api + "." + pname + " left blank");
    if (trim_view(query).empty()) qc_reject(violation::kEmptyQuery, "no task description in reply");
    if (improved.calls.size() < 2)
        qc_reject(violation::kCategoryMismatch, "multiple-tool instance needs at least two calls");

    Instance instance;
    instance.id = std::move(id);
    instance.query = query;
    instance.calling = std::move(improved);
    instance.category = InstanceCategory::Multiple;
    instance.nested = is_nested(instance.calling);
    json tool_names = json::array();
    for (const ToolSpec& tool : tools) tool_names.push_back(tool.name);
    instance.provenance = {{"tools", std::move(tool_names)},
                           {"template", fill_tpl.name()},
                           {"backend", backend.id()}};

    ValidationReport report = qc_instance(instance, pool);
    if (!report.ok) throw QcError(std::move(report));
    return instance;
}

}  // namespace sealkit
