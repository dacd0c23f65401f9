#pragma once

// Job-level orchestration: configuration loading, stage execution with
// atomic outputs, and the evaluation job. One job per process invocation.

#include <filesystem>
#include <memory>
#include <optional>

#include "sealkit/backend.hpp"
#include "sealkit/evaluation.hpp"
#include "sealkit/generation.hpp"
#include "sealkit/io.hpp"
#include "sealkit/retrieval.hpp"
#include "sealkit/stats.hpp"

namespace sealkit {

struct BackendSection {
    std::string kind = "http";  // http | scripted
    BackendConfig http;
    std::filesystem::path script_path;
};

struct PathsSection {
    std::filesystem::path fields = "out/fields.json";
    std::filesystem::path tools = "out/tools.jsonl";
    std::filesystem::path instances = "out/instances.jsonl";
    std::filesystem::path manifest = "out/manifest.json";
    std::filesystem::path index = "out/index.json";
    std::filesystem::path predictions = "out/predictions.jsonl";
    std::filesystem::path candidates = "out/candidates.jsonl";
    std::filesystem::path report_json = "out/report.json";
    std::filesystem::path report_md = "out/report.md";
    std::filesystem::path prompts_dir = "prompts";
};

struct RetrieverSection {
    std::string kind = "bm25";  // bm25 | dense
    int k = 5;
    unsigned mask = field_mask::kAll;
    double k1 = 1.2;
    double b = 0.75;
    std::string dense_endpoint_url;  // used when kind == dense
    std::string dense_model_name;
};

struct GenerationSection {
    std::optional<uint64_t> rng_seed;  // mandatory for any stage that samples
    GenerationOptions options;
    std::vector<std::string> seed_fields;
    std::filesystem::path example_tool;      // shapes the tool prompt
    std::vector<std::string> single_tools;   // empty = every pool tool
    size_t single_limit = 0;                 // 0 = no cap
    size_t multi_count = 0;
    bool sequential_ids = true;
};

struct EvaluationSection {
    bool strict_format = true;
};

struct JobConfig {
    BackendSection backend;
    PathsSection paths;
    RetrieverSection retriever;
    GenerationSection generation;
    EvaluationSection evaluation;
    json raw = json::object();  // snapshot for manifests (never holds secrets)
};

inline JobConfig parse_job_config(const json& raw, const std::filesystem::path& base_dir = {}) {
    JobConfig cfg;
    cfg.raw = raw;
    auto resolve = [&base_dir](const std::string& p) -> std::filesystem::path {
        std::filesystem::path path(p);
        if (path.is_absolute() || base_dir.empty()) return path;
        return base_dir / path;
    };
    if (raw.contains("backend")) {
        const json& b = raw["backend"];
        cfg.backend.kind = b.value("kind", "http");
        cfg.backend.http.endpoint_url = b.value("endpoint_url", "");
        cfg.backend.http.model_name = b.value("model_name", "");
        cfg.backend.http.temperature = b.value("temperature", 0.7);
        cfg.backend.http.max_retries = b.value("max_retries", 3);
        cfg.backend.http.request_timeout =
            std::chrono::milliseconds(b.value("request_timeout_ms", 30000));
        cfg.backend.http.parallelism = b.value("parallelism", 4);
        cfg.backend.http.api_key_env = b.value("api_key_env", "LLM_API_KEY");
        cfg.backend.http.retry_base_delay =
            std::chrono::milliseconds(b.value("retry_base_delay_ms", 1000));
        cfg.backend.http.audit_log_path = b.value("audit_log", "");
        if (b.contains("script_path")) cfg.backend.script_path = resolve(b["script_path"]);
        if (cfg.backend.kind != "http" && cfg.backend.kind != "scripted")
            fail(ErrorCode::Config, "backend.kind must be http or scripted");
    }
    if (raw.contains("paths")) {
        const json& p = raw["paths"];
        auto get = [&](const char* key, std::filesystem::path& out) {
            if (p.contains(key)) out = resolve(p[key].get<std::string>());
        };
        get("fields", cfg.paths.fields);
        get("tools", cfg.paths.tools);
        get("instances", cfg.paths.instances);
        get("manifest", cfg.paths.manifest);
        get("index", cfg.paths.index);
        get("predictions", cfg.paths.predictions);
        get("candidates", cfg.paths.candidates);
        get("report_json", cfg.paths.report_json);
        get("report_md", cfg.paths.report_md);
        get("prompts_dir", cfg.paths.prompts_dir);
    }
    if (raw.contains("retriever")) {
        const json& r = raw["retriever"];
        cfg.retriever.kind = r.value("kind", "bm25");
        cfg.retriever.k = r.value("k", 5);
        cfg.retriever.mask = r.value("field_mask", field_mask::kAll);
        cfg.retriever.k1 = r.value("k1", 1.2);
        cfg.retriever.b = r.value("b", 0.75);
        cfg.retriever.dense_endpoint_url = r.value("endpoint_url", "");
        cfg.retriever.dense_model_name = r.value("model_name", "");
        if (cfg.retriever.kind != "bm25" && cfg.retriever.kind != "dense")
            fail(ErrorCode::Config, "retriever.kind must be bm25 or dense");
        if (cfg.retriever.k < 1) fail(ErrorCode::Config, "retriever.k must be >= 1");
    }
    if (raw.contains("generation")) {
        const json& g = raw["generation"];
        if (g.contains("rng_seed")) cfg.generation.rng_seed = g["rng_seed"].get<uint64_t>();
        cfg.generation.options.stall_limit = g.value("stall_limit", 3);
        cfg.generation.options.candidate_count = g.value("candidate_count", 14);
        cfg.generation.options.max_rounds_per_subfield = g.value("max_rounds_per_subfield", 0);
        cfg.generation.options.backfill_max_passes = g.value("backfill_max_passes", 2);
        cfg.generation.options.validate.allow_empty_responses =
            g.value("allow_empty_responses", false);
        if (g.contains("seed_fields"))
            cfg.generation.seed_fields = g["seed_fields"].get<std::vector<std::string>>();
        if (g.contains("example_tool")) cfg.generation.example_tool = resolve(g["example_tool"]);
        if (g.contains("single_tools"))
            cfg.generation.single_tools = g["single_tools"].get<std::vector<std::string>>();
        cfg.generation.single_limit = g.value("single_limit", 0);
        cfg.generation.multi_count = g.value("multi_count", 0);
    }
    if (raw.contains("evaluation"))
        cfg.evaluation.strict_format = raw["evaluation"].value("strict_format", true);
    return cfg;
}

inline JobConfig load_job_config(const std::filesystem::path& path) {
    json raw = read_json_file(path);
    if (!raw.is_object()) fail(ErrorCode::Config, "config must be a JSON object");
    return parse_job_config(raw, path.has_parent_path() ? path.parent_path()
                                                        : std::filesystem::path());
}

inline std::shared_ptr<ChatBackend> make_backend(const JobConfig& cfg) {
    if (cfg.backend.kind == "scripted") {
        if (cfg.backend.script_path.empty())
            fail(ErrorCode::Config, "scripted backend needs backend.script_path");
        auto backend = scripted_backend_from_json(read_json_file(cfg.backend.script_path));
        if (!cfg.backend.http.audit_log_path.empty())
            backend->set_audit_log(cfg.backend.http.audit_log_path);
        return backend;
    }
    return nullptr;  // http constructed by the caller that links http_backend.hpp
}

// ---------------------------------------------------------------------------
// Stage runners

inline void require_file(const std::filesystem::path& path, std::string_view what) {
    if (!std::filesystem::exists(path))
        fail(ErrorCode::MissingPrereq, std::string(what) + " not found: " + path.string());
}

inline Rng make_stage_rng(const JobConfig& cfg, std::string_view stage) {
    if (!cfg.generation.rng_seed)
        fail(ErrorCode::Config,
             std::string("generation.rng_seed is required for stage ") + std::string(stage));
    return Rng(*cfg.generation.rng_seed);
}

inline std::string format_sequence_id(std::string_view prefix, size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06zu", n);
    return std::string(prefix) + "_" + buf;
}

// Reads existing instances (if any) and merges the new batch by id, so a
// re-run of one stage replaces its own output instead of duplicating it.
inline void merge_instances_atomic(const std::filesystem::path& path,
                                   const std::vector<Instance>& fresh) {
    std::vector<json> records;
    std::set<std::string> fresh_ids;
    for (const Instance& inst : fresh) fresh_ids.insert(inst.id);
    if (std::filesystem::exists(path)) {
        for (const json& record : read_json_records(path)) {
            std::string id = record.value("id", "");
            if (!fresh_ids.contains(id)) records.push_back(record);
        }
    }
    for (const Instance& inst : fresh) records.push_back(instance_to_json(inst));
    write_jsonl_atomic(path, records);
}

inline void run_stage_fields(const JobConfig& cfg, ChatBackend& backend) {
    PromptTemplate field_tpl = load_prompt(cfg.paths.prompts_dir, "field");
    PromptTemplate subfield_tpl = load_prompt(cfg.paths.prompts_dir, "subfield");
    if (cfg.generation.seed_fields.empty())
        fail(ErrorCode::Config, "generation.seed_fields is required for stage fields");
    RunManifest manifest("fields");
    manifest.set_config(cfg.raw);
    FieldTree tree =
        generate_field_tree(backend, field_tpl, subfield_tpl, cfg.generation.seed_fields, manifest);
    write_json_atomic(cfg.paths.fields, field_tree_to_json(tree));
    write_json_atomic(cfg.paths.manifest, manifest.to_json());
}

inline void run_stage_tools(const JobConfig& cfg, ChatBackend& backend) {
    require_file(cfg.paths.fields, "fields.json");
    if (cfg.generation.example_tool.empty())
        fail(ErrorCode::Config, "generation.example_tool is required for stage tools");
    require_file(cfg.generation.example_tool, "example tool");
    FieldTree tree = field_tree_from_json(read_json_file(cfg.paths.fields));
    ToolSpec example = parse_tool(read_json_file(cfg.generation.example_tool));
    PromptTemplate tool_tpl = load_prompt(cfg.paths.prompts_dir, "tool");
    PromptTemplate backfill_tpl = load_prompt(cfg.paths.prompts_dir, "value_backfill");
    Rng rng = make_stage_rng(cfg, "tools");

    RunManifest manifest("tools");
    manifest.set_config(cfg.raw);
    ToolPool pool;
    generate_tools(backend, pool, tree, example, tool_tpl, cfg.generation.options, manifest);
    backfill_examples(backend, pool, backfill_tpl, rng, cfg.generation.options, &manifest);
    write_tool_pool_atomic(cfg.paths.tools, pool);
    write_json_atomic(cfg.paths.manifest, manifest.to_json());
}

inline void run_stage_single(const JobConfig& cfg, ChatBackend& backend) {
    require_file(cfg.paths.tools, "tools.jsonl");
    ToolPool pool = read_tool_pool(cfg.paths.tools);
    PromptTemplate single_tpl = load_prompt(cfg.paths.prompts_dir, "single_instance");
    Rng rng = make_stage_rng(cfg, "single");

    std::vector<const ToolSpec*> targets;
    if (cfg.generation.single_tools.empty()) {
        for (const ToolSpec& tool : pool.tools()) targets.push_back(&tool);
    } else {
        for (const std::string& name : cfg.generation.single_tools) {
            const ToolSpec* tool = pool.find_by_name(name);
            if (!tool) fail(ErrorCode::MissingPrereq, "tool \"" + name + "\" not in pool");
            targets.push_back(tool);
        }
    }
    if (cfg.generation.single_limit > 0 && targets.size() > cfg.generation.single_limit)
        targets.resize(cfg.generation.single_limit);

    RunManifest manifest("single");
    manifest.set_config(cfg.raw);
    std::vector<Instance> accepted;
    size_t counter = 0;
    for (const ToolSpec* tool : targets) {
        BatchCounters batch;
        batch.attempted = 1;
        std::map<std::string, std::string> chosen;
        bool has_values = true;
        for (const std::string& rname : tool->required) {
            const ParameterSpec* param = tool->find_parameter(rname);
            if (!param || param->example_values.empty()) {
                has_values = false;
                break;
            }
            chosen[rname] = param->example_values[rng.uniform(param->example_values.size())];
        }
        if (!has_values) {
            batch.rejected = 1;
            manifest.record_batch("single:" + tool->name + ":no_example_values", batch);
            continue;
        }
        try {
            Instance inst = generate_single_instance(backend, pool, *tool, chosen, single_tpl,
                                                     format_sequence_id("single", counter + 1));
            ++counter;
            batch.parsed = 1;
            batch.accepted = 1;
            accepted.push_back(std::move(inst));
        } catch (const QcError&) {
            batch.parsed = 1;
            batch.rejected = 1;
        }
        manifest.record_batch("single:" + tool->name, batch);
    }
    merge_instances_atomic(cfg.paths.instances, accepted);
    write_json_atomic(cfg.paths.manifest, manifest.to_json());
}

inline void run_stage_multi(const JobConfig& cfg, ChatBackend& backend) {
    require_file(cfg.paths.tools, "tools.jsonl");
    ToolPool pool = read_tool_pool(cfg.paths.tools);
    PromptTemplate combine_tpl = load_prompt(cfg.paths.prompts_dir, "combine");
    PromptTemplate fill_tpl = load_prompt(cfg.paths.prompts_dir, "fill");
    Rng rng = make_stage_rng(cfg, "multi");
    if (cfg.generation.multi_count == 0)
        fail(ErrorCode::Config, "generation.multi_count must be > 0 for stage multi");

    RunManifest manifest("multi");
    manifest.set_config(cfg.raw);
    std::vector<Instance> accepted;
    size_t counter = 0;
    for (size_t attempt = 0; attempt < cfg.generation.multi_count; ++attempt) {
        BatchCounters batch;
        batch.attempted = 1;
        try {
            Combination combo =
                combine_tools(backend, pool, cfg.generation.options.candidate_count, rng, combine_tpl);
            std::vector<ToolSpec> selected;
            for (const std::string& name : combo.selected)
                selected.push_back(*pool.find_by_name(name));
            CallSequence origin = build_template(selected);
            Instance inst = fill_template(backend, pool, selected, origin, fill_tpl,
                                          format_sequence_id("multi", counter + 1));
            ++counter;
            batch.parsed = 1;
            batch.accepted = 1;
            accepted.push_back(std::move(inst));
        } catch (const QcError&) {
            batch.rejected = 1;
        }
        manifest.record_batch("multi:attempt" + std::to_string(attempt + 1), batch);
    }
    merge_instances_atomic(cfg.paths.instances, accepted);
    write_json_atomic(cfg.paths.manifest, manifest.to_json());
}

// ---------------------------------------------------------------------------
// Evaluation job

inline std::vector<Instance> read_instances(const std::filesystem::path& path) {
    std::vector<Instance> out;
    for (const json& record : read_json_records(path)) out.push_back(instance_from_json(record));
    return out;
}

inline std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
    return predictions_from_records(read_json_records(path));
}

// candidates.jsonl: {"id": str, "candidates": [names]}
inline std::map<std::string, std::vector<std::string>> read_candidates(
    const std::filesystem::path& path) {
    std::map<std::string, std::vector<std::string>> out;
    for (const json& record : read_json_records(path)) {
        std::string id = record.value("id", "");
        if (id.empty()) fail(ErrorCode::SchemaError, "candidates record lacks an id");
        out[id] = record.value("candidates", std::vector<std::string>{});
    }
    return out;
}

struct EvaluationJobResult {
    EvalReport report;
};

inline EvaluationJobResult run_evaluation_job(const JobConfig& cfg) {
    require_file(cfg.paths.instances, "gold instances");
    require_file(cfg.paths.predictions, "predictions");
    std::vector<Instance> gold = read_instances(cfg.paths.instances);
    std::vector<Prediction> predictions = read_predictions(cfg.paths.predictions);
    EvaluateOptions opts;
    opts.strict_format = cfg.evaluation.strict_format;
    if (std::filesystem::exists(cfg.paths.candidates))
        opts.candidates = read_candidates(cfg.paths.candidates);
    EvaluationJobResult result{evaluate_corpus(predictions, gold, opts)};
    // Inference metadata written next to the predictions (prompt hash,
    // retriever settings) rides into the report for auditability.
    std::filesystem::path meta = cfg.paths.predictions;
    meta += ".meta.json";
    if (std::filesystem::exists(meta)) result.report.config["inference"] = read_json_file(meta);
    write_json_atomic(cfg.paths.report_json, result.report.to_json());
    write_text_atomic(cfg.paths.report_md, result.report.to_markdown());
    return result;
}

}  // namespace sealkit
