// sealkit: corpus synthesis and benchmark CLI for LLM tool calling.
//
// Subcommands: gen fields|tools|single|multi, qc, stats, index, retrieve,
// eval, infer. Configuration comes from one JSON file plus flag overrides;
// secrets only via environment variables.
//
// Exit codes: 0 ok, 2 config error, 3 prerequisite missing, 4 backend
// exhausted, 5 validation hard-failure, 1 anything else.

#include <CLI11.hpp>

#include <iostream>

#include "sealkit/embedding.hpp"
#include "sealkit/evaluation.hpp"
#include "sealkit/generation.hpp"
#include "sealkit/http_backend.hpp"
#include "sealkit/io.hpp"
#include "sealkit/pipeline.hpp"
#include "sealkit/retrieval.hpp"
#include "sealkit/stats.hpp"

namespace {

using namespace sealkit;

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::Config:
        case ErrorCode::Precondition:
            return 2;
        case ErrorCode::MissingPrereq:
            return 3;
        case ErrorCode::BackendExhausted:
        case ErrorCode::ScriptExhausted:
        case ErrorCode::ScriptMiss:
        case ErrorCode::EmbedBackendDown:
            return 4;
        default:
            return 5;
    }
}

void emit_error(std::string_view code, const std::string& message) {
    json err = {{"error", {{"code", std::string(code)}, {"message", message}}}};
    std::cerr << err.dump() << "\n";
}

std::shared_ptr<ChatBackend> build_backend(const JobConfig& cfg) {
    if (auto scripted = make_backend(cfg)) return scripted;
    return std::make_shared<HttpBackend>(cfg.backend.http);
}

Retriever build_retriever(const JobConfig& cfg, const ToolPool& pool,
                          std::unique_ptr<ToolIndex>& index_holder,
                          std::unique_ptr<DenseRetriever>& dense_holder,
                          std::unique_ptr<EmbeddingClient>& client_holder) {
    if (cfg.retriever.kind == "dense") {
        EmbeddingEndpointConfig endpoint;
        endpoint.endpoint_url = cfg.retriever.dense_endpoint_url;
        endpoint.model_name = cfg.retriever.dense_model_name;
        client_holder = std::make_unique<HttpEmbeddingClient>(endpoint);
        dense_holder = std::make_unique<DenseRetriever>(*client_holder, pool, cfg.retriever.mask);
        return dense_holder->as_retriever();
    }
    index_holder = std::make_unique<ToolIndex>(
        ToolIndex::build(pool, cfg.retriever.mask, cfg.retriever.k1, cfg.retriever.b));
    return bm25_retriever(*index_holder);
}

struct StatsArgs {
    std::string tools_path;
    std::vector<std::string> instance_paths;
    std::string out_path;
};

int run_stats(const StatsArgs& args) {
    require_file(args.tools_path, "tools file");
    ToolPool pool = read_tool_pool(args.tools_path);
    std::vector<Instance> instances;
    for (const std::string& path : args.instance_paths) {
        require_file(path, "instances file");
        for (Instance& inst : read_instances(path)) instances.push_back(std::move(inst));
    }
    StatsReport report = pool_stats(pool, instances);
    json out = report.to_json();
    std::cout << out.dump(2) << "\n";
    if (!args.out_path.empty()) write_json_atomic(args.out_path, out);
    return 0;
}

struct QcArgs {
    std::string tools_path;
    std::string instances_path;
    std::string out_path;
};

int run_qc(const QcArgs& args) {
    require_file(args.tools_path, "tools file");
    require_file(args.instances_path, "instances file");
    ToolPool pool = read_tool_pool(args.tools_path);
    std::vector<Instance> instances = read_instances(args.instances_path);
    std::vector<json> findings;
    size_t failed = 0;
    for (const Instance& inst : instances) {
        ValidationReport report = qc_instance(inst, pool);
        if (report.ok) continue;
        ++failed;
        json violations = json::array();
        for (const auto& v : report.violations)
            violations.push_back({{"code", v.code}, {"detail", v.detail}});
        findings.push_back({{"id", inst.id}, {"violations", std::move(violations)}});
    }
    json summary = {{"instances", instances.size()},
                    {"passed", instances.size() - failed},
                    {"failed", failed}};
    std::cout << summary.dump(2) << "\n";
    for (const json& finding : findings) std::cerr << finding.dump() << "\n";
    if (!args.out_path.empty()) write_jsonl_atomic(args.out_path, findings);
    return failed == 0 ? 0 : 5;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"corpus synthesis and benchmark toolkit for LLM tool calling"};
    app.require_subcommand(1);

    std::string config_path;

    // --- gen ---------------------------------------------------------------
    CLI::App* gen = app.add_subcommand("gen", "run a generation stage");
    gen->require_subcommand(1);
    gen->add_option("--config", config_path, "job config JSON")->required();
    uint64_t seed_override = 0;
    bool have_seed_override = false;
    gen->add_option_function<uint64_t>(
           "--seed", [&](uint64_t v) { seed_override = v; have_seed_override = true; },
           "override generation.rng_seed");
    CLI::App* gen_fields = gen->add_subcommand("fields", "generate the field tree");
    CLI::App* gen_tools = gen->add_subcommand("tools", "generate the tool pool");
    CLI::App* gen_single = gen->add_subcommand("single", "generate single-tool instances");
    CLI::App* gen_multi = gen->add_subcommand("multi", "generate multiple-tool instances");

    // --- stats ---------------------------------------------------------------
    StatsArgs stats_args;
    CLI::App* stats = app.add_subcommand("stats", "corpus statistics and reconciliation");
    stats->add_option("--tools", stats_args.tools_path, "tools file (JSONL or JSON array)")
        ->required();
    stats->add_option("--instances", stats_args.instance_paths,
                      "instance file(s), repeatable");
    stats->add_option("--out", stats_args.out_path, "also write the stats JSON here");

    // --- qc ------------------------------------------------------------------
    QcArgs qc_args;
    CLI::App* qc = app.add_subcommand("qc", "re-run the QC gate over an instances file");
    qc->add_option("--tools", qc_args.tools_path, "tools file")->required();
    qc->add_option("--instances", qc_args.instances_path, "instances file")->required();
    qc->add_option("--out", qc_args.out_path, "write violations JSONL here");

    // --- index ---------------------------------------------------------------
    std::string index_tools, index_out = "index.json";
    unsigned index_mask = field_mask::kAll;
    double index_k1 = 1.2, index_b = 0.75;
    CLI::App* index_cmd = app.add_subcommand("index", "build and persist a BM25 index");
    index_cmd->add_option("--tools", index_tools, "tools file")->required();
    index_cmd->add_option("--out", index_out, "index output path");
    index_cmd->add_option("--field-mask", index_mask, "1=name 2=description 4=param descriptions");
    index_cmd->add_option("--k1", index_k1, "BM25 k1");
    index_cmd->add_option("--b", index_b, "BM25 b");

    // --- retrieve --------------------------------------------------------------
    std::string ret_tools, ret_index, ret_query, ret_instances, ret_out;
    std::string ret_endpoint, ret_model;
    int ret_k = 5;
    bool ret_recall = false, ret_include_gold = false, ret_dense = false;
    CLI::App* retrieve = app.add_subcommand("retrieve", "rank candidate tools for queries");
    retrieve->add_option("--tools", ret_tools, "tools file (builds a fresh index)");
    retrieve->add_option("--index", ret_index, "persisted index.json");
    retrieve->add_option("--query", ret_query, "one-off query");
    retrieve->add_option("--instances", ret_instances, "rank for every instance in this file");
    retrieve->add_option("-k,--k", ret_k, "candidates per query");
    retrieve->add_flag("--recall", ret_recall, "also report recall@k over the instances");
    retrieve->add_flag("--include-gold", ret_include_gold,
                       "union gold tools into each candidate list (train-split export)");
    retrieve->add_flag("--dense", ret_dense, "use the embedding service instead of BM25");
    retrieve->add_option("--endpoint", ret_endpoint, "embedding endpoint URL (with --dense)");
    retrieve->add_option("--model", ret_model, "embedding model name (with --dense)");
    retrieve->add_option("--out", ret_out, "write candidates JSONL here");

    // --- eval ------------------------------------------------------------------
    std::string eval_gold, eval_pred, eval_candidates;
    std::string eval_report_json = "report.json", eval_report_md = "report.md";
    bool eval_lenient = false;
    CLI::App* eval_cmd = app.add_subcommand("eval", "score predictions against gold instances");
    eval_cmd->add_option("--gold", eval_gold, "gold instances file")->required();
    eval_cmd->add_option("--predictions", eval_pred, "predictions JSONL")->required();
    eval_cmd->add_option("--candidates", eval_candidates, "per-instance candidates JSONL");
    eval_cmd->add_option("--report-json", eval_report_json, "report JSON path");
    eval_cmd->add_option("--report-md", eval_report_md, "report markdown path");
    eval_cmd->add_flag("--lenient-format", eval_lenient,
                       "count format accuracy at JSON-extraction level only");

    // --- infer -----------------------------------------------------------------
    std::string infer_config, infer_gold, infer_tools, infer_out, infer_cand_out, infer_prompts;
    int infer_k = 5;
    CLI::App* infer = app.add_subcommand("infer", "run subject-model inference over gold queries");
    infer->add_option("--config", infer_config, "job config JSON (backend + retriever)")->required();
    infer->add_option("--gold", infer_gold, "gold instances file")->required();
    infer->add_option("--tools", infer_tools, "tools file")->required();
    infer->add_option("-k,--k", infer_k, "retrieved candidates per query (0 = use config)");
    infer->add_option("--out", infer_out, "predictions output path");
    infer->add_option("--candidates-out", infer_cand_out, "candidates output path");
    infer->add_option("--prompts-dir", infer_prompts, "override prompts directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            JobConfig cfg = load_job_config(config_path);
            if (have_seed_override) cfg.generation.rng_seed = seed_override;
            std::shared_ptr<ChatBackend> backend = build_backend(cfg);
            if (gen_fields->parsed()) run_stage_fields(cfg, *backend);
            else if (gen_tools->parsed()) run_stage_tools(cfg, *backend);
            else if (gen_single->parsed()) run_stage_single(cfg, *backend);
            else if (gen_multi->parsed()) run_stage_multi(cfg, *backend);
            return 0;
        }
        if (stats->parsed()) return run_stats(stats_args);
        if (qc->parsed()) return run_qc(qc_args);

        if (index_cmd->parsed()) {
            require_file(index_tools, "tools file");
            ToolPool pool = read_tool_pool(index_tools);
            ToolIndex index = ToolIndex::build(pool, index_mask, index_k1, index_b);
            write_json_atomic(index_out, index.to_json());
            std::cout << json{{"documents", index.documents().size()},
                              {"avg_len", index.avg_len()}}
                             .dump()
                      << "\n";
            return 0;
        }

        if (retrieve->parsed()) {
            if (ret_query.empty() && ret_instances.empty())
                fail(ErrorCode::Config, "retrieve needs --query or --instances");
            ToolPool pool;
            std::unique_ptr<ToolIndex> index;
            std::unique_ptr<HttpEmbeddingClient> client;
            std::unique_ptr<DenseRetriever> dense;
            Retriever retriever;
            auto scored_search = [&](const std::string& query, int k) {
                return dense ? dense->search(query, k) : index->search(query, k);
            };
            if (ret_dense) {
                require_file(ret_tools, "tools file");
                pool = read_tool_pool(ret_tools);
                EmbeddingEndpointConfig endpoint;
                endpoint.endpoint_url = ret_endpoint;
                endpoint.model_name = ret_model;
                client = std::make_unique<HttpEmbeddingClient>(endpoint);
                dense = std::make_unique<DenseRetriever>(*client, pool);
                retriever = dense->as_retriever();
            } else if (!ret_index.empty()) {
                require_file(ret_index, "index file");
                index = std::make_unique<ToolIndex>(ToolIndex::from_json(read_json_file(ret_index)));
                retriever = bm25_retriever(*index);
            } else {
                require_file(ret_tools, "tools file");
                pool = read_tool_pool(ret_tools);
                index = std::make_unique<ToolIndex>(ToolIndex::build(pool));
                retriever = bm25_retriever(*index);
            }
            std::vector<json> records;
            if (!ret_query.empty()) {
                json hits = json::array();
                for (const ScoredTool& hit : scored_search(ret_query, ret_k))
                    hits.push_back({{"tool", hit.tool_name}, {"score", hit.score}});
                records.push_back({{"query", ret_query}, {"candidates", std::move(hits)}});
            }
            if (!ret_instances.empty()) {
                require_file(ret_instances, "instances file");
                std::vector<Instance> instances = read_instances(ret_instances);
                for (const Instance& inst : instances) {
                    std::vector<std::string> names = retriever(inst.query, ret_k);
                    if (ret_include_gold) {
                        for (const auto& call : inst.calling.calls) {
                            if (std::find(names.begin(), names.end(), call.api) == names.end())
                                names.push_back(call.api);
                        }
                    }
                    records.push_back({{"id", inst.id}, {"candidates", names}});
                }
                if (ret_recall) {
                    if (pool.empty()) {
                        if (ret_tools.empty())
                            fail(ErrorCode::Config, "--recall needs --tools to verify gold tools");
                        require_file(ret_tools, "tools file");
                        pool = read_tool_pool(ret_tools);
                    }
                    double recall = recall_at_k(retriever, instances, ret_k, pool);
                    std::cout << json{{"recall_at_k", recall}, {"k", ret_k}}.dump() << "\n";
                }
            }
            for (const json& record : records)
                if (ret_out.empty()) std::cout << record.dump() << "\n";
            if (!ret_out.empty()) write_jsonl_atomic(ret_out, records);
            return 0;
        }

        if (eval_cmd->parsed()) {
            JobConfig cfg;
            cfg.paths.instances = eval_gold;
            cfg.paths.predictions = eval_pred;
            cfg.paths.candidates = eval_candidates.empty() ? "/nonexistent" : eval_candidates;
            cfg.paths.report_json = eval_report_json;
            cfg.paths.report_md = eval_report_md;
            cfg.evaluation.strict_format = !eval_lenient;
            EvaluationJobResult result = run_evaluation_job(cfg);
            std::cout << result.report.to_markdown();
            return 0;
        }

        if (infer->parsed()) {
            JobConfig cfg = load_job_config(infer_config);
            if (!infer_prompts.empty()) cfg.paths.prompts_dir = infer_prompts;
            if (infer_k > 0) cfg.retriever.k = infer_k;
            if (!infer_out.empty()) cfg.paths.predictions = infer_out;
            if (!infer_cand_out.empty()) cfg.paths.candidates = infer_cand_out;
            require_file(infer_gold, "gold instances");
            require_file(infer_tools, "tools file");
            ToolPool pool = read_tool_pool(infer_tools);
            std::vector<Instance> gold = read_instances(infer_gold);
            std::shared_ptr<ChatBackend> backend = build_backend(cfg);
            PromptTemplate prompt = load_prompt(cfg.paths.prompts_dir, "inference");

            std::unique_ptr<ToolIndex> index;
            std::unique_ptr<DenseRetriever> dense;
            std::unique_ptr<EmbeddingClient> client;
            Retriever retriever = build_retriever(cfg, pool, index, dense, client);

            std::vector<json> predictions, candidates;
            for (const Instance& inst : gold) {
                std::vector<std::string> names = retriever(inst.query, cfg.retriever.k);
                json tool_list = json::array();
                for (const std::string& name : names)
                    tool_list.push_back(tool_to_json(*pool.find_by_name(name)));
                CompletionRecord record =
                    backend->complete(prompt.fill({tool_list.dump(), inst.query}));
                predictions.push_back({{"id", inst.id}, {"output", record.response}});
                candidates.push_back({{"id", inst.id}, {"candidates", names}});
            }
            write_jsonl_atomic(cfg.paths.predictions, predictions);
            write_jsonl_atomic(cfg.paths.candidates, candidates);
            json manifest = {{"instances", gold.size()},
                             {"k", cfg.retriever.k},
                             {"retriever", cfg.retriever.kind},
                             {"prompt_template", prompt.name()},
                             {"prompt_hash", fnv1a64_hex(prompt.body())},
                             {"backend", backend->id()}};
            std::filesystem::path meta = cfg.paths.predictions;
            meta += ".meta.json";
            write_json_atomic(meta, manifest);
            std::cout << manifest.dump(2) << "\n";
            return 0;
        }
    } catch (const Error& e) {
        emit_error(to_string(e.code()), e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        emit_error("INTERNAL", e.what());
        return 1;
    }
    return 0;
}
