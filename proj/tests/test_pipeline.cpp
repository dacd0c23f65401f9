#include <gtest/gtest.h>

#include <filesystem>

#include "sealkit/pipeline.hpp"

using namespace sealkit;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = fs::path(SEALKIT_FIXTURE_DIR) / "golden";
const fs::path kPrompts = SEALKIT_PROMPTS_DIR;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("sealkit_pipe_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

json base_config(const fs::path& out_dir, const std::string& script) {
    return {{"backend", {{"kind", "scripted"}, {"script_path", (kFixtures / script).string()}}},
            {"paths",
             {{"fields", (out_dir / "fields.json").string()},
              {"tools", (out_dir / "tools.jsonl").string()},
              {"instances", (out_dir / "instances.jsonl").string()},
              {"manifest", (out_dir / "manifest.json").string()},
              {"prompts_dir", kPrompts.string()}}},
            {"generation",
             {{"rng_seed", 20240601},
              {"stall_limit", 1},
              {"candidate_count", 6},
              {"seed_fields", json::array({"Science", "Healthcare"})},
              {"example_tool", (kFixtures / "example_tool.json").string()},
              {"single_tools", json::array({"checkTrafficConditions", "getTaxiFare"})},
              {"multi_count", 1}}}};
}

// Runs fields -> tools -> single -> multi against the scripted transcripts.
void run_full_pipeline(const fs::path& out_dir) {
    {
        JobConfig cfg = parse_job_config(base_config(out_dir, "fields_script.json"));
        auto backend = make_backend(cfg);
        run_stage_fields(cfg, *backend);
    }
    {
        JobConfig cfg = parse_job_config(base_config(out_dir, "tools_script.json"));
        auto backend = make_backend(cfg);
        run_stage_tools(cfg, *backend);
    }
    {
        JobConfig cfg = parse_job_config(base_config(out_dir, "single_script.json"));
        auto backend = make_backend(cfg);
        run_stage_single(cfg, *backend);
    }
    {
        JobConfig cfg = parse_job_config(base_config(out_dir, "multi_script.json"));
        auto backend = make_backend(cfg);
        run_stage_multi(cfg, *backend);
    }
}

}  // namespace

TEST(Pipeline, FieldsStageWritesTree) {
    TempDir tmp;
    JobConfig cfg = parse_job_config(base_config(tmp.path, "fields_script.json"));
    auto backend = make_backend(cfg);
    run_stage_fields(cfg, *backend);
    FieldTree tree = field_tree_from_json(read_json_file(tmp.path / "fields.json"));
    ASSERT_EQ(tree.fields.size(), 2u);
    EXPECT_EQ(tree.fields[0].name, "Food");
    EXPECT_EQ(tree.fields[1].subfields, (std::vector<std::string>{"Traffic", "Taxi"}));
}

TEST(Pipeline, ToolsStageNeedsFields) {
    TempDir tmp;
    JobConfig cfg = parse_job_config(base_config(tmp.path, "tools_script.json"));
    auto backend = make_backend(cfg);
    try {
        run_stage_tools(cfg, *backend);
        FAIL() << "expected MISSING_PREREQ";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingPrereq);
    }
}

TEST(Pipeline, SeedIsMandatoryForSamplingStages) {
    TempDir tmp;
    json raw = base_config(tmp.path, "single_script.json");
    raw["generation"].erase("rng_seed");
    JobConfig cfg = parse_job_config(raw);
    auto backend = make_backend(cfg);
    write_text_atomic(tmp.path / "tools.jsonl", "");
    try {
        run_stage_single(cfg, *backend);
        FAIL() << "expected CONFIG_ERROR";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Config);
    }
}

TEST(Pipeline, FullScriptedRunProducesExpectedCorpus) {
    TempDir tmp;
    run_full_pipeline(tmp.path);

    ToolPool pool = read_tool_pool(tmp.path / "tools.jsonl");
    EXPECT_EQ(pool.size(), 6u);
    for (const char* name : {"searchRestaurant", "bookTable", "checkTrafficConditions",
                             "getTrafficCameras", "callTaxi", "getTaxiFare"})
        EXPECT_NE(pool.find_by_name(name), nullptr) << name;

    // Backfill left every required parameter with at least one example value.
    for (const ToolSpec& tool : pool.tools())
        for (const std::string& rname : tool.required)
            EXPECT_FALSE(tool.find_parameter(rname)->example_values.empty())
                << tool.name << "." << rname;

    std::vector<Instance> instances = read_instances(tmp.path / "instances.jsonl");
    ASSERT_EQ(instances.size(), 3u);
    EXPECT_EQ(instances[0].id, "single_000001");
    EXPECT_EQ(instances[1].id, "single_000002");
    EXPECT_EQ(instances[2].id, "multi_000001");
    EXPECT_EQ(instances[2].category, InstanceCategory::Multiple);
    EXPECT_TRUE(instances[2].nested);
    const ParamValue* loc = instances[2].calling.calls[1].find_parameter("location");
    ASSERT_NE(loc, nullptr);
    EXPECT_TRUE(loc->is_ref());
    EXPECT_EQ(loc->ref, 0);

    // Every accepted instance passes the QC gate with zero violations.
    for (const Instance& inst : instances) {
        ValidationReport report = qc_instance(inst, pool);
        EXPECT_TRUE(report.ok) << inst.id;
    }

    // Manifest bookkeeping from the multi stage.
    json manifest = read_json_file(tmp.path / "manifest.json");
    EXPECT_EQ(manifest["stage"], "multi");
    EXPECT_EQ(manifest["totals"]["accepted"], 1);
}

TEST(Pipeline, ScriptedRunsAreByteIdentical) {
    // The corpus files carry no paths, so they agree even across different
    // output directories.
    TempDir a, b;
    run_full_pipeline(a.path);
    run_full_pipeline(b.path);
    for (const char* name : {"fields.json", "tools.jsonl", "instances.jsonl"}) {
        EXPECT_EQ(read_text_file(a.path / name), read_text_file(b.path / name)) << name;
    }
    // Re-running the identical configuration reproduces everything,
    // manifest included, modulo the single timestamps field.
    json first_manifest = read_json_file(a.path / "manifest.json");
    std::string first_instances = read_text_file(a.path / "instances.jsonl");
    run_full_pipeline(a.path);
    EXPECT_EQ(read_text_file(a.path / "instances.jsonl"), first_instances);
    json second_manifest = read_json_file(a.path / "manifest.json");
    first_manifest.erase("timestamps");
    second_manifest.erase("timestamps");
    EXPECT_EQ(first_manifest.dump(), second_manifest.dump());
}

TEST(Pipeline, RerunOfOneStageReplacesItsInstances) {
    TempDir tmp;
    run_full_pipeline(tmp.path);
    std::string before = read_text_file(tmp.path / "instances.jsonl");
    // Re-run the single stage with a fresh scripted backend: ids repeat, so
    // the merge replaces rather than duplicates.
    JobConfig cfg = parse_job_config(base_config(tmp.path, "single_script.json"));
    auto backend = make_backend(cfg);
    run_stage_single(cfg, *backend);
    std::vector<Instance> instances = read_instances(tmp.path / "instances.jsonl");
    EXPECT_EQ(instances.size(), 3u);
    // The multi instance written earlier is still there.
    bool has_multi = false;
    for (const Instance& inst : instances) has_multi = has_multi || inst.id == "multi_000001";
    EXPECT_TRUE(has_multi);
}

TEST(Pipeline, ToolsManifestRecordsStallsAndRejects) {
    TempDir tmp;
    {
        JobConfig cfg = parse_job_config(base_config(tmp.path, "fields_script.json"));
        auto backend = make_backend(cfg);
        run_stage_fields(cfg, *backend);
    }
    JobConfig cfg = parse_job_config(base_config(tmp.path, "tools_script.json"));
    auto backend = make_backend(cfg);
    run_stage_tools(cfg, *backend);
    json manifest = read_json_file(tmp.path / "manifest.json");
    EXPECT_EQ(manifest["totals"]["accepted"], 6);
    EXPECT_EQ(manifest["totals"]["deduped"], 2);   // searchRestaurant twice
    EXPECT_EQ(manifest["totals"]["rejected"], 1);  // the broken tool
    EXPECT_EQ(manifest["stalls"].size(), 3u);      // every subfield ends on a stall
    for (const json& batch : manifest["batches"]) {
        EXPECT_LE(batch["accepted"].get<size_t>(), batch["parsed"].get<size_t>());
        EXPECT_LE(batch["parsed"].get<size_t>(), batch["attempted"].get<size_t>());
    }
}

TEST(Pipeline, EvaluationJobWritesReports) {
    TempDir tmp;
    run_full_pipeline(tmp.path);
    // Echo the gold callings as predictions.
    std::vector<Instance> gold = read_instances(tmp.path / "instances.jsonl");
    std::vector<json> records;
    for (const Instance& inst : gold)
        records.push_back({{"id", inst.id}, {"output", call_sequence_to_json(inst.calling).dump()}});
    write_jsonl_atomic(tmp.path / "predictions.jsonl", records);

    JobConfig cfg;
    cfg.paths.instances = tmp.path / "instances.jsonl";
    cfg.paths.predictions = tmp.path / "predictions.jsonl";
    cfg.paths.candidates = tmp.path / "candidates.jsonl";  // absent: taxonomy off
    cfg.paths.report_json = tmp.path / "report.json";
    cfg.paths.report_md = tmp.path / "report.md";
    EvaluationJobResult result = run_evaluation_job(cfg);
    EXPECT_DOUBLE_EQ(result.report.overall.format_acc, 1.0);
    EXPECT_DOUBLE_EQ(result.report.overall.tool_f1, 1.0);
    EXPECT_DOUBLE_EQ(result.report.overall.param_f1, 1.0);
    EXPECT_TRUE(fs::exists(tmp.path / "report.json"));
    EXPECT_TRUE(fs::exists(tmp.path / "report.md"));
    json report = read_json_file(tmp.path / "report.json");
    EXPECT_EQ(report["splits"]["nested"]["instances"], 1);
}

TEST(JobConfigParsing, UnknownKindsRejected) {
    EXPECT_THROW(parse_job_config(json{{"backend", {{"kind", "telepathy"}}}}), Error);
    EXPECT_THROW(parse_job_config(json{{"retriever", {{"kind", "psychic"}}}}), Error);
}

TEST(JobConfigParsing, RelativePathsResolveAgainstBaseDir) {
    json raw = {{"paths", {{"tools", "data/tools.jsonl"}}}};
    JobConfig cfg = parse_job_config(raw, "/some/base");
    EXPECT_EQ(cfg.paths.tools, fs::path("/some/base/data/tools.jsonl"));
}
