#include <gtest/gtest.h>

#include "sealkit/rng.hpp"
#include "sealkit/schema.hpp"
#include "sealkit/stats.hpp"

using namespace sealkit;

namespace {

json temperature_tool() {
    return json::parse(R"x({
        "api_name": "getTemperature",
        "api_description": "Retrieve the current temperature for a location",
        "field": "Weather/Forecast",
        "parameters": {
            "location": {"type": "str", "description": "The city to query (e.g., Beijing, London, New York)"}
        },
        "required": ["location"],
        "responses": {
            "temperature": {"type": "float", "description": "The current temperature in Celsius"}
        }
    })x");
}

}  // namespace

TEST(ParamType, OnlyFourKindsParse) {
    EXPECT_EQ(parse_param_type("str"), ParamType::String);
    EXPECT_EQ(parse_param_type("int"), ParamType::Integer);
    EXPECT_EQ(parse_param_type("float"), ParamType::Float);
    EXPECT_EQ(parse_param_type("bool"), ParamType::Boolean);
    EXPECT_FALSE(parse_param_type("list"));
    EXPECT_FALSE(parse_param_type("string"));
    EXPECT_FALSE(parse_param_type(""));
}

TEST(ValidateTool, WellFormedToolPasses) {
    ValidationReport report = validate_tool(temperature_tool());
    EXPECT_TRUE(report.ok);
    EXPECT_TRUE(report.violations.empty());
}

TEST(ValidateTool, MissingRequiredParameterIsReported) {
    json raw = temperature_tool();
    raw["required"] = json::array({"city"});
    ValidationReport report = validate_tool(raw);
    EXPECT_FALSE(report.ok);
    EXPECT_TRUE(report.has(violation::kRequiredParamMissing));
}

TEST(ValidateTool, UnknownParameterTypeIsReported) {
    json raw = temperature_tool();
    raw["parameters"]["location"]["type"] = "list";
    ValidationReport report = validate_tool(raw);
    EXPECT_FALSE(report.ok);
    EXPECT_TRUE(report.has(violation::kUnknownParamType));
}

TEST(ValidateTool, AllViolationsAreEnumerated) {
    json raw = temperature_tool();
    raw["api_name"] = "";
    raw["field"] = "weatherforecast";
    raw["required"] = json::array({"city"});
    raw["parameters"]["location"]["type"] = "list";
    ValidationReport report = validate_tool(raw);
    EXPECT_FALSE(report.ok);
    EXPECT_TRUE(report.has(violation::kEmptyName));
    EXPECT_TRUE(report.has(violation::kBadFieldPath));
    EXPECT_TRUE(report.has(violation::kRequiredParamMissing));
    EXPECT_TRUE(report.has(violation::kUnknownParamType));
    EXPECT_GE(report.violations.size(), 4u);
}

TEST(ValidateTool, FieldPathNeedsExactlyOneSeparator) {
    for (const char* bad : {"weather", "/forecast", "weather/", "a/b/c", ""}) {
        json raw = temperature_tool();
        raw["field"] = bad;
        EXPECT_TRUE(validate_tool(raw).has(violation::kBadFieldPath)) << bad;
    }
    json good = temperature_tool();
    good["field"] = "a/b";
    EXPECT_TRUE(validate_tool(good).ok);
}

TEST(ValidateTool, EmptyResponsesRejectedUnlessAllowed) {
    json raw = temperature_tool();
    raw["responses"] = json::object();
    EXPECT_TRUE(validate_tool(raw).has(violation::kEmptyResponses));
    ValidateOptions opts;
    opts.allow_empty_responses = true;
    EXPECT_TRUE(validate_tool(raw, opts).ok);
}

TEST(CanonicalKey, NormalizesCaseAndSeparators) {
    EXPECT_EQ(canonical_key("getTemperature"), "gettemperature");
    EXPECT_EQ(canonical_key("get_temperature"), canonical_key("getTemperature"));
    EXPECT_NE(canonical_key("searchHotels"), canonical_key("getHotelDetails"));
}

TEST(ToolPool, DoubleInsertIsIdempotent) {
    ToolPool pool;
    ToolSpec tool = parse_tool(temperature_tool());
    EXPECT_EQ(pool.insert(tool), InsertOutcome::Added);
    EXPECT_EQ(pool.insert(tool), InsertOutcome::Duplicate);
    EXPECT_EQ(pool.size(), 1u);
}

TEST(ToolPool, DistinctKeysBothInsert) {
    ToolPool pool;
    ToolSpec a = parse_tool(temperature_tool());
    ToolSpec b = a;
    b.name = "getHumidity";
    EXPECT_EQ(pool.insert(a), InsertOutcome::Added);
    EXPECT_EQ(pool.insert(b), InsertOutcome::Added);
    EXPECT_EQ(pool.size(), 2u);
}

TEST(ToolPool, NameVariantsCollide) {
    ToolPool pool;
    ToolSpec a = parse_tool(temperature_tool());
    ToolSpec b = a;
    b.name = "get_temperature";
    EXPECT_EQ(pool.insert(a), InsertOutcome::Added);
    EXPECT_EQ(pool.insert(b), InsertOutcome::Duplicate);
    EXPECT_EQ(pool.size(), 1u);
}

TEST(ToolPool, ReplayOfUniqueKeysMatchesCount) {
    // Stand-in for a generation-log replay: n distinct keys -> pool size n.
    ToolPool pool;
    ToolSpec base = parse_tool(temperature_tool());
    Rng rng(7);
    size_t unique = 0;
    for (int i = 0; i < 500; ++i) {
        ToolSpec t = base;
        t.name = "tool" + std::to_string(rng.uniform(200));
        if (pool.insert(t) == InsertOutcome::Added) ++unique;
    }
    EXPECT_EQ(pool.size(), unique);
    EXPECT_LE(pool.size(), 200u);
}

TEST(ExtractValueExamples, ParsesTerminalClause) {
    EXPECT_EQ(extract_value_examples("The city (e.g., Beijing, London, New York)"),
              (std::vector<std::string>{"Beijing", "London", "New York"}));
}

TEST(ExtractValueExamples, ProseWithoutClauseYieldsNothing) {
    EXPECT_TRUE(extract_value_examples("The minimum rating you want for the restaurant").empty());
}

TEST(ExtractValueExamples, EllipsisTokenDropped) {
    EXPECT_EQ(extract_value_examples("ID list (e.g., a1, b2, ...)"),
              (std::vector<std::string>{"a1", "b2"}));
}

TEST(ExtractValueExamples, AcceptsSpaceBeforeComma) {
    EXPECT_EQ(extract_value_examples("Format hint (e.g. , one, two)"),
              (std::vector<std::string>{"one", "two"}));
}

TEST(ExtractValueExamples, CaseInsensitiveMarker) {
    EXPECT_EQ(extract_value_examples("x (E.g., a)"), (std::vector<std::string>{"a"}));
}

TEST(ExtractValueExamples, NonTerminalClauseIsProse) {
    EXPECT_TRUE(extract_value_examples("The city (e.g., Beijing) to query").empty());
}

TEST(ExtractValueExamples, OtherMarkersAreProse) {
    EXPECT_TRUE(extract_value_examples("The city (for example, Beijing)").empty());
    EXPECT_TRUE(extract_value_examples("The city (eg, Beijing)").empty());
}

TEST(ExtractValueExamples, NestedParensStayBalanced) {
    auto values = extract_value_examples("Size (e.g., small (S), large (L))");
    ASSERT_EQ(values.size(), 2u);
    EXPECT_EQ(values[0], "small (S)");
    EXPECT_EQ(values[1], "large (L)");
}

TEST(ExtractValueExamples, NeverYieldsUnbalancedOrEllipsis) {
    // Property over arbitrary description strings assembled from a small alphabet.
    Rng rng(123);
    const std::string alphabet = "ab,(). eEgG";
    for (int trial = 0; trial < 3000; ++trial) {
        std::string desc = "v (e.g., ";
        size_t len = rng.uniform(18);
        for (size_t i = 0; i < len; ++i) desc.push_back(alphabet[rng.uniform(alphabet.size())]);
        desc.push_back(')');
        for (const std::string& value : extract_value_examples(desc)) {
            EXPECT_EQ(value.find("..."), std::string::npos) << desc;
            int depth = 0;
            bool balanced = true;
            for (char c : value) {
                if (c == '(') ++depth;
                if (c == ')') --depth;
                if (depth < 0) balanced = false;
            }
            EXPECT_TRUE(balanced && depth == 0) << desc << " -> " << value;
        }
    }
}

TEST(ParseTool, ExampleValuesDerivedFromDescription) {
    ToolSpec tool = parse_tool(temperature_tool());
    ASSERT_EQ(tool.parameters.size(), 1u);
    EXPECT_EQ(tool.parameters[0].example_values,
              (std::vector<std::string>{"Beijing", "London", "New York"}));
}

TEST(ParseTool, RoundTripPreservesEverything) {
    json raw = temperature_tool();
    raw["tags"] = json::array({"demo"});  // unknown key rides along opaquely
    ToolSpec tool = parse_tool(raw);
    json serialized = tool_to_json(tool);
    EXPECT_EQ(serialized, raw);
    EXPECT_EQ(parse_tool(serialized), tool);
}

TEST(ParseTool, RandomizedRoundTripProperty) {
    Rng rng(42);
    const char* types[] = {"str", "int", "float", "bool"};
    for (int trial = 0; trial < 200; ++trial) {
        json raw = json::object();
        raw["api_name"] = "tool" + std::to_string(trial);
        raw["api_description"] = "description " + std::to_string(rng.next_u64() % 1000);
        raw["field"] = "f" + std::to_string(rng.uniform(5)) + "/s" + std::to_string(rng.uniform(5));
        json params = json::object();
        size_t n_params = 1 + rng.uniform(5);
        std::vector<std::string> names;
        for (size_t p = 0; p < n_params; ++p) {
            std::string name = "p" + std::to_string(p);
            names.push_back(name);
            std::string desc = "param " + std::to_string(p);
            if (rng.uniform(2)) desc += " (e.g., v1, v2)";
            params[name] = {{"type", types[rng.uniform(4)]}, {"description", desc}};
        }
        raw["parameters"] = params;
        json required = json::array();
        for (const auto& name : names)
            if (rng.uniform(2)) required.push_back(name);
        raw["required"] = required;
        raw["responses"] = {{"out", {{"type", types[rng.uniform(4)]}, {"description", "result"}}}};
        ASSERT_TRUE(validate_tool(raw).ok);
        ToolSpec tool = parse_tool(raw);
        EXPECT_EQ(tool_to_json(tool), raw);
        EXPECT_EQ(parse_tool(tool_to_json(tool)), tool);
    }
}

TEST(FieldTree, RoundTrip) {
    FieldTree tree;
    tree.fields.push_back({"Science", {"Physics", "Chemistry"}});
    tree.fields.push_back({"Healthcare", {"Nursing"}});
    EXPECT_EQ(tree.subfield_count(), 3u);
    EXPECT_EQ(field_tree_from_json(field_tree_to_json(tree)), tree);
}

TEST(PoolStats, TwoToolArithmetic) {
    ToolPool pool;
    ToolSpec a = parse_tool(temperature_tool());
    a.required.clear();
    ToolSpec b = parse_tool(temperature_tool());
    b.name = "otherTool";
    b.parameters.push_back({"second", ParamType::String, "the other one", {}});
    b.required = {"location", "second"};
    pool.insert(a);
    pool.insert(b);
    StatsReport report = pool_stats(pool);
    EXPECT_EQ(report.tool_count, 2u);
    EXPECT_DOUBLE_EQ(report.avg_required, 1.0);
    EXPECT_DOUBLE_EQ(report.zero_required_fraction, 0.5);
    EXPECT_EQ(report.required_histogram[0], 1u);
    EXPECT_EQ(report.required_histogram[2], 1u);
}

TEST(PoolStats, EmptyPoolIsAnError) {
    ToolPool pool;
    EXPECT_THROW(pool_stats(pool), Error);
    try {
        pool_stats(pool);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyPool);
    }
}

TEST(PoolStats, BoundsHoldOnRandomPools) {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        ToolPool pool;
        size_t n = 1 + rng.uniform(20);
        size_t max_params = 0;
        for (size_t i = 0; i < n; ++i) {
            ToolSpec tool = parse_tool(temperature_tool());
            tool.name = "tool" + std::to_string(i);
            tool.parameters.clear();
            tool.required.clear();
            size_t n_params = rng.uniform(6);
            max_params = std::max(max_params, n_params);
            for (size_t p = 0; p < n_params; ++p) {
                tool.parameters.push_back({"p" + std::to_string(p), ParamType::String, "d", {}});
                if (rng.uniform(2)) tool.required.push_back("p" + std::to_string(p));
            }
            pool.insert(tool);
        }
        StatsReport report = pool_stats(pool);
        EXPECT_GE(report.zero_required_fraction, 0.0);
        EXPECT_LE(report.zero_required_fraction, 1.0);
        EXPECT_GE(report.avg_required, 0.0);
        EXPECT_LE(report.avg_required, static_cast<double>(max_params));
    }
}
