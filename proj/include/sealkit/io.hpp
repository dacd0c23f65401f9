#pragma once

// File I/O: JSONL corpora, whole-file JSON, and atomic writes (temp file in
// the target directory + rename, so a killed job never leaves a truncated
// file at the configured path).

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sealkit/errors.hpp"
#include "sealkit/schema.hpp"

namespace sealkit {

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::MissingPrereq, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline json read_json_file(const std::filesystem::path& path) {
    std::string text = read_text_file(path);
    json parsed = json::parse(text, nullptr, false);
    if (parsed.is_discarded()) fail(ErrorCode::SchemaError, "invalid JSON in " + path.string());
    return parsed;
}

// Reads a corpus file that is either JSONL (one object per line) or a single
// JSON array. Released datasets ship both layouts; sniffing the first
// non-whitespace byte keeps ingestion uniform.
inline std::vector<json> read_json_records(const std::filesystem::path& path) {
    std::string text = read_text_file(path);
    size_t first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    std::vector<json> records;
    if (text[first] == '[') {
        json arr = json::parse(text, nullptr, false);
        if (arr.is_discarded() || !arr.is_array())
            fail(ErrorCode::SchemaError, "invalid JSON array in " + path.string());
        for (auto& elem : arr) records.push_back(std::move(elem));
        return records;
    }
    std::istringstream lines(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        std::string_view body = trim_view(line);
        if (body.empty()) continue;
        json parsed = json::parse(body, nullptr, false);
        if (parsed.is_discarded())
            fail(ErrorCode::SchemaError,
                 path.string() + ":" + std::to_string(lineno) + ": invalid JSON");
        records.push_back(std::move(parsed));
    }
    return records;
}

inline void write_text_atomic(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::Io, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) fail(ErrorCode::Io, "short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail(ErrorCode::Io, "rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

// UTF-8, LF line endings, one compact JSON object per line.
inline void write_jsonl_atomic(const std::filesystem::path& path,
                               const std::vector<json>& records) {
    std::string out;
    for (const json& record : records) {
        out += record.dump();
        out += '\n';
    }
    write_text_atomic(path, out);
}

inline void write_json_atomic(const std::filesystem::path& path, const json& value) {
    write_text_atomic(path, value.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Corpus-level readers

inline ToolPool read_tool_pool(const std::filesystem::path& path) {
    ToolPool pool;
    for (const json& record : read_json_records(path)) pool.insert(parse_tool(record));
    return pool;
}

inline void write_tool_pool_atomic(const std::filesystem::path& path, const ToolPool& pool) {
    std::vector<json> records;
    records.reserve(pool.size());
    for (const ToolSpec& tool : pool.tools()) records.push_back(tool_to_json(tool));
    write_jsonl_atomic(path, records);
}

}  // namespace sealkit
