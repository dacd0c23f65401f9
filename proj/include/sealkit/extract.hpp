#pragma once

// Extraction of structured payloads from free-form model replies: python-ish
// string-list literals and the first balanced JSON region.

#include <string>
#include <string_view>
#include <vector>

#include "sealkit/schema.hpp"

namespace sealkit {

namespace detail {

// Attempts to read a list literal of quoted strings starting at text[open]
// (which must be '['). Tolerates single or double quotes, newlines and a
// trailing comma. Returns false if the region is not such a literal; on
// success `end` is one past the closing bracket.
inline bool parse_string_list_at(std::string_view text, size_t open,
                                 std::vector<std::string>& out, size_t& end) {
    std::vector<std::string> items;
    size_t i = open + 1;
    auto skip_ws = [&] {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    };
    while (true) {
        skip_ws();
        if (i >= text.size()) return false;
        if (text[i] == ']') break;
        char quote = text[i];
        if (quote != '"' && quote != '\'') return false;
        ++i;
        std::string item;
        while (i < text.size() && text[i] != quote) {
            if (text[i] == '\\' && i + 1 < text.size()) {
                char next = text[i + 1];
                if (next == '\\' || next == '"' || next == '\'') {
                    item.push_back(next);
                    i += 2;
                    continue;
                }
            }
            item.push_back(text[i]);
            ++i;
        }
        if (i >= text.size()) return false;  // unterminated string
        ++i;                                 // closing quote
        items.push_back(trim(item));
        skip_ws();
        if (i >= text.size()) return false;
        if (text[i] == ',') {
            ++i;
            continue;
        }
        if (text[i] == ']') break;
        return false;
    }
    out = std::move(items);
    end = i + 1;
    return true;
}

}  // namespace detail

struct ListLiteral {
    std::vector<std::string> items;
    size_t end = 0;  // one past the closing bracket
    bool found = false;
};

// First bracketed list literal of quoted strings at or after `offset`.
inline ListLiteral find_list_literal(std::string_view text, size_t offset = 0) {
    for (size_t i = offset; i < text.size(); ++i) {
        if (text[i] != '[') continue;
        ListLiteral result;
        if (detail::parse_string_list_at(text, i, result.items, result.end)) {
            result.found = true;
            return result;
        }
    }
    return {};
}

// Extracts the first bracketed list literal of quoted strings from the text,
// tolerating a leading "name =" binding and trailing commas. Elements are
// trimmed. Returns an empty list when no such literal exists; the caller's
// quality control decides what absence means.
inline std::vector<std::string> parse_list_literal(std::string_view text) {
    return find_list_literal(text).items;
}

// Variant used when a reply carries several lists: scanning starts at
// `offset` so a later literal can be located after an earlier payload.
inline std::vector<std::string> parse_list_literal_after(std::string_view text, size_t offset) {
    if (offset >= text.size()) return {};
    return find_list_literal(text, offset).items;
}

struct JsonRegion {
    json value;
    size_t begin = 0;
    size_t end = 0;  // one past the last byte of the region
};

// Scans for the first balanced {...} or [...] region that parses as JSON:
// leftmost balanced candidate first, then first parse success. Throws
// NO_JSON_FOUND when the text contains none.
inline JsonRegion extract_first_json_region(std::string_view text) {
    for (size_t i = 0; i < text.size(); ++i) {
        char open = text[i];
        if (open != '{' && open != '[') continue;
        // Find the matching close with a quote-aware depth scan.
        int depth = 0;
        bool in_string = false, escaped = false;
        size_t close = std::string_view::npos;
        for (size_t j = i; j < text.size(); ++j) {
            char c = text[j];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{' || c == '[') ++depth;
            else if (c == '}' || c == ']') {
                --depth;
                if (depth == 0) { close = j; break; }
            }
        }
        if (close == std::string_view::npos) continue;
        std::string_view candidate = text.substr(i, close - i + 1);
        json parsed = json::parse(candidate, nullptr, false);
        if (!parsed.is_discarded()) return {std::move(parsed), i, close + 1};
    }
    fail(ErrorCode::NoJsonFound, "no JSON value found in text");
}

inline json extract_first_json(std::string_view text) {
    return extract_first_json_region(text).value;
}

// First balanced [...] region returned as raw inner text (used for the
// "Task description = [ ... ]" reply shape, whose payload is unquoted prose).
inline std::optional<std::string> extract_bracketed_text(std::string_view text) {
    size_t open = text.find('[');
    if (open == std::string_view::npos) return std::nullopt;
    int depth = 0;
    for (size_t j = open; j < text.size(); ++j) {
        if (text[j] == '[') ++depth;
        else if (text[j] == ']') {
            --depth;
            if (depth == 0) return trim(text.substr(open + 1, j - open - 1));
        }
    }
    return std::nullopt;
}

}  // namespace sealkit
