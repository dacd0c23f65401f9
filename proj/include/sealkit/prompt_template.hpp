#pragma once

// Prompt templates with positional "{}" slots. Literal braces in bodies are
// escaped as doubled braces, python-format style, so template files can be
// shipped as-is and filled without surprises.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sealkit/errors.hpp"
#include "sealkit/io.hpp"

namespace sealkit {

class PromptTemplate {
public:
    PromptTemplate() = default;

    PromptTemplate(std::string name, std::string body)
        : name_(std::move(name)), body_(std::move(body)) {
        slot_count_ = scan(body_, [](std::string_view, bool, int) {});
    }

    static PromptTemplate load(const std::filesystem::path& path) {
        return PromptTemplate(path.stem().string(), read_text_file(path));
    }

    const std::string& name() const { return name_; }
    const std::string& body() const { return body_; }
    int slot_count() const { return slot_count_; }

    std::string fill(std::span<const std::string> args) const {
        if (static_cast<int>(args.size()) != slot_count_)
            fail(ErrorCode::Config, "template \"" + name_ + "\" takes " +
                                        std::to_string(slot_count_) + " arguments, got " +
                                        std::to_string(args.size()));
        std::string out;
        scan(body_, [&](std::string_view chunk, bool is_slot, int slot_index) {
            if (is_slot) out += args[static_cast<size_t>(slot_index)];
            else out.append(chunk.data(), chunk.size());
        });
        return out;
    }

    std::string fill(std::initializer_list<std::string> args) const {
        std::vector<std::string> v(args);
        return fill(std::span<const std::string>(v));
    }

private:
    // Single scanner used for both counting and rendering: "{{"/"}}" emit a
    // literal brace, "{}" is a slot, a lone brace is a malformed template.
    template <typename Emit>
    static int scan(std::string_view body, Emit&& emit) {
        int slots = 0;
        size_t i = 0;
        auto emit_chunk = [&](std::string_view chunk, bool is_slot, int index) {
            emit(chunk, is_slot, index);
        };
        while (i < body.size()) {
            char c = body[i];
            if (c == '{') {
                if (i + 1 < body.size() && body[i + 1] == '{') {
                    emit_chunk("{", false, -1);
                    i += 2;
                } else if (i + 1 < body.size() && body[i + 1] == '}') {
                    emit_chunk({}, true, slots);
                    ++slots;
                    i += 2;
                } else {
                    fail(ErrorCode::Config, "lone '{' in template body at offset " + std::to_string(i));
                }
            } else if (c == '}') {
                if (i + 1 < body.size() && body[i + 1] == '}') {
                    emit_chunk("}", false, -1);
                    i += 2;
                } else {
                    fail(ErrorCode::Config, "lone '}' in template body at offset " + std::to_string(i));
                }
            } else {
                size_t next = body.find_first_of("{}", i);
                if (next == std::string_view::npos) next = body.size();
                emit_chunk(body.substr(i, next - i), false, -1);
                i = next;
            }
        }
        return slots;
    }

    std::string name_;
    std::string body_;
    int slot_count_ = 0;
};

// Loads the named template from a directory of .txt prompt files.
inline PromptTemplate load_prompt(const std::filesystem::path& dir, std::string_view name) {
    return PromptTemplate::load(dir / (std::string(name) + ".txt"));
}

}  // namespace sealkit
