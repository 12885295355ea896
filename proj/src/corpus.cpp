// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "mathrl/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <unordered_set>

namespace mathrl::corpus {

// ---------------------------------------------------------------------------
// SourceTag
// ---------------------------------------------------------------------------

std::string_view to_string(SourceTag tag) {
    switch (tag) {
        case SourceTag::openr1_math: return "openr1_math";
        case SourceTag::openr1_hard: return "openr1_hard";
        case SourceTag::light_r1_stage2: return "light_r1_stage2";
        case SourceTag::other: return "other";
    }
    throw ValidationError("unknown source tag value");
}

SourceTag source_tag_from_string(std::string_view name) {
    if (name == "openr1_math") return SourceTag::openr1_math;
    if (name == "openr1_hard") return SourceTag::openr1_hard;
    if (name == "light_r1_stage2") return SourceTag::light_r1_stage2;
    if (name == "other") return SourceTag::other;
    throw ValidationError("unknown source tag \"" + std::string(name) + "\"");
}

// ---------------------------------------------------------------------------
// Codec helpers
// ---------------------------------------------------------------------------

namespace detail {

const json& require_field(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw ValidationError(std::string("missing required field \"") + key + "\"");
    }
    return *it;
}

std::string require_string(const json& j, const char* key, bool allow_empty) {
    const json& v = require_field(j, key);
    if (!v.is_string()) {
        throw ValidationError(std::string("field \"") + key + "\" must be a string");
    }
    std::string s = v.get<std::string>();
    if (!allow_empty && s.empty()) {
        throw ValidationError(std::string("field \"") + key + "\" must be non-empty");
    }
    return s;
}

long long require_nonneg_int(const json& j, const char* key) {
    const json& v = require_field(j, key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ValidationError(std::string("field \"") + key +
                              "\" must be a non-negative integer");
    }
    return v.get<long long>();
}

std::string meta_value_to_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    // Numbers and booleans are tolerated on input and stored as their JSON text.
    if (v.is_number() || v.is_boolean()) return v.dump();
    throw ValidationError("meta values must be strings, numbers, or booleans");
}

} // namespace detail

using detail::meta_value_to_string;
using detail::require_field;
using detail::require_nonneg_int;
using detail::require_string;

// ---------------------------------------------------------------------------
// ProblemRecord codec
// ---------------------------------------------------------------------------

std::optional<double> accuracy(const ProblemRecord& record) {
    auto it = record.meta.find("accuracy");
    if (it == record.meta.end()) return std::nullopt;
    const std::string& s = it->second;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || value < 0.0 || value > 1.0) {
        // Parse-time validation rejects these, so reaching here means the
        // record was built in memory with a bad value.
        throw ValidationError("meta accuracy \"" + s + "\" is not a fraction in [0,1]");
    }
    return value;
}

ProblemRecord RecordCodec<ProblemRecord>::parse(const json& j) {
    if (!j.is_object()) throw ValidationError("problem record must be a JSON object");
    ProblemRecord r;
    r.id = require_string(j, "id", /*allow_empty=*/false);
    r.statement = require_string(j, "statement", /*allow_empty=*/false);
    if (auto it = j.find("answer"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw ValidationError("field \"answer\" must be a string");
        r.answer = it->get<std::string>();
    }
    r.source = source_tag_from_string(require_string(j, "source"));
    if (auto it = j.find("meta"); it != j.end() && !it->is_null()) {
        if (!it->is_object()) throw ValidationError("field \"meta\" must be an object");
        for (const auto& [key, value] : it->items()) {
            r.meta[key] = meta_value_to_string(value);
        }
    }
    // Surface malformed accuracy annotations at parse time, not at use time.
    if (r.meta.contains("accuracy")) (void)accuracy(r);
    return r;
}

json RecordCodec<ProblemRecord>::dump(const ProblemRecord& r) {
    json j = json::object();
    j["id"] = r.id;
    j["statement"] = r.statement;
    if (r.answer) j["answer"] = *r.answer;
    j["source"] = std::string(to_string(r.source));
    if (!r.meta.empty()) {
        json m = json::object();
        for (const auto& [key, value] : r.meta) m[key] = value;
        j["meta"] = std::move(m);
    }
    return j;
}

// ---------------------------------------------------------------------------
// TraceRecord codec
// ---------------------------------------------------------------------------

TraceRecord RecordCodec<TraceRecord>::parse(const json& j) {
    if (!j.is_object()) throw ValidationError("trace record must be a JSON object");
    TraceRecord r;
    r.problem_id = require_string(j, "problem_id", /*allow_empty=*/false);
    r.text = require_string(j, "text");
    r.token_count = require_nonneg_int(j, "token_count");
    if (auto it = j.find("extracted_answer"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) {
            throw ValidationError("field \"extracted_answer\" must be a string");
        }
        r.extracted_answer = it->get<std::string>();
    }
    if (auto it = j.find("correct"); it != j.end() && !it->is_null()) {
        if (!it->is_boolean()) throw ValidationError("field \"correct\" must be a boolean");
        r.correct = it->get<bool>();
    }
    if (r.correct.has_value() && !r.extracted_answer.has_value()) {
        throw ValidationError(
            "trace marked with \"correct\" must also carry \"extracted_answer\"");
    }
    return r;
}

json RecordCodec<TraceRecord>::dump(const TraceRecord& r) {
    json j = json::object();
    j["problem_id"] = r.problem_id;
    j["text"] = r.text;
    j["token_count"] = r.token_count;
    if (r.extracted_answer) j["extracted_answer"] = *r.extracted_answer;
    if (r.correct) j["correct"] = *r.correct;
    return j;
}

// ---------------------------------------------------------------------------
// MalformedLineError
// ---------------------------------------------------------------------------

namespace {

std::string format_line_error(const std::filesystem::path& path, const LineError& err) {
    return path.string() + ":" + std::to_string(err.line) + ": " + err.message;
}

} // namespace

MalformedLineError::MalformedLineError(const std::filesystem::path& path, LineError err)
    : std::runtime_error(format_line_error(path, err)), err_(std::move(err)) {}

// ---------------------------------------------------------------------------
// Tokenizers
// ---------------------------------------------------------------------------

namespace {

bool is_ascii_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

const std::string kWhitespaceName = "whitespace";
const std::string kByteHeuristicName = "byte4";

} // namespace

const std::string& WhitespaceTokenizer::name() const { return kWhitespaceName; }

std::size_t WhitespaceTokenizer::count(std::string_view text) const {
    std::size_t tokens = 0;
    bool in_token = false;
    for (unsigned char c : text) {
        if (is_ascii_space(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++tokens;
        }
    }
    return tokens;
}

std::string_view WhitespaceTokenizer::prefix(std::string_view text,
                                             std::size_t max_tokens) const {
    std::size_t tokens = 0;
    bool in_token = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (is_ascii_space(static_cast<unsigned char>(text[i]))) {
            in_token = false;
        } else if (!in_token) {
            if (tokens == max_tokens) return text.substr(0, i);
            in_token = true;
            ++tokens;
        }
    }
    return text;
}

const std::string& ByteHeuristicTokenizer::name() const { return kByteHeuristicName; }

std::size_t ByteHeuristicTokenizer::count(std::string_view text) const {
    return (text.size() + 3) / 4;
}

std::string_view ByteHeuristicTokenizer::prefix(std::string_view text,
                                                std::size_t max_tokens) const {
    const std::size_t max_bytes = max_tokens * 4;
    if (text.size() <= max_bytes) return text;
    std::size_t end = max_bytes;
    // Never split a UTF-8 code point: back off over continuation bytes.
    while (end > 0 && (static_cast<unsigned char>(text[end]) & 0xC0) == 0x80) --end;
    return text.substr(0, end);
}

std::unique_ptr<Tokenizer> make_tokenizer(std::string_view name) {
    if (name == kWhitespaceName) return std::make_unique<WhitespaceTokenizer>();
    if (name == kByteHeuristicName) return std::make_unique<ByteHeuristicTokenizer>();
    throw ValidationError("unknown tokenizer \"" + std::string(name) +
                          "\" (expected \"whitespace\" or \"byte4\")");
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

void validate_unique_ids(std::span<const ProblemRecord> records,
                         const std::string& dataset_name) {
    std::unordered_set<std::string_view> seen;
    seen.reserve(records.size());
    for (const auto& record : records) {
        if (!seen.insert(record.id).second) {
            throw ValidationError("duplicate problem id \"" + record.id + "\" in " +
                                  dataset_name);
        }
    }
}

} // namespace mathrl::corpus
