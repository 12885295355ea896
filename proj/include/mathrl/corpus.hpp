// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared data model: problem and trace records, line-delimited JSON I/O,
// and pluggable token counting. Field names are documented in
// docs/data_formats.md and are stable.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mathrl/errors.hpp"

namespace mathrl::corpus {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

enum class SourceTag { openr1_math, openr1_hard, light_r1_stage2, other };

std::string_view to_string(SourceTag tag);
SourceTag source_tag_from_string(std::string_view name); // throws ValidationError

// One math problem. `meta` holds free-form string annotations; the key
// "accuracy" (reference-model accuracy as a fraction in [0,1]) is the only
// one with semantics attached elsewhere.
struct ProblemRecord {
    std::string id;
    std::string statement;
    std::optional<std::string> answer;
    SourceTag source = SourceTag::other;
    std::map<std::string, std::string> meta;

    bool operator==(const ProblemRecord&) const = default;
};

// Parses meta["accuracy"] if present. Malformed values surface as
// ValidationError at record-parse time, so this only sees well-formed ones.
std::optional<double> accuracy(const ProblemRecord& record);

// One model generation for a problem. `token_count` is the count under the
// tokenizer that produced the record; readers treat it as data rather than
// recounting text under a possibly different tokenizer.
struct TraceRecord {
    std::string problem_id;
    std::string text;
    long long token_count = 0;
    std::optional<std::string> extracted_answer;
    std::optional<bool> correct;

    bool operator==(const TraceRecord&) const = default;
};

// ---------------------------------------------------------------------------
// Token counting
// ---------------------------------------------------------------------------

// Deterministic, total token counter. count("") == 0; no compositionality is
// assumed. prefix() exists so budget truncation can cut at token boundaries.
class Tokenizer {
  public:
    virtual ~Tokenizer() = default;

    virtual const std::string& name() const = 0;
    virtual std::size_t count(std::string_view text) const = 0;

    // Longest prefix of `text` that ends on a token boundary and counts at
    // most `max_tokens` tokens.
    virtual std::string_view prefix(std::string_view text, std::size_t max_tokens) const = 0;
};

// Counts maximal runs of non-whitespace bytes (ASCII whitespace).
class WhitespaceTokenizer final : public Tokenizer {
  public:
    const std::string& name() const override;
    std::size_t count(std::string_view text) const override;
    std::string_view prefix(std::string_view text, std::size_t max_tokens) const override;
};

// ceil(bytes / 4): a rough stand-in for BPE token counts when estimating
// budgets. prefix() never splits a UTF-8 code point.
class ByteHeuristicTokenizer final : public Tokenizer {
  public:
    const std::string& name() const override;
    std::size_t count(std::string_view text) const override;
    std::string_view prefix(std::string_view text, std::size_t max_tokens) const override;
};

// "whitespace" or "byte4"; throws ValidationError otherwise.
std::unique_ptr<Tokenizer> make_tokenizer(std::string_view name);

inline std::size_t count_tokens(std::string_view text, const Tokenizer& tokenizer) {
    return tokenizer.count(text);
}

// ---------------------------------------------------------------------------
// Line-delimited JSON I/O
// ---------------------------------------------------------------------------

enum class ErrorPolicy { fail_fast, skip_and_collect };

struct LineError {
    std::size_t line = 0; // 1-based
    std::string raw;
    std::string message;
};

// Raised in fail_fast mode; carries the offending line.
class MalformedLineError : public std::runtime_error {
  public:
    MalformedLineError(const std::filesystem::path& path, LineError err);
    const LineError& line_error() const { return err_; }

  private:
    LineError err_;
};

// Per-record JSON codec. Specialized for every record type stored as JSONL.
template <typename T>
struct RecordCodec; // parse(const json&) -> T (throws ValidationError), dump(const T&) -> json

template <>
struct RecordCodec<ProblemRecord> {
    static ProblemRecord parse(const json& j);
    static json dump(const ProblemRecord& r);
};

template <>
struct RecordCodec<TraceRecord> {
    static TraceRecord parse(const json& j);
    static json dump(const TraceRecord& r);
};

template <typename T>
struct ReadResult {
    std::vector<T> records;
    std::vector<LineError> errors; // populated only in skip_and_collect mode
};

// Lazy pull-based reader: one line parsed per next() call, in file order.
// Missing file -> IoError from the constructor. Malformed lines either throw
// (fail_fast) or are collected and skipped (skip_and_collect).
template <typename T>
class RecordReader {
  public:
    RecordReader(std::filesystem::path path, ErrorPolicy policy = ErrorPolicy::fail_fast)
        : path_(std::move(path)), policy_(policy), in_(path_, std::ios::binary) {
        if (!in_.is_open()) {
            throw IoError("cannot open " + path_.string() + " for reading");
        }
    }

    std::optional<T> next() {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_;
            if (line.empty()) continue; // tolerate blank lines (e.g. trailing newline)
            try {
                const json j = json::parse(line);
                return RecordCodec<T>::parse(j);
            } catch (const std::exception& e) {
                LineError err{line_, line, e.what()};
                if (policy_ == ErrorPolicy::fail_fast) {
                    throw MalformedLineError(path_, std::move(err));
                }
                errors_.push_back(std::move(err));
            }
        }
        return std::nullopt;
    }

    const std::vector<LineError>& errors() const { return errors_; }
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
    ErrorPolicy policy_;
    std::ifstream in_;
    std::size_t line_ = 0;
    std::vector<LineError> errors_;
};

template <typename T>
ReadResult<T> read_records(const std::filesystem::path& path,
                           ErrorPolicy policy = ErrorPolicy::fail_fast) {
    RecordReader<T> reader(path, policy);
    ReadResult<T> result;
    while (auto record = reader.next()) {
        result.records.push_back(std::move(*record));
    }
    result.errors = reader.errors();
    return result;
}

// One record per line, UTF-8, '\n' terminated. Returns the number written.
// The destination directory must exist.
template <typename T>
std::size_t write_records(const std::filesystem::path& path, std::span<const T> records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out.is_open()) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    for (const T& record : records) {
        out << RecordCodec<T>::dump(record).dump() << '\n';
    }
    out.flush();
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
    return records.size();
}

template <typename T>
std::size_t write_records(const std::filesystem::path& path, const std::vector<T>& records) {
    return write_records<T>(path, std::span<const T>(records));
}

// Duplicate ids within one dataset are a validation error.
void validate_unique_ids(std::span<const ProblemRecord> records,
                         const std::string& dataset_name);

// ---------------------------------------------------------------------------
// Shared JSON helpers for codecs in other modules
// ---------------------------------------------------------------------------

namespace detail {

const json& require_field(const json& j, const char* key);
std::string require_string(const json& j, const char* key, bool allow_empty = true);
long long require_nonneg_int(const json& j, const char* key);
std::string meta_value_to_string(const json& v);

} // namespace detail

} // namespace mathrl::corpus
