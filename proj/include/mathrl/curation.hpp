// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Fine-tuning dataset construction: per-source filters, priority-ordered
// merge, statement-level dedup, answer backfill from boxed trace answers,
// and shortest-correct-trace selection, with per-stage conservation stats.

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mathrl/corpus.hpp"
#include "mathrl/keyvalue.hpp"

namespace mathrl::curation {

struct CurationConfig {
    long long long_trace_threshold = 12800; // strict >
    double high_acc_threshold = 0.5;        // strict >
    double mid_acc_lo = 0.5;                // closed band
    double mid_acc_hi = 0.75;
    int hard_attempts = 4;
    // Per-batch caps; "first N in source order" when a filter over-yields.
    std::optional<long long> long_high_acc_cap = 3000;
    std::optional<long long> mid_acc_cap = 3000;
    std::optional<long long> hard_cap = 2500;

    void validate() const;
    static CurationConfig from_config(const keyvalue::Config& cfg);
    keyvalue::Config to_config() const; // full effective config, for manifests
};

// One curation input: a problem, its candidate traces, and (for the
// hard-problem source) reference-model attempt outcomes, true = solved.
struct CurationRecord {
    corpus::ProblemRecord problem;
    std::vector<corpus::TraceRecord> traces;
    std::vector<bool> attempts;

    bool operator==(const CurationRecord&) const = default;
};

struct SftTriplet {
    corpus::ProblemRecord problem;
    corpus::TraceRecord trace; // carries extracted_answer and correct = true
    std::string answer;

    bool operator==(const SftTriplet&) const = default;
};

struct FilterResult {
    std::vector<CurationRecord> kept;
    std::map<std::string, std::size_t> drop_reasons;
};

struct StageStats {
    std::string stage;
    std::size_t input = 0;
    std::size_t output = 0;
    std::map<std::string, std::size_t> drop_reasons;

    std::size_t dropped() const { return input - output; }
};

struct CurationStats {
    std::vector<StageStats> stages;
    std::size_t triplets = 0;

    nlohmann::ordered_json to_json() const;
};

struct SourceFiles {
    std::optional<std::filesystem::path> openr1_math;
    std::optional<std::filesystem::path> openr1_hard;
    std::optional<std::filesystem::path> light_r1_stage2;
};

struct BuildResult {
    std::vector<SftTriplet> triplets;
    CurationStats stats;
};

// Dedup key: trimmed statement with internal whitespace runs collapsed to
// single spaces, then Unicode NFC.
std::string normalize_statement(std::string_view statement);

// Keeps records whose longest trace exceeds long_trace_threshold (strict)
// AND whose accuracy exceeds high_acc_threshold (strict). Records missing
// accuracy metadata or traces are dropped with a named reason.
FilterResult filter_long_high_acc(std::span<const CurationRecord> records,
                                  const CurationConfig& cfg);

// Keeps records with accuracy in the closed band [mid_acc_lo, mid_acc_hi].
FilterResult filter_mid_acc(std::span<const CurationRecord> records,
                            const CurationConfig& cfg);

// Keeps records whose first hard_attempts attempt outcomes are all failures;
// records with fewer recorded attempts are dropped with a named reason.
FilterResult filter_hard_unsolved(std::span<const CurationRecord> records,
                                  const CurationConfig& cfg);

// One survivor per normalized statement; the first occurrence in input order
// wins, so callers merge sources in priority order beforehand.
FilterResult dedup(std::span<const CurationRecord> records);

// Majority boxed answer across traces; ties resolve to the answer of the
// shortest trace (token count, then lexicographic text). nullopt when no
// trace yields an extractable answer.
std::optional<CurationRecord> backfill_answer(const CurationRecord& record);

// Minimal-token-count trace whose boxed answer verifies against the
// problem's answer; ties resolve to the lexicographically smallest text.
// nullopt when no trace is correct (or the problem has no answer).
std::optional<SftTriplet> select_shortest_correct(
    const corpus::ProblemRecord& problem, std::span<const corpus::TraceRecord> traces);

// Full pipeline: per-source filter (with caps) -> merge in priority order
// (long+high-acc, mid-acc, hard, passthrough) -> dedup -> backfill ->
// shortest-correct selection. Deterministic for fixed inputs and config.
BuildResult build_sft_dataset(const SourceFiles& sources, const CurationConfig& cfg);

} // namespace mathrl::curation

namespace mathrl::corpus {

template <>
struct RecordCodec<curation::CurationRecord> {
    static curation::CurationRecord parse(const json& j);
    static json dump(const curation::CurationRecord& r);
};

template <>
struct RecordCodec<curation::SftTriplet> {
    static curation::SftTriplet parse(const json& j);
    static json dump(const curation::SftTriplet& r);
};

} // namespace mathrl::corpus
