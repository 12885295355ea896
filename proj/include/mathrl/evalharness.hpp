// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mathrl/corpus.hpp"
#include "mathrl/inference.hpp"
#include "mathrl/keyvalue.hpp"

namespace mathrl::evalharness {

// Evaluation protocol settings. `k` samples are drawn per problem and scored
// by boxed-answer extraction; budget curves re-score each sample after
// truncation to each listed token budget.
struct EvalConfig {
    int k = 64;
    std::vector<long long> budgets = {8000, 12000, 16000, 24000, 32000};
    std::string benchmark_tag = "benchmark";
    std::string model_tag = "model";
    int max_in_flight = 4;
    // Competition-style submission cap (e.g. a fixed number of scored
    // attempts); recorded in the report header, not enforced here.
    std::optional<int> submission_limit;
    std::string system_prompt =
        "You are a helpful and harmless assistant. You are Qwen developed by "
        "Alibaba. You should think step-by-step. Return final answer within "
        "\\boxed{{}}";
    inference::SamplingParams sampling;

    void validate() const;
    static EvalConfig from_config(const keyvalue::Config& cfg);
    keyvalue::Config to_config() const;
};

// One scored completion. `token_count` is the generation-side count;
// `truncated` means the endpoint stopped at its token limit.
struct ScoredSample {
    std::string text;
    long long token_count = 0;
    bool truncated = false;
    std::optional<std::string> extracted;
    bool correct = false;
};

// All k samples for one problem, with the reference answer kept so samples
// can be re-scored after budget truncation.
struct ProblemRuns {
    std::string problem_id;
    std::string answer;
    std::vector<ScoredSample> samples;
};

struct PerProblem {
    std::string problem_id;
    int correct_count = 0;
    int k = 0;
    double mean_tokens = 0.0;

    double pass1_fraction() const;
};

struct PassAt1 {
    std::vector<PerProblem> per_problem; // input order
    double aggregate_pct = 0.0;          // unweighted mean over problems, in percent
    double mean_tokens = 0.0;            // mean over problems of per-problem means
};

struct CurvePoint {
    long long budget = 0;
    double pass1_pct = 0.0;
    double mean_effective_tokens = 0.0;
};

struct DeltaRecord {
    std::string problem_id;
    double baseline_pass1_pct = 0.0;
    double delta_pass1_pct = 0.0;
    double delta_mean_tokens = 0.0;
};

struct EvalReport {
    std::string benchmark_tag;
    std::string model_tag;
    std::string tokenizer_name;
    int k = 0;
    inference::SamplingParams sampling;
    std::vector<long long> budgets;
    std::vector<PerProblem> per_problem;
    double aggregate_pass1_pct = 0.0;
    double aggregate_mean_tokens = 0.0;
    std::vector<CurvePoint> budget_curve;
};

// Scores a completion against the reference answer via boxed-answer
// extraction and normalized comparison.
ScoredSample score_sample(std::string text, long long token_count, bool truncated,
                          std::string_view reference_answer);

// Cuts the sample at the budget-th token boundary and re-scores the prefix.
// An answer boxed after the cut no longer counts. The returned token count is
// the effective cost min(original, budget).
ScoredSample truncate_at_budget(const ScoredSample& sample, long long budget,
                                const corpus::Tokenizer& tokenizer,
                                std::string_view reference_answer);

// Per-problem correct/k plus the unweighted aggregate. Throws
// ValidationError naming the first problem whose sample count is not k.
PassAt1 pass_at_1(std::span<const ProblemRuns> runs, int k);

// Re-scores every sample at each budget; points come back sorted by budget.
std::vector<CurvePoint> budget_curve(std::span<const ProblemRuns> runs,
                                     std::span<const long long> budgets,
                                     const corpus::Tokenizer& tokenizer, int k);

// Assembles the full report (aggregate + per-problem + budget curve).
EvalReport build_report(std::span<const ProblemRuns> runs, const EvalConfig& cfg,
                        const corpus::Tokenizer& tokenizer);

// Per-problem (b - a) deltas, sorted by baseline (a) accuracy then id.
// Throws ValidationError listing the id symmetric difference on mismatch.
std::vector<DeltaRecord> per_problem_delta(const EvalReport& a, const EvalReport& b);

// Writes report.json, per_problem.csv, and budget_curve.csv into out_dir.
void emit_report(const EvalReport& report, const std::filesystem::path& out_dir);

// Reads a report back from <dir>/report.json.
EvalReport load_report(const std::filesystem::path& dir);

// Writes deltas.csv into out_dir.
void emit_deltas(std::span<const DeltaRecord> deltas,
                 const std::filesystem::path& out_dir);

// Draws k samples per problem through the endpoint (one request of n = k per
// problem, at most max_in_flight concurrent) and scores them. Requires unique
// problem ids and reference answers; throws listing every failed problem id
// if any request ultimately fails.
std::vector<ProblemRuns> run_eval(std::span<const corpus::ProblemRecord> problems,
                                  const EvalConfig& cfg, inference::Endpoint& endpoint,
                                  const corpus::Tokenizer& tokenizer);

} // namespace mathrl::evalharness
