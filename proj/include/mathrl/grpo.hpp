// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Group-relative policy optimization: standardized within-group advantages,
// the clipped-ratio surrogate with a KL-to-reference penalty, and a fully
// inspectable categorical toy policy with analytic gradients. Two runnable
// modes: toy (sampling, objective, and parameter updates all in-process)
// and remote (rewards and advantages for served-model completions; no
// weight updates).

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mathrl/corpus.hpp"
#include "mathrl/inference.hpp"
#include "mathrl/keyvalue.hpp"
#include "mathrl/rewards.hpp"

namespace mathrl::grpo {

struct GrpoConfig {
    int group_size = 8;
    double beta = 0.04;       // KL-to-reference coefficient
    double clip_eps = 0.2;
    double learning_rate = 4e-6;
    long long total_steps = 50;
    long long max_completion_tokens = 16384;
    std::string lr_schedule = "cosine";
    int prompts_per_step = 16;
    bool sample_std = false;  // population std by default
    int max_in_flight = 4;    // remote mode request concurrency
    std::uint64_t seed = 0;
    std::string system_prompt =
        "You are a helpful and harmless assistant. You are Qwen developed by Alibaba. "
        "You should think step-by-step. Return final answer within \\boxed{{}}";

    void validate() const;
    static GrpoConfig from_config(const keyvalue::Config& cfg);
    keyvalue::Config to_config() const;
};

// G completions for one prompt. logprob_* are sequence-level; in toy mode
// candidate_indices identifies which candidate each draw picked.
struct GenerationGroup {
    std::string prompt_id;
    std::vector<std::string> completions;
    std::vector<double> rewards;      // breakdown totals
    std::vector<double> logprob_new;
    std::vector<double> logprob_old;
    std::vector<double> advantages;   // filled by group_advantages
    std::vector<long long> token_counts;
    std::vector<int> candidate_indices;
};

// a_i = (r_i - mean) / std; population std (divide by G) unless sample_std.
// A zero-variance group yields all-zero advantages. G must be >= 2.
std::vector<double> group_advantages(std::span<const double> rewards,
                                     bool sample_std = false);

// Exact categorical KL(p || q) = sum p log(p/q). Sizes must match; q must be
// strictly positive wherever p is.
double kl_divergence(std::span<const double> p, std::span<const double> q);

// Softmax policy over a finite candidate set per prompt; the parameter
// vector is the concatenated logits. Verification vehicle for the GRPO math.
class CategoricalToyPolicy {
  public:
    explicit CategoricalToyPolicy(std::vector<std::vector<double>> logits);

    std::size_t num_prompts() const { return logits_.size(); }
    std::size_t num_candidates(std::size_t prompt) const { return logits_[prompt].size(); }
    const std::vector<double>& logits(std::size_t prompt) const { return logits_[prompt]; }
    std::vector<double>& mutable_logits(std::size_t prompt) { return logits_[prompt]; }

    std::vector<double> probabilities(std::size_t prompt) const; // sums to 1 within 1e-12
    double log_probability(std::size_t prompt, std::size_t candidate) const;

    // Inverse-CDF draw from a uniform u in [0,1).
    int sample(std::size_t prompt, double u) const;

    // Flat text parameter file; values round-trip exactly.
    std::string serialize() const;
    static CategoricalToyPolicy deserialize(std::string_view text);

  private:
    std::vector<std::vector<double>> logits_;
};

struct ObjectiveEval {
    double objective = 0.0;      // surrogate - beta * KL
    double surrogate = 0.0;      // (1/G) sum_i min(rho_i a_i, clip(rho_i) a_i)
    double kl = 0.0;             // KL(new || ref)
    double clip_fraction = 0.0;  // fraction where the clipped branch is strictly lower
    std::vector<double> gradient; // d objective / d new_logits
};

// The group must carry advantages, logprob_old, and candidate_indices; the
// new policy's log-probabilities are recomputed from new_logits. Non-finite
// inputs are an error.
ObjectiveEval grpo_objective(const GenerationGroup& group,
                             std::span<const double> new_logits,
                             std::span<const double> ref_logits, const GrpoConfig& cfg);

struct StepMetrics {
    long long step = 0; // 1-based
    double lr = 0.0;
    double mean_reward = 0.0;
    double mean_length = 0.0;
    double kl = 0.0;
    double clip_fraction = 0.0;
    double objective = 0.0;

    nlohmann::ordered_json to_json() const;
};

// Toy-bandit dataset: a finite candidate completion set per problem.
struct ToyCandidate {
    std::string text;
    long long token_count = 0; // computed by the loader when the file omits it
};

struct ToyProblem {
    std::string id;
    std::string statement;
    std::string answer;
    std::vector<ToyCandidate> candidates;
};

std::vector<ToyProblem> load_toy_problems(const std::filesystem::path& path,
                                          const corpus::Tokenizer& tokenizer);

// One optimization step: sample G completions for each of prompts_per_step
// prompts (round-robin over the dataset from the step's cursor), score,
// standardize, and apply one accumulated ascent step at the scheduled rate.
StepMetrics train_step(CategoricalToyPolicy& policy, const CategoricalToyPolicy& ref,
                       std::span<const ToyProblem> problems,
                       std::span<const std::vector<double>> candidate_rewards,
                       long long step, const GrpoConfig& cfg, std::mt19937_64& rng);

struct ToyTrainingResult {
    CategoricalToyPolicy policy;
    std::vector<StepMetrics> metrics;
};

// Runs total_steps steps from a uniform policy (the reference). When
// out_dir is set, writes metrics.jsonl and checkpoints/step_NNNN.txt per
// step. Deterministic for a fixed config.
ToyTrainingResult run_toy_training(std::span<const ToyProblem> problems,
                                   const GrpoConfig& cfg,
                                   const rewards::RewardConfig& reward_cfg,
                                   const std::optional<std::filesystem::path>& out_dir);

// Remote mode: one group per problem, completions fetched from the
// endpoint, rewards and advantages computed here; no weight updates.
// Endpoint failures (after retries) become per-group error records.
struct RemoteScoringResult {
    std::size_t groups_written = 0;
    std::size_t groups_failed = 0;
};

RemoteScoringResult run_remote_scoring(std::span<const corpus::ProblemRecord> problems,
                                       inference::Endpoint& endpoint,
                                       const inference::PromptTemplate& prompt,
                                       const GrpoConfig& cfg,
                                       const rewards::RewardConfig& reward_cfg,
                                       const corpus::Tokenizer& tokenizer,
                                       const std::filesystem::path& out_dir);

} // namespace mathrl::grpo

namespace mathrl::corpus {

template <>
struct RecordCodec<grpo::ToyProblem> {
    static grpo::ToyProblem parse(const json& j);
    static json dump(const grpo::ToyProblem& p);
};

} // namespace mathrl::corpus
