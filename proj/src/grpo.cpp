// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "mathrl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "mathrl/errors.hpp"
#include "mathrl/log.hpp"
#include "mathrl/sftplan.hpp"

namespace mathrl::grpo {

void GrpoConfig::validate() const {
    if (group_size < 2) throw ValidationError("group_size must be >= 2");
    if (beta < 0.0) throw ValidationError("beta must be non-negative");
    if (!(clip_eps > 0.0 && clip_eps < 1.0)) {
        throw ValidationError("clip_eps must lie in (0, 1)");
    }
    if (learning_rate < 0.0) throw ValidationError("learning_rate must be non-negative");
    if (total_steps < 1) throw ValidationError("total_steps must be >= 1");
    if (max_completion_tokens < 1) {
        throw ValidationError("max_completion_tokens must be >= 1");
    }
    if (lr_schedule != "cosine") {
        throw ValidationError("lr_schedule \"" + lr_schedule + "\" unsupported (only cosine)");
    }
    if (prompts_per_step < 1) throw ValidationError("prompts_per_step must be >= 1");
    if (max_in_flight < 1) throw ValidationError("max_in_flight must be >= 1");
    if (system_prompt.empty()) throw ValidationError("system_prompt must be non-empty");
}

GrpoConfig GrpoConfig::from_config(const keyvalue::Config& cfg) {
    GrpoConfig out;
    out.group_size = static_cast<int>(cfg.get_int_or("group_size", out.group_size));
    out.beta = cfg.get_double_or("beta", out.beta);
    out.clip_eps = cfg.get_double_or("clip_eps", out.clip_eps);
    out.learning_rate = cfg.get_double_or("learning_rate", out.learning_rate);
    out.total_steps = cfg.get_int_or("total_steps", out.total_steps);
    out.max_completion_tokens =
        cfg.get_int_or("max_completion_tokens", out.max_completion_tokens);
    out.lr_schedule = cfg.get_string_or("lr_schedule", out.lr_schedule);
    out.prompts_per_step =
        static_cast<int>(cfg.get_int_or("prompts_per_step", out.prompts_per_step));
    out.sample_std = cfg.get_bool_or("sample_std", out.sample_std);
    out.seed = static_cast<std::uint64_t>(cfg.get_int_or("seed", 0));
    out.system_prompt = cfg.get_string_or("system_prompt", out.system_prompt);
    out.max_in_flight = static_cast<int>(cfg.get_int_or("max_in_flight", out.max_in_flight));
    out.validate();
    return out;
}

keyvalue::Config GrpoConfig::to_config() const {
    keyvalue::Config cfg;
    cfg.set_int("group_size", group_size);
    cfg.set_double("beta", beta);
    cfg.set_double("clip_eps", clip_eps);
    cfg.set_double("learning_rate", learning_rate);
    cfg.set_int("total_steps", total_steps);
    cfg.set_int("max_completion_tokens", max_completion_tokens);
    cfg.set("lr_schedule", lr_schedule);
    cfg.set_int("prompts_per_step", prompts_per_step);
    cfg.set_bool("sample_std", sample_std);
    cfg.set_int("seed", static_cast<long long>(seed));
    cfg.set("system_prompt", system_prompt);
    cfg.set_int("max_in_flight", max_in_flight);
    return cfg;
}

// ---------------------------------------------------------------------------
// Advantage standardization and KL
// ---------------------------------------------------------------------------

std::vector<double> group_advantages(std::span<const double> rewards, bool sample_std) {
    const std::size_t n = rewards.size();
    if (n < 2) throw ValidationError("group_advantages needs at least 2 rewards");
    for (double r : rewards) {
        if (!std::isfinite(r)) throw ValidationError("rewards must be finite");
    }
    // Exact-equality screen: a constant group carries no ranking signal, and
    // computing (r - mean)/std on one would amplify rounding noise.
    const auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
    if (*lo == *hi) return std::vector<double>(n, 0.0);

    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(sample_std ? n - 1 : n);
    const double std_dev = std::sqrt(var);
    if (std_dev == 0.0) return std::vector<double>(n, 0.0);

    std::vector<double> advantages(n);
    for (std::size_t i = 0; i < n; ++i) advantages[i] = (rewards[i] - mean) / std_dev;
    return advantages;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw ValidationError("kl_divergence distributions differ in support size");
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0 || !std::isfinite(p[i]) || !std::isfinite(q[i])) {
            throw ValidationError("kl_divergence requires finite non-negative masses");
        }
        if (p[i] == 0.0) continue;
        if (q[i] == 0.0) {
            throw ValidationError("kl_divergence support mismatch: q is zero where p > 0");
        }
        kl += p[i] * std::log(p[i] / q[i]);
    }
    return kl;
}

// ---------------------------------------------------------------------------
// Toy policy
// ---------------------------------------------------------------------------

CategoricalToyPolicy::CategoricalToyPolicy(std::vector<std::vector<double>> logits)
    : logits_(std::move(logits)) {
    for (const auto& row : logits_) {
        if (row.empty()) throw ValidationError("every prompt needs at least one candidate");
        for (double v : row) {
            if (!std::isfinite(v)) throw ValidationError("logits must be finite");
        }
    }
}

namespace {

struct Softmax {
    std::vector<double> probs;
    double log_norm = 0.0; // max + log(sum exp(l - max))
};

Softmax softmax(std::span<const double> logits) {
    const double max = *std::max_element(logits.begin(), logits.end());
    Softmax out;
    out.probs.resize(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out.probs[i] = std::exp(logits[i] - max);
        sum += out.probs[i];
    }
    for (double& p : out.probs) p /= sum;
    out.log_norm = max + std::log(sum);
    return out;
}

} // namespace

std::vector<double> CategoricalToyPolicy::probabilities(std::size_t prompt) const {
    return softmax(logits_.at(prompt)).probs;
}

double CategoricalToyPolicy::log_probability(std::size_t prompt,
                                             std::size_t candidate) const {
    const auto& row = logits_.at(prompt);
    if (candidate >= row.size()) throw ValidationError("candidate index out of range");
    return row[candidate] - softmax(row).log_norm;
}

int CategoricalToyPolicy::sample(std::size_t prompt, double u) const {
    if (u < 0.0 || u >= 1.0) throw ValidationError("sample expects u in [0, 1)");
    const auto probs = probabilities(prompt);
    double cum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        cum += probs[i];
        if (u < cum) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size() - 1); // cumulative rounded below 1
}

std::string CategoricalToyPolicy::serialize() const {
    std::string out = std::to_string(logits_.size()) + "\n";
    char buf[64];
    for (const auto& row : logits_) {
        out += std::to_string(row.size());
        for (double v : row) {
            std::snprintf(buf, sizeof(buf), " %.17g", v);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

CategoricalToyPolicy CategoricalToyPolicy::deserialize(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::size_t prompts = 0;
    if (!(in >> prompts)) throw ValidationError("policy file: missing prompt count");
    std::vector<std::vector<double>> logits(prompts);
    for (auto& row : logits) {
        std::size_t k = 0;
        if (!(in >> k) || k == 0) {
            throw ValidationError("policy file: bad candidate count");
        }
        row.resize(k);
        for (double& v : row) {
            if (!(in >> v)) throw ValidationError("policy file: missing logit value");
        }
    }
    return CategoricalToyPolicy(std::move(logits));
}

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

ObjectiveEval grpo_objective(const GenerationGroup& group,
                             std::span<const double> new_logits,
                             std::span<const double> ref_logits, const GrpoConfig& cfg) {
    const std::size_t g = group.advantages.size();
    if (g < 2) throw ValidationError("grpo_objective needs a group of at least 2");
    if (group.logprob_old.size() != g || group.candidate_indices.size() != g) {
        throw ValidationError("group advantage/logprob/candidate lengths disagree");
    }
    if (new_logits.empty() || new_logits.size() != ref_logits.size()) {
        throw ValidationError("new and reference logits must have equal non-zero size");
    }
    const auto check_finite = [](std::span<const double> xs, const char* what) {
        for (double x : xs) {
            if (!std::isfinite(x)) {
                throw ValidationError(std::string(what) + " must be finite");
            }
        }
    };
    check_finite(group.logprob_old, "old log-probabilities");
    check_finite(group.advantages, "advantages");
    check_finite(new_logits, "new logits");
    check_finite(ref_logits, "reference logits");

    const std::size_t k = new_logits.size();
    const Softmax pi_new = softmax(new_logits);
    const Softmax pi_ref = softmax(ref_logits);

    ObjectiveEval out;
    out.gradient.assign(k, 0.0);
    const double inv_g = 1.0 / static_cast<double>(g);
    std::size_t clipped = 0;

    for (std::size_t i = 0; i < g; ++i) {
        const int c = group.candidate_indices[i];
        if (c < 0 || std::cmp_greater_equal(c, k)) {
            throw ValidationError("candidate index out of range");
        }
        const double lp_new = new_logits[static_cast<std::size_t>(c)] - pi_new.log_norm;
        const double rho = std::exp(lp_new - group.logprob_old[i]);
        const double a = group.advantages[i];
        const double unclipped = rho * a;
        const double clipped_term =
            std::clamp(rho, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * a;
        out.surrogate += inv_g * std::min(unclipped, clipped_term);
        if (clipped_term < unclipped) {
            ++clipped; // clipping is active and binding; gradient is zero here
        } else {
            // d min/d rho = a on the unclipped branch; d rho/d theta_j =
            // rho * (1[j = c] - pi_j).
            const double scale = inv_g * a * rho;
            for (std::size_t j = 0; j < k; ++j) out.gradient[j] -= scale * pi_new.probs[j];
            out.gradient[static_cast<std::size_t>(c)] += scale;
        }
    }
    out.clip_fraction = static_cast<double>(clipped) * inv_g;

    out.kl = kl_divergence(pi_new.probs, pi_ref.probs);
    if (cfg.beta != 0.0) {
        // d KL / d theta_j = pi_j * (log(pi_j / ref_j) - KL).
        for (std::size_t j = 0; j < k; ++j) {
            const double log_ratio = std::log(pi_new.probs[j] / pi_ref.probs[j]);
            out.gradient[j] -= cfg.beta * pi_new.probs[j] * (log_ratio - out.kl);
        }
    }
    out.objective = out.surrogate - cfg.beta * out.kl;
    return out;
}

// ---------------------------------------------------------------------------
// Toy training
// ---------------------------------------------------------------------------

nlohmann::ordered_json StepMetrics::to_json() const {
    nlohmann::ordered_json j;
    j["step"] = step;
    j["lr"] = lr;
    j["mean_reward"] = mean_reward;
    j["mean_length"] = mean_length;
    j["kl"] = kl;
    j["clip_fraction"] = clip_fraction;
    j["objective"] = objective;
    return j;
}

std::vector<ToyProblem> load_toy_problems(const std::filesystem::path& path,
                                          const corpus::Tokenizer& tokenizer) {
    auto parsed = corpus::read_records<ToyProblem>(path, corpus::ErrorPolicy::fail_fast);
    std::unordered_set<std::string> ids;
    for (auto& p : parsed.records) {
        if (!ids.insert(p.id).second) {
            throw ValidationError("duplicate toy problem id \"" + p.id + "\" in " +
                                  path.string());
        }
        if (p.candidates.size() < 2) {
            throw ValidationError("toy problem \"" + p.id +
                                  "\" needs at least 2 candidates");
        }
        for (auto& c : p.candidates) {
            if (c.token_count < 0) {
                c.token_count = static_cast<long long>(tokenizer.count(c.text));
            }
        }
    }
    return std::move(parsed.records);
}

namespace {

// 53-bit uniform in [0, 1); stable across platforms for a fixed engine state.
double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace

StepMetrics train_step(CategoricalToyPolicy& policy, const CategoricalToyPolicy& ref,
                       std::span<const ToyProblem> problems,
                       std::span<const std::vector<double>> candidate_rewards,
                       long long step, const GrpoConfig& cfg, std::mt19937_64& rng) {
    cfg.validate();
    if (problems.empty()) throw ValidationError("train_step needs at least one problem");
    if (policy.num_prompts() != problems.size() ||
        candidate_rewards.size() != problems.size()) {
        throw ValidationError("policy/problem/reward table sizes disagree");
    }
    if (step < 1 || step > cfg.total_steps) {
        throw ValidationError("step " + std::to_string(step) + " outside [1, total_steps]");
    }

    // Schedule position is the number of completed steps, so step 1 trains
    // at the full base rate and no step trains at exactly zero.
    const double lr = sftplan::cosine_lr(step - 1, cfg.total_steps, cfg.learning_rate);

    // All groups in one step sample from (and differentiate at) the same
    // pre-update policy; updates apply once, after the whole batch.
    const CategoricalToyPolicy snapshot = policy;

    StepMetrics metrics;
    metrics.step = step;
    metrics.lr = lr;

    std::vector<std::vector<double>> grad_acc(problems.size());
    const std::size_t batch = static_cast<std::size_t>(cfg.prompts_per_step);
    const std::size_t g = static_cast<std::size_t>(cfg.group_size);
    double reward_sum = 0.0, length_sum = 0.0, kl_sum = 0.0;
    double clip_sum = 0.0, objective_sum = 0.0;

    for (std::size_t j = 0; j < batch; ++j) {
        const std::size_t p =
            (static_cast<std::size_t>(step - 1) * batch + j) % problems.size();
        GenerationGroup group;
        group.prompt_id = problems[p].id;
        group.rewards.reserve(g);
        for (std::size_t i = 0; i < g; ++i) {
            const int c = snapshot.sample(p, uniform01(rng));
            group.candidate_indices.push_back(c);
            group.logprob_old.push_back(
                snapshot.log_probability(p, static_cast<std::size_t>(c)));
            const auto& candidate = problems[p].candidates[static_cast<std::size_t>(c)];
            group.rewards.push_back(candidate_rewards[p][static_cast<std::size_t>(c)]);
            group.token_counts.push_back(candidate.token_count);
            reward_sum += group.rewards.back();
            length_sum += static_cast<double>(candidate.token_count);
        }
        group.advantages = group_advantages(group.rewards, cfg.sample_std);

        const auto eval = grpo_objective(group, snapshot.logits(p), ref.logits(p), cfg);
        if (grad_acc[p].empty()) grad_acc[p].assign(eval.gradient.size(), 0.0);
        for (std::size_t idx = 0; idx < eval.gradient.size(); ++idx) {
            grad_acc[p][idx] += eval.gradient[idx];
        }
        kl_sum += eval.kl;
        clip_sum += eval.clip_fraction;
        objective_sum += eval.objective;
    }

    // Ascent on the batch-mean objective.
    const double scale = lr / static_cast<double>(batch);
    for (std::size_t p = 0; p < problems.size(); ++p) {
        if (grad_acc[p].empty()) continue;
        auto& row = policy.mutable_logits(p);
        for (std::size_t idx = 0; idx < row.size(); ++idx) {
            row[idx] += scale * grad_acc[p][idx];
        }
    }

    const double samples = static_cast<double>(batch * g);
    metrics.mean_reward = reward_sum / samples;
    metrics.mean_length = length_sum / samples;
    metrics.kl = kl_sum / static_cast<double>(batch);
    metrics.clip_fraction = clip_sum / static_cast<double>(batch);
    metrics.objective = objective_sum / static_cast<double>(batch);
    return metrics;
}

ToyTrainingResult run_toy_training(std::span<const ToyProblem> problems,
                                   const GrpoConfig& cfg,
                                   const rewards::RewardConfig& reward_cfg,
                                   const std::optional<std::filesystem::path>& out_dir) {
    cfg.validate();
    reward_cfg.validate();
    if (problems.empty()) throw ValidationError("toy training needs at least one problem");

    std::vector<std::vector<double>> init_logits;
    std::vector<std::vector<double>> candidate_rewards;
    init_logits.reserve(problems.size());
    candidate_rewards.reserve(problems.size());
    for (const auto& p : problems) {
        init_logits.emplace_back(p.candidates.size(), 0.0);
        auto& row = candidate_rewards.emplace_back();
        row.reserve(p.candidates.size());
        for (const auto& c : p.candidates) {
            row.push_back(
                rewards::composite_reward_counted(c.text, p.answer, c.token_count, reward_cfg)
                    .total);
        }
    }

    CategoricalToyPolicy policy(init_logits);
    const CategoricalToyPolicy ref(init_logits);
    std::mt19937_64 rng(cfg.seed);

    std::ofstream metrics_out;
    if (out_dir) {
        std::filesystem::create_directories(*out_dir / "checkpoints");
        metrics_out.open(*out_dir / "metrics.jsonl", std::ios::binary | std::ios::trunc);
        if (!metrics_out.is_open()) {
            throw IoError("cannot open " + (*out_dir / "metrics.jsonl").string());
        }
    }

    ToyTrainingResult result{policy, {}};
    for (long long step = 1; step <= cfg.total_steps; ++step) {
        auto metrics =
            train_step(result.policy, ref, problems, candidate_rewards, step, cfg, rng);
        if (out_dir) {
            metrics_out << metrics.to_json().dump() << '\n';
            char name[32];
            std::snprintf(name, sizeof(name), "step_%04lld.txt",
                          static_cast<long long>(step));
            const auto ckpt_path = *out_dir / "checkpoints" / name;
            std::ofstream ckpt(ckpt_path, std::ios::binary | std::ios::trunc);
            if (!ckpt.is_open()) throw IoError("cannot open " + ckpt_path.string());
            ckpt << result.policy.serialize();
            ckpt.flush();
            if (!ckpt) throw IoError("write failed for " + ckpt_path.string());
        }
        result.metrics.push_back(std::move(metrics));
    }
    if (out_dir) {
        metrics_out.flush();
        if (!metrics_out) throw IoError("write failed for metrics.jsonl");
    }
    return result;
}

// ---------------------------------------------------------------------------
// Remote scoring
// ---------------------------------------------------------------------------

RemoteScoringResult run_remote_scoring(std::span<const corpus::ProblemRecord> problems,
                                       inference::Endpoint& endpoint,
                                       const inference::PromptTemplate& prompt,
                                       const GrpoConfig& cfg,
                                       const rewards::RewardConfig& reward_cfg,
                                       const corpus::Tokenizer& tokenizer,
                                       const std::filesystem::path& out_dir) {
    (void)tokenizer; // completions carry their own counts
    cfg.validate();
    reward_cfg.validate();
    prompt.validate();
    for (const auto& p : problems) {
        if (!p.answer || p.answer->empty()) {
            throw ValidationError("problem \"" + p.id +
                                  "\" has no answer; remote scoring needs ground truth");
        }
    }

    inference::SamplingParams params;
    params.n = cfg.group_size;
    params.max_tokens = cfg.max_completion_tokens;

    const auto batch = inference::generate_batch(problems, prompt, params, endpoint,
                                                 cfg.max_in_flight);

    std::ofstream groups_out(out_dir / "groups.jsonl", std::ios::binary | std::ios::trunc);
    std::ofstream metrics_out(out_dir / "metrics.jsonl", std::ios::binary | std::ios::trunc);
    if (!groups_out.is_open() || !metrics_out.is_open()) {
        throw IoError("cannot open group/metrics outputs under " + out_dir.string());
    }

    RemoteScoringResult result;
    for (std::size_t idx = 0; idx < problems.size(); ++idx) {
        const auto& problem = problems[idx];
        const auto& item = batch[idx];
        if (item.error) {
            nlohmann::ordered_json j;
            j["prompt_id"] = problem.id;
            j["error"] = *item.error;
            groups_out << j.dump() << '\n';
            ++result.groups_failed;
            log::warn("group for \"" + problem.id + "\" failed: " + *item.error);
            continue;
        }

        const auto& completions = item.result->completions;
        std::vector<double> totals;
        std::vector<rewards::RewardBreakdown> breakdowns;
        totals.reserve(completions.size());
        double length_sum = 0.0;
        bool ratios_available = true;
        for (const auto& c : completions) {
            breakdowns.push_back(rewards::composite_reward_counted(
                c.text, *problem.answer, c.token_count, reward_cfg));
            totals.push_back(breakdowns.back().total);
            length_sum += static_cast<double>(c.token_count);
            ratios_available = ratios_available && c.logprob.has_value();
        }
        const auto advantages = group_advantages(totals, cfg.sample_std);

        nlohmann::ordered_json j;
        j["prompt_id"] = problem.id;
        j["ratios_available"] = ratios_available;
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < completions.size(); ++i) {
            nlohmann::ordered_json cj;
            cj["text"] = completions[i].text;
            cj["token_count"] = completions[i].token_count;
            cj["truncated"] = completions[i].truncated;
            if (completions[i].logprob) {
                cj["logprob"] = *completions[i].logprob;
            } else {
                cj["logprob"] = nullptr;
            }
            cj["reward"] = rewards::to_json(breakdowns[i], reward_cfg);
            cj["advantage"] = advantages[i];
            arr.push_back(std::move(cj));
        }
        j["completions"] = std::move(arr);
        groups_out << j.dump() << '\n';

        nlohmann::ordered_json m;
        m["step"] = result.groups_written + 1;
        m["prompt_id"] = problem.id;
        double reward_sum = 0.0;
        for (double t : totals) reward_sum += t;
        m["mean_reward"] = reward_sum / static_cast<double>(totals.size());
        m["mean_length"] = length_sum / static_cast<double>(totals.size());
        m["ratios_available"] = ratios_available;
        metrics_out << m.dump() << '\n';
        ++result.groups_written;
    }
    groups_out.flush();
    metrics_out.flush();
    if (!groups_out || !metrics_out) {
        throw IoError("write failed under " + out_dir.string());
    }
    return result;
}

} // namespace mathrl::grpo

// ---------------------------------------------------------------------------
// Toy problem codec
// ---------------------------------------------------------------------------

namespace mathrl::corpus {

grpo::ToyProblem RecordCodec<grpo::ToyProblem>::parse(const json& j) {
    if (!j.is_object()) throw ValidationError("toy problem must be a JSON object");
    grpo::ToyProblem p;
    p.id = detail::require_string(j, "id", /*allow_empty=*/false);
    p.statement = detail::require_string(j, "statement", /*allow_empty=*/false);
    p.answer = detail::require_string(j, "answer", /*allow_empty=*/false);
    const json& arr = detail::require_field(j, "candidates");
    if (!arr.is_array()) throw ValidationError("field \"candidates\" must be an array");
    for (const auto& cj : arr) {
        if (!cj.is_object()) throw ValidationError("candidates must be JSON objects");
        grpo::ToyCandidate c;
        c.text = detail::require_string(cj, "text", /*allow_empty=*/false);
        if (auto it = cj.find("token_count"); it != cj.end() && !it->is_null()) {
            c.token_count = detail::require_nonneg_int(cj, "token_count");
        } else {
            c.token_count = -1; // loader fills from the configured tokenizer
        }
        p.candidates.push_back(std::move(c));
    }
    return p;
}

json RecordCodec<grpo::ToyProblem>::dump(const grpo::ToyProblem& p) {
    json j = json::object();
    j["id"] = p.id;
    j["statement"] = p.statement;
    j["answer"] = p.answer;
    json arr = json::array();
    for (const auto& c : p.candidates) {
        json cj = json::object();
        cj["text"] = c.text;
        if (c.token_count >= 0) cj["token_count"] = c.token_count;
        arr.push_back(std::move(cj));
    }
    j["candidates"] = std::move(arr);
    return j;
}

} // namespace mathrl::corpus
