// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "mathrl/evalharness.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "mathrl/csv.hpp"
#include "mathrl/errors.hpp"
#include "mathrl/rewards.hpp"

namespace mathrl::evalharness {

using json = nlohmann::ordered_json;

void EvalConfig::validate() const {
    if (k < 1) throw ValidationError("k must be >= 1");
    if (budgets.empty()) throw ValidationError("budgets must be non-empty");
    long long prev = 0;
    for (long long b : budgets) {
        if (b <= prev) {
            throw ValidationError("budgets must be positive and strictly increasing");
        }
        prev = b;
    }
    if (benchmark_tag.empty()) throw ValidationError("benchmark tag must be non-empty");
    if (model_tag.empty()) throw ValidationError("model tag must be non-empty");
    if (max_in_flight < 1) throw ValidationError("max_in_flight must be >= 1");
    if (submission_limit && *submission_limit < 1) {
        throw ValidationError("submission_limit must be >= 1");
    }
    sampling.validate();
}

namespace {

std::vector<long long> parse_budget_list(const std::string& text) {
    std::vector<long long> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        if (comma == std::string::npos) comma = text.size();
        std::string_view item(text.data() + start, comma - start);
        while (!item.empty() && (item.front() == ' ' || item.front() == '\t')) {
            item.remove_prefix(1);
        }
        while (!item.empty() && (item.back() == ' ' || item.back() == '\t')) {
            item.remove_suffix(1);
        }
        if (item.empty()) {
            throw ValidationError("key \"budgets\" has an empty list item");
        }
        long long value = 0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
        if (ec != std::errc() || ptr != item.data() + item.size()) {
            throw ValidationError("key \"budgets\" has non-integer item \"" +
                                  std::string(item) + "\"");
        }
        out.push_back(value);
        start = comma + 1;
        if (comma == text.size()) break;
    }
    return out;
}

std::string join_budget_list(std::span<const long long> budgets) {
    std::string out;
    for (std::size_t i = 0; i < budgets.size(); ++i) {
        if (i > 0) out += ",";
        out += std::to_string(budgets[i]);
    }
    return out;
}

} // namespace

EvalConfig EvalConfig::from_config(const keyvalue::Config& cfg) {
    EvalConfig out;
    out.k = static_cast<int>(cfg.get_int_or("k", out.k));
    if (cfg.contains("budgets")) {
        out.budgets = parse_budget_list(cfg.get_string("budgets"));
    }
    out.benchmark_tag = cfg.get_string_or("benchmark", out.benchmark_tag);
    out.model_tag = cfg.get_string_or("model", out.model_tag);
    out.max_in_flight = static_cast<int>(cfg.get_int_or("max_in_flight", out.max_in_flight));
    if (cfg.contains("submission_limit")) {
        out.submission_limit = static_cast<int>(cfg.get_int("submission_limit"));
    }
    out.system_prompt = cfg.get_string_or("system_prompt", out.system_prompt);
    out.sampling.temperature = cfg.get_double_or("temperature", out.sampling.temperature);
    out.sampling.top_p = cfg.get_double_or("top_p", out.sampling.top_p);
    out.sampling.max_tokens =
        static_cast<int>(cfg.get_int_or("max_tokens", out.sampling.max_tokens));
    if (cfg.contains("sampling_seed")) {
        out.sampling.seed = cfg.get_int("sampling_seed");
    }
    out.validate();
    return out;
}

keyvalue::Config EvalConfig::to_config() const {
    keyvalue::Config cfg;
    cfg.set_int("k", k);
    cfg.set("budgets", join_budget_list(budgets));
    cfg.set("benchmark", benchmark_tag);
    cfg.set("model", model_tag);
    cfg.set_int("max_in_flight", max_in_flight);
    if (submission_limit) cfg.set_int("submission_limit", *submission_limit);
    cfg.set("system_prompt", system_prompt);
    cfg.set_double("temperature", sampling.temperature);
    cfg.set_double("top_p", sampling.top_p);
    cfg.set_int("max_tokens", sampling.max_tokens);
    if (sampling.seed) cfg.set_int("sampling_seed", *sampling.seed);
    return cfg;
}

double PerProblem::pass1_fraction() const {
    if (k <= 0) throw ValidationError("per-problem k must be positive");
    return static_cast<double>(correct_count) / static_cast<double>(k);
}

ScoredSample score_sample(std::string text, long long token_count, bool truncated,
                          std::string_view reference_answer) {
    ScoredSample sample;
    sample.token_count = token_count;
    sample.truncated = truncated;
    sample.extracted = rewards::extract_boxed_answer(text);
    sample.correct =
        sample.extracted && rewards::verify_answer(*sample.extracted, reference_answer);
    sample.text = std::move(text);
    return sample;
}

ScoredSample truncate_at_budget(const ScoredSample& sample, long long budget,
                                const corpus::Tokenizer& tokenizer,
                                std::string_view reference_answer) {
    if (budget <= 0) throw ValidationError("budget must be positive");
    if (sample.token_count <= budget) return sample;
    const auto head = tokenizer.prefix(sample.text, static_cast<std::size_t>(budget));
    ScoredSample cut = score_sample(std::string(head), budget, true, reference_answer);
    return cut;
}

PassAt1 pass_at_1(std::span<const ProblemRuns> runs, int k) {
    if (k < 1) throw ValidationError("k must be >= 1");
    if (runs.empty()) throw ValidationError("no problems to aggregate");
    PassAt1 result;
    double sum_fraction = 0.0;
    double sum_mean_tokens = 0.0;
    for (const ProblemRuns& run : runs) {
        if (std::cmp_not_equal(run.samples.size(), k)) {
            throw ValidationError("problem \"" + run.problem_id + "\" has " +
                                  std::to_string(run.samples.size()) +
                                  " samples, expected " + std::to_string(k));
        }
        PerProblem row;
        row.problem_id = run.problem_id;
        row.k = k;
        long long token_sum = 0;
        for (const ScoredSample& s : run.samples) {
            if (s.correct) ++row.correct_count;
            token_sum += s.token_count;
        }
        row.mean_tokens = static_cast<double>(token_sum) / static_cast<double>(k);
        sum_fraction += row.pass1_fraction();
        sum_mean_tokens += row.mean_tokens;
        result.per_problem.push_back(std::move(row));
    }
    const double n = static_cast<double>(runs.size());
    result.aggregate_pct = 100.0 * sum_fraction / n;
    result.mean_tokens = sum_mean_tokens / n;
    return result;
}

std::vector<CurvePoint> budget_curve(std::span<const ProblemRuns> runs,
                                     std::span<const long long> budgets,
                                     const corpus::Tokenizer& tokenizer, int k) {
    if (runs.empty()) throw ValidationError("no problems to aggregate");
    std::vector<long long> ordered(budgets.begin(), budgets.end());
    std::sort(ordered.begin(), ordered.end());
    std::vector<CurvePoint> curve;
    curve.reserve(ordered.size());
    for (long long budget : ordered) {
        if (budget <= 0) throw ValidationError("budget must be positive");
        double sum_fraction = 0.0;
        double sum_mean_tokens = 0.0;
        for (const ProblemRuns& run : runs) {
            if (std::cmp_not_equal(run.samples.size(), k)) {
                throw ValidationError("problem \"" + run.problem_id + "\" has " +
                                      std::to_string(run.samples.size()) +
                                      " samples, expected " + std::to_string(k));
            }
            int correct = 0;
            long long token_sum = 0;
            for (const ScoredSample& s : run.samples) {
                if (s.token_count <= budget) {
                    // No-op truncation: the stored bit is the re-scored bit.
                    if (s.correct) ++correct;
                    token_sum += s.token_count;
                } else {
                    const ScoredSample cut =
                        truncate_at_budget(s, budget, tokenizer, run.answer);
                    if (cut.correct) ++correct;
                    token_sum += cut.token_count;
                }
            }
            sum_fraction += static_cast<double>(correct) / static_cast<double>(k);
            sum_mean_tokens +=
                static_cast<double>(token_sum) / static_cast<double>(k);
        }
        const double n = static_cast<double>(runs.size());
        CurvePoint point;
        point.budget = budget;
        point.pass1_pct = 100.0 * sum_fraction / n;
        point.mean_effective_tokens = sum_mean_tokens / n;
        curve.push_back(point);
    }
    return curve;
}

EvalReport build_report(std::span<const ProblemRuns> runs, const EvalConfig& cfg,
                        const corpus::Tokenizer& tokenizer) {
    cfg.validate();
    EvalReport report;
    report.benchmark_tag = cfg.benchmark_tag;
    report.model_tag = cfg.model_tag;
    report.tokenizer_name = tokenizer.name();
    report.k = cfg.k;
    report.sampling = cfg.sampling;
    report.budgets = cfg.budgets;
    PassAt1 aggregate = pass_at_1(runs, cfg.k);
    report.per_problem = std::move(aggregate.per_problem);
    report.aggregate_pass1_pct = aggregate.aggregate_pct;
    report.aggregate_mean_tokens = aggregate.mean_tokens;
    report.budget_curve = budget_curve(runs, cfg.budgets, tokenizer, cfg.k);
    return report;
}

std::vector<DeltaRecord> per_problem_delta(const EvalReport& a, const EvalReport& b) {
    std::unordered_map<std::string, const PerProblem*> lookup_b;
    for (const PerProblem& row : b.per_problem) lookup_b.emplace(row.problem_id, &row);

    std::set<std::string> only_a;
    std::set<std::string> only_b;
    for (const PerProblem& row : b.per_problem) only_b.insert(row.problem_id);
    for (const PerProblem& row : a.per_problem) {
        if (only_b.erase(row.problem_id) == 0) only_a.insert(row.problem_id);
    }
    if (!only_a.empty() || !only_b.empty()) {
        std::string msg = "problem id sets differ;";
        if (!only_a.empty()) {
            msg += " only in a:";
            for (const auto& id : only_a) msg += " " + id;
            msg += ";";
        }
        if (!only_b.empty()) {
            msg += " only in b:";
            for (const auto& id : only_b) msg += " " + id;
        }
        throw ValidationError(msg);
    }

    std::vector<DeltaRecord> deltas;
    deltas.reserve(a.per_problem.size());
    for (const PerProblem& base : a.per_problem) {
        const PerProblem& after = *lookup_b.at(base.problem_id);
        DeltaRecord d;
        d.problem_id = base.problem_id;
        d.baseline_pass1_pct = 100.0 * base.pass1_fraction();
        d.delta_pass1_pct = 100.0 * after.pass1_fraction() - d.baseline_pass1_pct;
        d.delta_mean_tokens = after.mean_tokens - base.mean_tokens;
        deltas.push_back(std::move(d));
    }
    std::sort(deltas.begin(), deltas.end(), [](const DeltaRecord& x, const DeltaRecord& y) {
        if (x.baseline_pass1_pct != y.baseline_pass1_pct) {
            return x.baseline_pass1_pct < y.baseline_pass1_pct;
        }
        return x.problem_id < y.problem_id;
    });
    return deltas;
}

namespace {

json sampling_to_json(const inference::SamplingParams& s) {
    json j = json::object();
    j["temperature"] = s.temperature;
    j["top_p"] = s.top_p;
    j["max_tokens"] = s.max_tokens;
    j["n"] = s.n;
    if (s.seed) {
        j["seed"] = *s.seed;
    } else {
        j["seed"] = nullptr;
    }
    return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

} // namespace

void emit_report(const EvalReport& report, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);

    json j = json::object();
    j["benchmark"] = report.benchmark_tag;
    j["model"] = report.model_tag;
    j["tokenizer"] = report.tokenizer_name;
    j["k"] = report.k;
    j["sampling"] = sampling_to_json(report.sampling);
    j["budgets"] = report.budgets;
    j["aggregate"] = json{{"pass1_pct", report.aggregate_pass1_pct},
                          {"mean_tokens", report.aggregate_mean_tokens}};
    json rows = json::array();
    for (const PerProblem& row : report.per_problem) {
        json r = json::object();
        r["problem_id"] = row.problem_id;
        r["correct_count"] = row.correct_count;
        r["k"] = row.k;
        r["pass1_pct"] = 100.0 * row.pass1_fraction();
        r["mean_tokens"] = row.mean_tokens;
        rows.push_back(std::move(r));
    }
    j["per_problem"] = std::move(rows);
    json curve = json::array();
    for (const CurvePoint& point : report.budget_curve) {
        json p = json::object();
        p["budget"] = point.budget;
        p["pass1_pct"] = point.pass1_pct;
        p["mean_effective_tokens"] = point.mean_effective_tokens;
        curve.push_back(std::move(p));
    }
    j["budget_curve"] = std::move(curve);
    write_text_file(out_dir / "report.json", j.dump(2) + "\n");

    std::vector<std::vector<std::string>> rows_csv;
    for (const PerProblem& row : report.per_problem) {
        rows_csv.push_back({row.problem_id, std::to_string(row.correct_count),
                            std::to_string(row.k),
                            csv::fixed9(100.0 * row.pass1_fraction()),
                            csv::fixed9(row.mean_tokens)});
    }
    csv::write_file(out_dir / "per_problem.csv",
                    {"problem_id", "correct_count", "k", "pass1_pct", "mean_tokens"},
                    rows_csv);

    rows_csv.clear();
    for (const CurvePoint& point : report.budget_curve) {
        rows_csv.push_back({std::to_string(point.budget), csv::fixed9(point.pass1_pct),
                            csv::fixed9(point.mean_effective_tokens)});
    }
    csv::write_file(out_dir / "budget_curve.csv",
                    {"budget", "pass1_pct", "mean_effective_tokens"}, rows_csv);
}

EvalReport load_report(const std::filesystem::path& dir) {
    const auto path = dir / "report.json";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("cannot parse " + path.string() + ": " + e.what());
    }
    try {
        EvalReport report;
        report.benchmark_tag = j.at("benchmark").get<std::string>();
        report.model_tag = j.at("model").get<std::string>();
        report.tokenizer_name = j.at("tokenizer").get<std::string>();
        report.k = j.at("k").get<int>();
        const json& s = j.at("sampling");
        report.sampling.temperature = s.at("temperature").get<double>();
        report.sampling.top_p = s.at("top_p").get<double>();
        report.sampling.max_tokens = s.at("max_tokens").get<int>();
        report.sampling.n = s.at("n").get<int>();
        if (s.contains("seed") && !s["seed"].is_null()) {
            report.sampling.seed = s["seed"].get<long long>();
        }
        report.budgets = j.at("budgets").get<std::vector<long long>>();
        report.aggregate_pass1_pct = j.at("aggregate").at("pass1_pct").get<double>();
        report.aggregate_mean_tokens = j.at("aggregate").at("mean_tokens").get<double>();
        for (const json& r : j.at("per_problem")) {
            PerProblem row;
            row.problem_id = r.at("problem_id").get<std::string>();
            row.correct_count = r.at("correct_count").get<int>();
            row.k = r.at("k").get<int>();
            row.mean_tokens = r.at("mean_tokens").get<double>();
            report.per_problem.push_back(std::move(row));
        }
        for (const json& p : j.at("budget_curve")) {
            CurvePoint point;
            point.budget = p.at("budget").get<long long>();
            point.pass1_pct = p.at("pass1_pct").get<double>();
            point.mean_effective_tokens = p.at("mean_effective_tokens").get<double>();
            report.budget_curve.push_back(point);
        }
        return report;
    } catch (const json::exception& e) {
        throw IoError("malformed report " + path.string() + ": " + e.what());
    }
}

void emit_deltas(std::span<const DeltaRecord> deltas,
                 const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::vector<std::string>> rows;
    for (const DeltaRecord& d : deltas) {
        rows.push_back({d.problem_id, csv::fixed9(d.baseline_pass1_pct),
                        csv::fixed9(d.delta_pass1_pct), csv::fixed9(d.delta_mean_tokens)});
    }
    csv::write_file(
        out_dir / "deltas.csv",
        {"problem_id", "baseline_pass1_pct", "delta_pass1_pct", "delta_mean_tokens"},
        rows);
}

std::vector<ProblemRuns> run_eval(std::span<const corpus::ProblemRecord> problems,
                                  const EvalConfig& cfg, inference::Endpoint& endpoint,
                                  const corpus::Tokenizer& tokenizer) {
    (void)tokenizer; // token counts come from the endpoint side
    cfg.validate();
    if (problems.empty()) throw ValidationError("benchmark has no problems");
    corpus::validate_unique_ids(problems, "benchmark");
    for (const auto& p : problems) {
        if (!p.answer || p.answer->empty()) {
            throw ValidationError("benchmark problem \"" + p.id +
                                  "\" lacks a reference answer");
        }
    }

    inference::PromptTemplate tmpl;
    tmpl.system_prompt = cfg.system_prompt;
    inference::SamplingParams params = cfg.sampling;
    params.n = cfg.k;
    auto items =
        inference::generate_batch(problems, tmpl, params, endpoint, cfg.max_in_flight);

    std::string failures;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].error) {
            if (!failures.empty()) failures += ", ";
            failures += problems[i].id;
        }
    }
    if (!failures.empty()) {
        throw IoError("generation failed for: " + failures);
    }

    std::vector<ProblemRuns> runs;
    runs.reserve(problems.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        ProblemRuns run;
        run.problem_id = problems[i].id;
        run.answer = *problems[i].answer;
        for (inference::Completion& c : items[i].result->completions) {
            run.samples.push_back(
                score_sample(std::move(c.text), c.token_count, c.truncated, run.answer));
        }
        runs.push_back(std::move(run));
    }
    return runs;
}

} // namespace mathrl::evalharness
