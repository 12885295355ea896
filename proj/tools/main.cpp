// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Single entrypoint wiring the pipeline: curate, sft-plan, grpo-train,
// eval, report diff, reward-check. Every artifact-producing subcommand
// writes a manifest.json beside its outputs. Exit codes: 0 success,
// 1 validation error (bad flags, bad config, bad input data), 2 runtime
// failure (I/O, endpoint).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mathrl/corpus.hpp"
#include "mathrl/curation.hpp"
#include "mathrl/errors.hpp"
#include "mathrl/evalharness.hpp"
#include "mathrl/grpo.hpp"
#include "mathrl/inference.hpp"
#include "mathrl/keyvalue.hpp"
#include "mathrl/log.hpp"
#include "mathrl/manifest.hpp"
#include "mathrl/rewards.hpp"
#include "mathrl/sftplan.hpp"
#include "mathrl/unicode.hpp"
#include "mathrl/version.hpp"

namespace fs = std::filesystem;
using namespace mathrl;

namespace {

struct GlobalArgs {
    unsigned long long seed = 0;
    bool seed_given = false;
    std::string tokenizer = "whitespace";
    std::string log_level = "info";
    std::vector<std::string> argv;
};

manifest::RunManifest make_manifest(const GlobalArgs& global, const std::string& command,
                                    keyvalue::Config effective) {
    manifest::RunManifest m;
    m.command = command;
    m.argv = global.argv;
    m.seed = global.seed;
    m.tokenizer = global.tokenizer;
    m.effective_config = std::move(effective);
    return m;
}

// Paths inside a config file resolve relative to the file's directory, so
// configs are position-independent.
fs::path resolve_relative(const fs::path& base_file, const std::string& value) {
    fs::path p(value);
    if (p.is_absolute()) return p;
    return base_file.parent_path() / p;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("failed reading " + path.string());
    return text;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// curate
// ---------------------------------------------------------------------------

int run_curate(const GlobalArgs& global, const fs::path& config_path,
               const fs::path& out_dir) {
    const auto file_cfg = keyvalue::Config::parse_file(config_path);
    const auto cfg = curation::CurationConfig::from_config(file_cfg);

    curation::SourceFiles sources;
    if (file_cfg.contains("openr1_math")) {
        sources.openr1_math =
            resolve_relative(config_path, file_cfg.get_string("openr1_math"));
    }
    if (file_cfg.contains("openr1_hard")) {
        sources.openr1_hard =
            resolve_relative(config_path, file_cfg.get_string("openr1_hard"));
    }
    if (file_cfg.contains("light_r1_stage2")) {
        sources.light_r1_stage2 =
            resolve_relative(config_path, file_cfg.get_string("light_r1_stage2"));
    }

    auto result = curation::build_sft_dataset(sources, cfg);

    fs::create_directories(out_dir);
    corpus::write_records(out_dir / "sft_dataset.jsonl", result.triplets);
    write_text_file(out_dir / "curation_stats.json", result.stats.to_json().dump(2) + "\n");

    keyvalue::Config effective = cfg.to_config();
    for (const char* key : {"openr1_math", "openr1_hard", "light_r1_stage2"}) {
        if (file_cfg.contains(key)) effective.set(key, file_cfg.get_string(key));
    }
    manifest::write(make_manifest(global, "curate", std::move(effective)), out_dir);

    log::info("curated " + std::to_string(result.triplets.size()) + " triplets -> " +
              (out_dir / "sft_dataset.jsonl").string());
    return 0;
}

// ---------------------------------------------------------------------------
// sft-plan
// ---------------------------------------------------------------------------

int run_sft_plan(const GlobalArgs& global, const fs::path& data_path,
                 const fs::path& out_file, const std::vector<std::string>& overrides) {
    keyvalue::Config override_cfg;
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw ValidationError("--set expects key=value, got \"" + kv + "\"");
        }
        override_cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    const auto cfg = sftplan::SftConfig::with_overrides(override_cfg);

    auto parsed = corpus::read_records<curation::SftTriplet>(
        data_path, corpus::ErrorPolicy::fail_fast);
    const auto tokenizer = corpus::make_tokenizer(global.tokenizer);
    const auto scan = sftplan::scan_dataset(parsed.records, *tokenizer, cfg.max_seq_len);

    if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
    const auto effective = sftplan::emit_sft_config(scan, cfg, out_file);

    const fs::path out_dir =
        out_file.has_parent_path() ? out_file.parent_path() : fs::path(".");
    if (cfg.packing) {
        auto bins = sftplan::pack_sequences(scan.samples, cfg.max_seq_len);
        sftplan::write_packing_report(bins, cfg.max_seq_len,
                                      out_dir / "packing_report.csv");
        log::info("packed " + std::to_string(scan.samples.size()) + " samples into " +
                  std::to_string(bins.size()) + " bins");
    }
    manifest::write(make_manifest(global, "sft-plan", effective), out_dir);
    log::info("wrote training config -> " + out_file.string());
    return 0;
}

// ---------------------------------------------------------------------------
// grpo-train
// ---------------------------------------------------------------------------

int run_grpo_train(const GlobalArgs& global, const std::string& mode,
                   const fs::path& config_path, const fs::path& data_path,
                   const fs::path& out_dir, const std::string& endpoint_spec) {
    const auto file_cfg = keyvalue::Config::parse_file(config_path);
    auto cfg = grpo::GrpoConfig::from_config(file_cfg);
    const auto reward_cfg = rewards::reward_config_from(file_cfg);
    if (global.seed_given) cfg.seed = global.seed;

    const auto tokenizer = corpus::make_tokenizer(global.tokenizer);
    fs::create_directories(out_dir);

    keyvalue::Config effective = cfg.to_config();
    rewards::reward_config_into(reward_cfg, effective);
    effective.set("mode", mode);

    if (mode == "toy") {
        const auto problems = grpo::load_toy_problems(data_path, *tokenizer);
        const auto result = grpo::run_toy_training(problems, cfg, reward_cfg, out_dir);
        manifest::write(make_manifest(global, "grpo-train", std::move(effective)),
                        out_dir);
        const auto& last = result.metrics.back();
        log::info("trained " + std::to_string(result.metrics.size()) +
                  " steps; final mean reward " + std::to_string(last.mean_reward) +
                  ", mean length " + std::to_string(last.mean_length));
        return 0;
    }

    // remote
    if (endpoint_spec.empty()) {
        throw ValidationError("--endpoint is required with --mode remote");
    }
    auto parsed =
        corpus::read_records<corpus::ProblemRecord>(data_path, corpus::ErrorPolicy::fail_fast);
    auto endpoint = inference::make_endpoint(endpoint_spec, *tokenizer);
    inference::PromptTemplate prompt;
    prompt.system_prompt = cfg.system_prompt;
    const auto result = grpo::run_remote_scoring(parsed.records, *endpoint, prompt, cfg,
                                                 reward_cfg, *tokenizer, out_dir);
    effective.set("endpoint", endpoint_spec);
    manifest::write(make_manifest(global, "grpo-train", std::move(effective)), out_dir);
    log::info("scored " + std::to_string(result.groups_written) + " groups (" +
              std::to_string(result.groups_failed) + " failed)");
    return result.groups_failed == 0 ? 0 : 2;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

int run_eval_cmd(const GlobalArgs& global, const fs::path& benchmark_path,
                 const std::string& endpoint_spec, const fs::path& config_path,
                 const fs::path& out_dir) {
    const auto file_cfg = keyvalue::Config::parse_file(config_path);
    const auto cfg = evalharness::EvalConfig::from_config(file_cfg);

    auto parsed = corpus::read_records<corpus::ProblemRecord>(
        benchmark_path, corpus::ErrorPolicy::fail_fast);
    const auto tokenizer = corpus::make_tokenizer(global.tokenizer);
    auto endpoint = inference::make_endpoint(endpoint_spec, *tokenizer);

    const auto runs = evalharness::run_eval(parsed.records, cfg, *endpoint, *tokenizer);
    const auto report = evalharness::build_report(runs, cfg, *tokenizer);
    fs::create_directories(out_dir);
    evalharness::emit_report(report, out_dir);

    keyvalue::Config effective = cfg.to_config();
    effective.set("endpoint", endpoint_spec);
    manifest::write(make_manifest(global, "eval", std::move(effective)), out_dir);
    log::info("pass@1 " + std::to_string(report.aggregate_pass1_pct) + "% over " +
              std::to_string(report.per_problem.size()) + " problems -> " +
              (out_dir / "report.json").string());
    return 0;
}

// ---------------------------------------------------------------------------
// report diff
// ---------------------------------------------------------------------------

int run_report_diff(const GlobalArgs& global, const fs::path& dir_a,
                    const fs::path& dir_b, const fs::path& out_dir) {
    const auto report_a = evalharness::load_report(dir_a);
    const auto report_b = evalharness::load_report(dir_b);
    const auto deltas = evalharness::per_problem_delta(report_a, report_b);
    fs::create_directories(out_dir);
    evalharness::emit_deltas(deltas, out_dir);

    keyvalue::Config effective;
    effective.set("a", dir_a.string());
    effective.set("b", dir_b.string());
    effective.set("benchmark_a", report_a.benchmark_tag);
    effective.set("benchmark_b", report_b.benchmark_tag);
    effective.set("model_a", report_a.model_tag);
    effective.set("model_b", report_b.model_tag);
    manifest::write(make_manifest(global, "report diff", std::move(effective)), out_dir);
    log::info("wrote " + std::to_string(deltas.size()) + " delta rows -> " +
              (out_dir / "deltas.csv").string());
    return 0;
}

// ---------------------------------------------------------------------------
// reward-check
// ---------------------------------------------------------------------------

int run_reward_check(const GlobalArgs& global, const fs::path& text_file,
                     const std::string& answer, const std::string& config_path) {
    rewards::RewardConfig cfg;
    if (!config_path.empty()) {
        cfg = rewards::reward_config_from(keyvalue::Config::parse_file(config_path));
    }
    const std::string text = read_text_file(text_file);
    const auto tokenizer = corpus::make_tokenizer(global.tokenizer);
    const auto breakdown = rewards::composite_reward(text, answer, *tokenizer, cfg);
    std::cout << rewards::to_json(breakdown, cfg).dump(2) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Math-reasoning post-training toolkit: dataset curation, SFT "
                 "planning, GRPO training, and pass@1 evaluation"};
    app.set_version_flag("--version", std::string(kToolName) + " " +
                                          std::string(kVersion));
    app.fallthrough();
    app.require_subcommand(1);

    GlobalArgs global;
    app.add_option("--seed", global.seed, "Seed for every stochastic component")
        ->capture_default_str();
    app.add_option("--tokenizer", global.tokenizer,
                   "Token counting scheme: whitespace or byte4")
        ->check(CLI::IsMember({"whitespace", "byte4"}))
        ->capture_default_str();
    app.add_option("--log-level", global.log_level, "debug, info, warn, or error")
        ->check(CLI::IsMember({"debug", "info", "warn", "error"}))
        ->capture_default_str();

    // curate
    auto* curate = app.add_subcommand("curate", "Build the SFT dataset from curation "
                                                "source files");
    std::string curate_config;
    std::string curate_out;
    curate->add_option("--config", curate_config, "Key-value curation config")
        ->required()
        ->check(CLI::ExistingFile);
    curate->add_option("--out", curate_out, "Output directory")->required();

    // sft-plan
    auto* sft_plan = app.add_subcommand("sft-plan", "Scan an SFT dataset and emit a "
                                                    "training config plus packing report");
    std::string plan_data;
    std::string plan_out;
    std::vector<std::string> plan_overrides;
    sft_plan->add_option("--data", plan_data, "SFT triplets (JSONL)")
        ->required()
        ->check(CLI::ExistingFile);
    sft_plan->add_option("--out", plan_out, "Output config file")->required();
    sft_plan->add_option("--set", plan_overrides,
                         "Override a training key, e.g. --set epochs=5");

    // grpo-train
    auto* grpo_train = app.add_subcommand("grpo-train", "Run GRPO: toy in-process "
                                                        "policy or remote scoring");
    std::string grpo_mode;
    std::string grpo_config;
    std::string grpo_data;
    std::string grpo_out;
    std::string grpo_endpoint;
    grpo_train->add_option("--mode", grpo_mode, "toy or remote")
        ->required()
        ->check(CLI::IsMember({"toy", "remote"}));
    grpo_train->add_option("--config", grpo_config, "Key-value GRPO config")
        ->required()
        ->check(CLI::ExistingFile);
    grpo_train->add_option("--data", grpo_data, "Problems (JSONL)")
        ->required()
        ->check(CLI::ExistingFile);
    grpo_train->add_option("--out", grpo_out, "Output directory")->required();
    grpo_train->add_option("--endpoint", grpo_endpoint,
                           "sim:<fixture> or http(s) URL (remote mode)");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Sample k completions per problem and "
                                                "report pass@1 with budget curves");
    std::string eval_benchmark;
    std::string eval_endpoint;
    std::string eval_config;
    std::string eval_out;
    eval_cmd->add_option("--benchmark", eval_benchmark, "Benchmark problems (JSONL)")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--endpoint", eval_endpoint, "sim:<fixture> or http(s) URL")
        ->required();
    eval_cmd->add_option("--config", eval_config, "Key-value eval config")
        ->required()
        ->check(CLI::ExistingFile);
    eval_cmd->add_option("--out", eval_out, "Output directory")->required();

    // report diff
    auto* report = app.add_subcommand("report", "Report utilities");
    report->require_subcommand(1);
    auto* diff = report->add_subcommand("diff", "Per-problem deltas between two "
                                                "eval report directories");
    std::string diff_a;
    std::string diff_b;
    std::string diff_out;
    diff->add_option("--a", diff_a, "Baseline report directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    diff->add_option("--b", diff_b, "Comparison report directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    diff->add_option("--out", diff_out, "Output directory")->required();

    // reward-check
    auto* reward_check = app.add_subcommand("reward-check", "Print the composite "
                                                            "reward breakdown for one "
                                                            "completion as JSON");
    std::string rc_text_file;
    std::string rc_answer;
    std::string rc_config;
    reward_check->add_option("--text-file", rc_text_file, "Completion text file")
        ->required()
        ->check(CLI::ExistingFile);
    reward_check->add_option("--answer", rc_answer, "Ground-truth answer")->required();
    reward_check->add_option("--config", rc_config, "Key-value reward config")
        ->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // prints help, exit 0
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e); // prints the error naming the offending flag
        return 1;
    }

    global.seed_given = app.count("--seed") > 0;
    global.argv.assign(argv, argv + argc);
    log::set_threshold(log::parse_level(global.log_level));

    try {
        if (curate->parsed()) {
            return run_curate(global, curate_config, curate_out);
        }
        if (sft_plan->parsed()) {
            return run_sft_plan(global, plan_data, plan_out, plan_overrides);
        }
        if (grpo_train->parsed()) {
            return run_grpo_train(global, grpo_mode, grpo_config, grpo_data, grpo_out,
                                  grpo_endpoint);
        }
        if (eval_cmd->parsed()) {
            return run_eval_cmd(global, eval_benchmark, eval_endpoint, eval_config,
                                eval_out);
        }
        if (report->parsed()) {
            return run_report_diff(global, diff_a, diff_b, diff_out);
        }
        if (reward_check->parsed()) {
            return run_reward_check(global, rc_text_file, rc_answer, rc_config);
        }
    } catch (const ValidationError& e) {
        std::cerr << kToolName << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << kToolName << ": " << e.what() << "\n";
        return 2;
    }
    return 0;
}
