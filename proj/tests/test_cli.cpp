// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end tests against the installed binary: each case runs the real
// executable and inspects exit codes, stdout JSON, and produced artifacts.

#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mathrl/corpus.hpp"
#include "mathrl/rewards.hpp"
#include "test_util.hpp"

using namespace mathrl;
using nlohmann::json;

namespace {

std::string fixture_arg(const std::string& rel) {
    return testutil::fixture(rel).string();
}

// Extracts the JSON object printed on stdout, tolerating log lines around it.
json parse_stdout_json(const std::string& output) {
    const auto first = output.find('{');
    const auto last = output.rfind('}');
    REQUIRE(first != std::string::npos);
    REQUIRE(last != std::string::npos);
    return json::parse(output.substr(first, last - first + 1));
}

std::vector<json> parse_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.is_open());
    std::vector<json> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(json::parse(line));
    }
    return out;
}

} // namespace

TEST_CASE("help and version exit zero") {
    const auto help = testutil::run_cli("--help");
    CHECK(help.exit_code == 0);
    for (const char* name :
         {"curate", "sft-plan", "grpo-train", "eval", "report", "reward-check"}) {
        CHECK(help.output.find(name) != std::string::npos);
    }
    const auto version = testutil::run_cli("--version");
    CHECK(version.exit_code == 0);
    CHECK(version.output.find("mathrl") != std::string::npos);
}

TEST_CASE("bad invocations exit one") {
    CHECK(testutil::run_cli("frobnicate").exit_code == 1);
    CHECK(testutil::run_cli("curate").exit_code == 1); // missing required flags
    CHECK(testutil::run_cli("grpo-train --mode warp --config x --data y --out z")
              .exit_code == 1);
    const auto unknown_flag = testutil::run_cli("eval --frequency 9");
    CHECK(unknown_flag.exit_code == 1);
}

TEST_CASE("reward-check prints the breakdown the library computes") {
    const auto result = testutil::run_cli(
        "reward-check --text-file " + fixture_arg("reward/good_completion.txt") +
        " --answer 42");
    REQUIRE(result.exit_code == 0);
    const json printed = parse_stdout_json(result.output);

    const std::string text =
        testutil::read_file(testutil::fixture("reward/good_completion.txt"));
    corpus::WhitespaceTokenizer tok;
    const rewards::RewardConfig cfg;
    const auto expected = rewards::composite_reward(text, "42", tok, cfg);

    CHECK(printed.at("format").get<int>() == 1);
    CHECK(printed.at("format").get<int>() == expected.format);
    // The accuracy component is toggled off by default; cosine carries the
    // correctness signal.
    CHECK_FALSE(expected.accuracy.has_value());
    CHECK_FALSE(printed.contains("accuracy"));
    REQUIRE(expected.cosine.has_value());
    CHECK(printed.at("cosine").get<double>() == *expected.cosine);
    CHECK(printed.at("length_penalty").get<double>() == expected.length_penalty);
    CHECK(printed.at("total").get<double>() == expected.total);
}

TEST_CASE("reward-check on an unformatted completion yields penalty only") {
    const auto result = testutil::run_cli(
        "reward-check --text-file " + fixture_arg("reward/unboxed_completion.txt") +
        " --answer 42");
    REQUIRE(result.exit_code == 0);
    const json printed = parse_stdout_json(result.output);
    CHECK(printed.at("format").get<int>() == 0);
    CHECK_FALSE(printed.contains("accuracy"));
    CHECK_FALSE(printed.contains("cosine"));
    CHECK(printed.at("total").get<double>() ==
          printed.at("length_penalty").get<double>());
}

TEST_CASE("curate reproduces the expected dataset artifacts") {
    testutil::TempDir tmp;
    const auto result = testutil::run_cli(
        "curate --config " + fixture_arg("configs/curation.cfg") + " --out " +
        tmp.path().string());
    REQUIRE_MESSAGE(result.exit_code == 0, result.output);

    const auto produced = parse_jsonl(tmp / "sft_dataset.jsonl");
    const auto expected = parse_jsonl(testutil::fixture("curation/expected_sft_dataset.jsonl"));
    REQUIRE(produced.size() == expected.size());
    for (std::size_t i = 0; i < produced.size(); ++i) {
        INFO("record index ", i);
        CHECK(produced[i] == expected[i]);
    }

    const json stats = json::parse(testutil::read_file(tmp / "curation_stats.json"));
    const json want_stats = json::parse(
        testutil::read_file(testutil::fixture("curation/expected_stats.json")));
    CHECK(stats == want_stats);

    const std::string manifest = testutil::read_file(tmp / "manifest.json");
    CHECK(manifest.find("\"curate\"") != std::string::npos);
    CHECK(manifest.find("config_hash") != std::string::npos);
}

TEST_CASE("sft-plan writes the config and packing report") {
    testutil::TempDir tmp;
    const auto result = testutil::run_cli(
        "sft-plan --data " + fixture_arg("curation/expected_sft_dataset.jsonl") +
        " --out " + (tmp / "sft_config.cfg").string() + " --set epochs=2");
    REQUIRE_MESSAGE(result.exit_code == 0, result.output);
    const std::string cfg_text = testutil::read_file(tmp / "sft_config.cfg");
    CHECK(cfg_text.find("epochs = 2") != std::string::npos);
    CHECK(cfg_text.find("dataset_samples = ") != std::string::npos);
    CHECK(std::filesystem::exists(tmp / "packing_report.csv"));
    CHECK(std::filesystem::exists(tmp / "manifest.json"));

    // Unknown override keys are a validation failure.
    testutil::TempDir tmp2;
    const auto bad = testutil::run_cli(
        "sft-plan --data " + fixture_arg("curation/expected_sft_dataset.jsonl") +
        " --out " + (tmp2 / "x.cfg").string() + " --set epoch=2");
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("epoch") != std::string::npos);
}

TEST_CASE("runtime failures exit two") {
    testutil::TempDir tmp;
    const auto result = testutil::run_cli(
        "eval --benchmark " + fixture_arg("eval/benchmark_10.jsonl") +
        " --endpoint sim:" + (tmp / "missing.jsonl").string() + " --config " +
        fixture_arg("configs/eval_k64.cfg") + " --out " + (tmp / "out").string());
    CHECK(result.exit_code == 2);
}

TEST_CASE("grpo-train toy mode trains and writes artifacts") {
    testutil::TempDir tmp;
    const auto result = testutil::run_cli(
        "grpo-train --mode toy --config " + fixture_arg("configs/grpo_toy.cfg") +
        " --data " + fixture_arg("toy_bandit.jsonl") + " --out " + tmp.path().string());
    REQUIRE_MESSAGE(result.exit_code == 0, result.output);

    const std::string metrics = testutil::read_file(tmp / "metrics.jsonl");
    CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 50);
    CHECK(std::filesystem::exists(tmp / "checkpoints" / "step_0050.txt"));
    const std::string manifest = testutil::read_file(tmp / "manifest.json");
    CHECK(manifest.find("\"grpo-train\"") != std::string::npos);
    CHECK(manifest.find("\"mode\": \"toy\"") != std::string::npos);
}

TEST_CASE("eval and report diff produce comparable artifacts") {
    testutil::TempDir base_dir;
    const auto base = testutil::run_cli(
        "eval --benchmark " + fixture_arg("eval/benchmark_10.jsonl") +
        " --endpoint sim:" + fixture_arg("eval/sim_base.jsonl") + " --config " +
        fixture_arg("configs/eval_base.cfg") + " --out " + base_dir.path().string());
    REQUIRE_MESSAGE(base.exit_code == 0, base.output);

    testutil::TempDir tuned_dir;
    const auto tuned = testutil::run_cli(
        "eval --benchmark " + fixture_arg("eval/benchmark_10.jsonl") +
        " --endpoint sim:" + fixture_arg("eval/sim_tuned.jsonl") + " --config " +
        fixture_arg("configs/eval_tuned.cfg") + " --out " + tuned_dir.path().string());
    REQUIRE_MESSAGE(tuned.exit_code == 0, tuned.output);

    const json base_report = json::parse(testutil::read_file(base_dir / "report.json"));
    CHECK(base_report.at("model").get<std::string>() == "base-model");
    CHECK(base_report.at("k").get<int>() == 8);

    testutil::TempDir diff_dir;
    const auto diff = testutil::run_cli(
        "report diff --a " + base_dir.path().string() + " --b " +
        tuned_dir.path().string() + " --out " + diff_dir.path().string());
    REQUIRE_MESSAGE(diff.exit_code == 0, diff.output);

    const std::string deltas = testutil::read_file(diff_dir / "deltas.csv");
    CHECK(deltas.find("problem_id,baseline_pass1_pct,delta_pass1_pct,delta_mean_tokens\n") ==
          0);
    CHECK(std::count(deltas.begin(), deltas.end(), '\n') == 11);
    CHECK(std::filesystem::exists(diff_dir / "manifest.json"));
}
