// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mathrl/errors.hpp"
#include "mathrl/keyvalue.hpp"
#include "mathrl/sftplan.hpp"
#include "test_util.hpp"

using namespace mathrl;
using sftplan::PackSample;
using sftplan::SftConfig;

TEST_CASE("cosine schedule hits exact anchor points") {
    const double lr0 = 1e-5;
    CHECK(sftplan::cosine_lr(0, 100, lr0) == lr0);
    CHECK(std::abs(sftplan::cosine_lr(100, 100, lr0)) < 1e-20);
    CHECK(sftplan::cosine_lr(50, 100, lr0) == doctest::Approx(lr0 / 2).epsilon(1e-12));
    CHECK(sftplan::cosine_lr(25, 100, lr0) ==
          doctest::Approx(lr0 * 0.8535533905932737).epsilon(1e-12));
    CHECK(sftplan::cosine_lr(75, 100, lr0) ==
          doctest::Approx(lr0 * 0.14644660940672624).epsilon(1e-12));

    // Monotone non-increasing across the whole schedule.
    double prev = sftplan::cosine_lr(0, 200, lr0);
    for (long long s = 1; s <= 200; ++s) {
        const double cur = sftplan::cosine_lr(s, 200, lr0);
        CHECK(cur <= prev);
        prev = cur;
    }

    CHECK_THROWS_AS((void)sftplan::cosine_lr(-1, 10, lr0), ValidationError);
    CHECK_THROWS_AS((void)sftplan::cosine_lr(11, 10, lr0), ValidationError);
    CHECK_THROWS_AS((void)sftplan::cosine_lr(0, 0, lr0), ValidationError);
}

TEST_CASE("first-fit-decreasing packs the reference example") {
    std::vector<PackSample> samples = {
        {"a9", 9}, {"d5", 5}, {"c5", 5}, {"b5", 5}, {"e3", 3}, {"f2", 2}};
    const auto bins = sftplan::pack_sequences(samples, 10);
    REQUIRE(bins.size() == 3);
    CHECK(bins[0].sample_ids == std::vector<std::string>{"a9"});
    CHECK(bins[0].total_tokens == 9);
    // Equal counts break ties by id, so b5 and c5 fill the second bin.
    CHECK(bins[1].sample_ids == std::vector<std::string>{"b5", "c5"});
    CHECK(bins[1].total_tokens == 10);
    CHECK(bins[2].sample_ids == std::vector<std::string>{"d5", "e3", "f2"});
    CHECK(bins[2].total_tokens == 10);
}

TEST_CASE("packing rejects bad inputs") {
    CHECK_THROWS_AS((void)sftplan::pack_sequences({{"x", 5}}, 0), ValidationError);
    CHECK_THROWS_AS((void)sftplan::pack_sequences({{"x", -1}}, 10), ValidationError);
    try {
        (void)sftplan::pack_sequences({{"big1", 11}, {"ok", 4}, {"big2", 12}}, 10);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("big1") != std::string::npos);
        CHECK(msg.find("big2") != std::string::npos);
        CHECK(msg.find("ok") == std::string::npos);
    }
    CHECK(sftplan::pack_sequences({}, 10).empty());
}

TEST_CASE("packing is a capacity-respecting partition on random inputs") {
    std::mt19937_64 rng(20260820);
    std::uniform_int_distribution<long long> count(1, 24000);
    const long long cap = 24000;

    std::vector<PackSample> samples;
    std::multiset<std::string> input_ids;
    long long total = 0;
    for (int i = 0; i < 500; ++i) {
        PackSample s{"s" + std::to_string(i), count(rng)};
        total += s.token_count;
        input_ids.insert(s.id);
        samples.push_back(std::move(s));
    }

    const auto bins = sftplan::pack_sequences(samples, cap);

    std::multiset<std::string> packed_ids;
    std::map<std::string, long long> counts;
    for (const auto& s : samples) counts[s.id] = s.token_count;
    for (const auto& bin : bins) {
        CHECK_FALSE(bin.sample_ids.empty());
        CHECK(bin.total_tokens <= cap);
        long long sum = 0;
        for (const auto& id : bin.sample_ids) {
            packed_ids.insert(id);
            sum += counts.at(id);
        }
        CHECK(sum == bin.total_tokens);
    }
    CHECK(packed_ids == input_ids); // exact partition, nothing lost or duplicated

    // Volume lower bound: no packing can beat ceil(total / cap).
    const auto lower_bound = (total + cap - 1) / cap;
    CHECK(static_cast<long long>(bins.size()) >= lower_bound);

    // Input order is irrelevant: a shuffled copy packs identically.
    auto shuffled = samples;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto again = sftplan::pack_sequences(shuffled, cap);
    REQUIRE(again.size() == bins.size());
    for (std::size_t i = 0; i < bins.size(); ++i) {
        CHECK(again[i].sample_ids == bins[i].sample_ids);
        CHECK(again[i].total_tokens == bins[i].total_tokens);
    }
}

namespace {

curation::SftTriplet make_triplet(const std::string& id, const std::string& statement,
                                  long long trace_tokens) {
    curation::SftTriplet t;
    t.problem.id = id;
    t.problem.statement = statement;
    t.problem.source = corpus::SourceTag::openr1_math;
    t.trace.problem_id = id;
    t.trace.text = "reasoning \\boxed{1} </think> done";
    t.trace.token_count = trace_tokens;
    t.trace.extracted_answer = "1";
    t.trace.correct = true;
    t.answer = "1";
    return t;
}

} // namespace

TEST_CASE("dataset scan sums statement tokens plus trace tokens") {
    corpus::WhitespaceTokenizer tok;
    std::vector<curation::SftTriplet> triplets = {
        make_triplet("p0", "two plus two", 100),   // 3 + 100
        make_triplet("p1", "one", 200),            // 1 + 200
        make_triplet("p2", "a b c d", 23996),      // 4 + 23996 = 24000, at the limit
        make_triplet("p3", "x", 24000),            // 24001, overlong
    };
    const auto scan = sftplan::scan_dataset(triplets, tok, 24000);
    REQUIRE(scan.samples.size() == 4);
    CHECK(scan.samples[0].id == "p0");
    CHECK(scan.samples[0].token_count == 103);
    CHECK(scan.samples[1].token_count == 201);
    CHECK(scan.samples[2].token_count == 24000);
    CHECK(scan.samples[3].token_count == 24001);
    CHECK(scan.total_tokens == 103 + 201 + 24000 + 24001);
    CHECK(scan.max_sample_tokens == 24001);
    CHECK(scan.overlong_ids == std::vector<std::string>{"p3"});
    CHECK_THROWS_AS((void)sftplan::scan_dataset(triplets, tok, 0), ValidationError);
}

TEST_CASE("sft config overrides and validation") {
    const SftConfig defaults;
    CHECK(defaults.epochs == 10);
    CHECK(defaults.learning_rate == doctest::Approx(1e-5));
    CHECK(defaults.scheduler == "cosine");
    CHECK(defaults.max_seq_len == 24000);
    CHECK(defaults.packing);
    CHECK_NOTHROW(defaults.validate());

    keyvalue::Config overrides;
    overrides.set_int("epochs", 3);
    overrides.set_double("learning_rate", 2e-5);
    overrides.set_bool("packing", false);
    const auto cfg = SftConfig::with_overrides(overrides);
    CHECK(cfg.epochs == 3);
    CHECK(cfg.learning_rate == doctest::Approx(2e-5));
    CHECK_FALSE(cfg.packing);
    CHECK(cfg.grad_accum == 8); // untouched default

    keyvalue::Config unknown;
    unknown.set_int("epoch", 3); // typo must not silently pass
    CHECK_THROWS_WITH_AS((void)SftConfig::with_overrides(unknown),
                         doctest::Contains("epoch"), ValidationError);

    keyvalue::Config bad;
    bad.set_int("epochs", 0);
    CHECK_THROWS_AS((void)SftConfig::with_overrides(bad), ValidationError);
    bad = {};
    bad.set("scheduler", "linear");
    CHECK_THROWS_AS((void)SftConfig::with_overrides(bad), ValidationError);
    bad = {};
    bad.set_double("learning_rate", 0.0);
    CHECK_THROWS_AS((void)SftConfig::with_overrides(bad), ValidationError);
}

TEST_CASE("emitted training config carries dataset summary keys") {
    corpus::WhitespaceTokenizer tok;
    std::vector<curation::SftTriplet> triplets = {
        make_triplet("p0", "s one", 10),
        make_triplet("p1", "s two", 30000), // overlong at default max_seq_len
    };
    const SftConfig cfg;
    const auto scan = sftplan::scan_dataset(triplets, tok, cfg.max_seq_len);

    testutil::TempDir tmp;
    const auto out_path = tmp / "sft_config.cfg";
    const auto emitted = sftplan::emit_sft_config(scan, cfg, out_path);

    CHECK(emitted.get_int("epochs") == 10);
    CHECK(emitted.get_string("scheduler") == "cosine");
    CHECK(emitted.get_int("dataset_samples") == 2);
    CHECK(emitted.get_int("dataset_total_tokens") == 12 + 30002);
    CHECK(emitted.get_int("dataset_max_sample_tokens") == 30002);
    CHECK(emitted.get_int("dataset_overlong_samples") == 1);
    CHECK(emitted.get_string("dataset_overlong_ids") == "p1");

    // The file on disk parses back to the same mapping.
    const auto reread = keyvalue::Config::parse_file(out_path);
    CHECK(reread.get_int("dataset_samples") == 2);
    CHECK(reread.get_string("system_prompt") == cfg.system_prompt);
    CHECK(reread.get_bool("packing"));

    // Without overlong samples the ids key is absent entirely.
    std::vector<curation::SftTriplet> small = {make_triplet("p0", "s", 10)};
    const auto scan2 = sftplan::scan_dataset(small, tok, cfg.max_seq_len);
    const auto emitted2 = sftplan::emit_sft_config(scan2, cfg, tmp / "sft2.cfg");
    CHECK(emitted2.get_int("dataset_overlong_samples") == 0);
    CHECK_FALSE(emitted2.contains("dataset_overlong_ids"));
}

TEST_CASE("packing report lists one row per bin with fill ratios") {
    std::vector<PackSample> samples = {
        {"a9", 9}, {"b5", 5}, {"c5", 5}, {"d5", 5}, {"e3", 3}, {"f2", 2}};
    const auto bins = sftplan::pack_sequences(samples, 10);
    testutil::TempDir tmp;
    const auto out_path = tmp / "packing_report.csv";
    sftplan::write_packing_report(bins, 10, out_path);

    const std::string text = testutil::read_file(out_path);
    CHECK(text == "bin,sample_ids,total_tokens,fill\n"
                  "0,a9,9,0.900000000\n"
                  "1,b5;c5,10,1.000000000\n"
                  "2,d5;e3;f2,10,1.000000000\n");
}
