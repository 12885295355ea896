// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include "mathrl/errors.hpp"
#include "mathrl/keyvalue.hpp"
#include "mathrl/rewards.hpp"
#include "test_util.hpp"

using namespace mathrl;

TEST_CASE("format reward accepts the canonical shape") {
    CHECK(rewards::format_reward("reasoning \\boxed{42} more </think> tail") == 1);
    CHECK(rewards::format_reward("\\boxed{42}</think>") == 1);
    CHECK(rewards::format_reward("\\boxed{}</think>") == 1); // empty box still matches
    CHECK(rewards::format_reward("line one\n\\boxed{a\nb}\n</think>\n") == 1);
    // oxed{ from any spelling: the gate keys on the token, not the backslash.
    CHECK(rewards::format_reward("boxed{1} </think>") == 1);
}

TEST_CASE("format reward rejects missing or misordered pieces") {
    CHECK(rewards::format_reward("") == 0);
    CHECK(rewards::format_reward("no box at all </think>") == 0);
    CHECK(rewards::format_reward("\\boxed{42} but no close tag") == 0);
    CHECK(rewards::format_reward("</think> \\boxed{42}") == 0); // tag before box
    CHECK(rewards::format_reward("\\boxed{unclosed </think>") == 0);
}

namespace {

// Independent oracle: the documented lazy regex with dot-matches-newline,
// spelled with [\s\S] because std::regex has no dotall flag.
bool regex_format_oracle(const std::string& text) {
    static const std::regex pattern(
        R"(^[\s\S]*?oxed\{[\s\S]*?\}[\s\S]*?</think>[\s\S]*?$)",
        std::regex::ECMAScript);
    return std::regex_match(text, pattern);
}

std::string random_format_string(std::mt19937_64& rng) {
    static const std::vector<std::string> atoms = {
        "a",        "}",       "{",        "oxed{",    "\\boxed{", "</think>",
        " ",        "\n",      "think",    "42",       "</",       "oxed",
        "\\boxed{7}",
    };
    std::uniform_int_distribution<std::size_t> len(0, 12);
    std::uniform_int_distribution<std::size_t> pick(0, atoms.size() - 1);
    std::string out;
    const std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) out += atoms[pick(rng)];
    return out;
}

} // namespace

TEST_CASE("format reward agrees with a regex engine on random strings") {
    std::mt19937_64 rng(20260822);
    int matched = 0;
    for (int i = 0; i < 400; ++i) {
        const std::string text = random_format_string(rng);
        const bool expected = regex_format_oracle(text);
        INFO("text: ", text);
        CHECK(rewards::format_reward(text) == (expected ? 1 : 0));
        matched += expected ? 1 : 0;
    }
    // The generator must exercise both outcomes for the check to mean much.
    CHECK(matched > 20);
    CHECK(matched < 380);
}

TEST_CASE("boxed answer extraction takes the last balanced box") {
    using rewards::extract_boxed_answer;
    CHECK(extract_boxed_answer("\\boxed{42}").value() == "42");
    CHECK(extract_boxed_answer("a \\boxed{1} b \\boxed{2} c").value() == "2");
    CHECK(extract_boxed_answer("\\boxed{\\frac{1}{2}}").value() == "\\frac{1}{2}");
    CHECK(extract_boxed_answer("\\boxed{x^{2}+{nested{deep}}}").value() ==
          "x^{2}+{nested{deep}}");
    CHECK(extract_boxed_answer("\\boxed{}").value().empty());
    CHECK_FALSE(extract_boxed_answer("nothing here").has_value());
    CHECK_FALSE(extract_boxed_answer("\\boxed{unbalanced").has_value());
    CHECK_FALSE(extract_boxed_answer("\\boxed{open{inner}").has_value());
    CHECK_FALSE(extract_boxed_answer("").has_value());
    // The last box governs even when an earlier one is balanced.
    CHECK_FALSE(extract_boxed_answer("\\boxed{ok} then \\boxed{bad").has_value());
}

TEST_CASE("verify_answer normalizes and compares by type") {
    using rewards::verify_answer;
    // Integers: numeric comparison, whitespace/dollar stripping.
    CHECK(verify_answer("42", "42"));
    CHECK(verify_answer(" 42 ", "42"));
    CHECK(verify_answer("$42$", "42"));
    CHECK(verify_answer("042", "42"));
    CHECK(verify_answer("-17", "-17"));
    CHECK_FALSE(verify_answer("42", "43"));
    // '+' is not part of the integer syntax; falls through to string compare.
    CHECK_FALSE(verify_answer("+5", "5"));
    // Fractions: both notations, reduction, sign normalization.
    CHECK(verify_answer("1/2", "\\frac{1}{2}"));
    CHECK(verify_answer("\\frac{2}{4}", "1/2"));
    CHECK(verify_answer("-3/4", "3/-4"));
    CHECK(verify_answer("\\frac{-1}{2}", "-1/2"));
    CHECK_FALSE(verify_answer("1/2", "2/3"));
    // Mixed type comparisons fall back to strings.
    CHECK_FALSE(verify_answer("0.5", "1/2"));
    CHECK(verify_answer("x^{2}+1", "x^{2}+1"));
    CHECK(verify_answer("\\left(3,4\\right)", "(3,4)"));
    CHECK(verify_answer("( 3, 4 )", "(3,4)"));
    // Empty on either side is never a match.
    CHECK_FALSE(verify_answer("", "42"));
    CHECK_FALSE(verify_answer("42", ""));
    CHECK_FALSE(verify_answer(" ", "$"));
    // Degenerate fractions are compared as strings.
    CHECK(verify_answer("1/0", "1/0"));
    CHECK_FALSE(verify_answer("1/0", "2/0"));
}

TEST_CASE("cosine reward hits its endpoints exactly") {
    const rewards::RewardConfig cfg;
    CHECK(rewards::cosine_reward(true, 0, cfg) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rewards::cosine_reward(true, 30000, cfg) ==
          doctest::Approx(0.1).epsilon(1e-12));
    CHECK(rewards::cosine_reward(false, 0, cfg) ==
          doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(rewards::cosine_reward(false, 30000, cfg) ==
          doctest::Approx(-0.1).epsilon(1e-12));
    // Midpoint: half-cosine hits the arithmetic mean of the endpoints.
    CHECK(rewards::cosine_reward(true, 15000, cfg) == doctest::Approx(0.55));
    CHECK(rewards::cosine_reward(false, 15000, cfg) == doctest::Approx(-0.55));
    // Beyond l_max the value clamps to the far endpoint.
    CHECK(rewards::cosine_reward(true, 90000, cfg) == doctest::Approx(0.1));
    CHECK(rewards::cosine_reward(false, 90000, cfg) == doctest::Approx(-0.1));
    CHECK_THROWS_AS((void)rewards::cosine_reward(true, -1, cfg), ValidationError);
}

TEST_CASE("cosine reward orders correct above incorrect and by length") {
    const rewards::RewardConfig cfg;
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<long long> len(0, 30000);
    double min_correct = 1e9;
    double max_incorrect = -1e9;
    long long prev_len = -1;
    for (int i = 0; i < 2000; ++i) {
        const long long l = len(rng);
        min_correct = std::min(min_correct, rewards::cosine_reward(true, l, cfg));
        max_incorrect = std::max(max_incorrect, rewards::cosine_reward(false, l, cfg));
        (void)prev_len;
    }
    CHECK(min_correct > max_incorrect);
    // Strict monotonicity inside [0, l_max].
    for (long long l = 0; l < 30000; l += 500) {
        CHECK(rewards::cosine_reward(true, l, cfg) >
              rewards::cosine_reward(true, l + 500, cfg));
        CHECK(rewards::cosine_reward(false, l, cfg) <
              rewards::cosine_reward(false, l + 500, cfg));
    }
}

TEST_CASE("length penalty is linear with the documented default slope") {
    const rewards::RewardConfig cfg;
    CHECK(rewards::length_penalty(0, cfg) == 0.0);
    CHECK(rewards::length_penalty(16384, cfg) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(rewards::length_penalty(8192, cfg) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK_THROWS_AS((void)rewards::length_penalty(-5, cfg), ValidationError);
}

TEST_CASE("composite reward gates accuracy and cosine on format") {
    const rewards::RewardConfig cfg;
    corpus::WhitespaceTokenizer tok;

    const std::string good = "Steps. \\boxed{42} </think> done";
    const auto good_tokens = static_cast<long long>(tok.count(good));
    const auto formatted = rewards::composite_reward(good, "42", tok, cfg);
    CHECK(formatted.format == 1);
    CHECK_FALSE(formatted.accuracy.has_value()); // accuracy off by default
    REQUIRE(formatted.cosine.has_value());
    CHECK(*formatted.cosine ==
          doctest::Approx(rewards::cosine_reward(true, good_tokens, cfg)));
    CHECK(formatted.length_penalty ==
          doctest::Approx(rewards::length_penalty(good_tokens, cfg)));
    CHECK(formatted.total ==
          doctest::Approx(1.0 + *formatted.cosine + formatted.length_penalty));

    // Correctness feeds the cosine branch even with accuracy off.
    const auto wrong = rewards::composite_reward("Steps. \\boxed{41} </think>", "42",
                                                 tok, cfg);
    CHECK(wrong.format == 1);
    REQUIRE(wrong.cosine.has_value());
    CHECK(*wrong.cosine < 0.0);

    // Unformatted: only format and length penalty contribute.
    const std::string bad = "no box here at all";
    const auto unformatted = rewards::composite_reward(bad, "42", tok, cfg);
    CHECK(unformatted.format == 0);
    CHECK_FALSE(unformatted.accuracy.has_value());
    CHECK_FALSE(unformatted.cosine.has_value());
    const auto bad_tokens = static_cast<long long>(tok.count(bad));
    CHECK(unformatted.total ==
          doctest::Approx(rewards::length_penalty(bad_tokens, cfg)));
}

TEST_CASE("composite reward honors toggles") {
    rewards::RewardConfig cfg;
    cfg.toggles.accuracy = true;
    corpus::WhitespaceTokenizer tok;

    const auto right = rewards::composite_reward("x \\boxed{7} </think>", "7", tok, cfg);
    REQUIRE(right.accuracy.has_value());
    CHECK(*right.accuracy == doctest::Approx(1.0));
    const auto wrong = rewards::composite_reward("x \\boxed{8} </think>", "7", tok, cfg);
    REQUIRE(wrong.accuracy.has_value());
    CHECK(*wrong.accuracy == doctest::Approx(0.0));

    cfg.toggles.cosine = false;
    cfg.toggles.length_penalty = false;
    const auto trimmed = rewards::composite_reward("x \\boxed{7} </think>", "7", tok, cfg);
    CHECK_FALSE(trimmed.cosine.has_value());
    CHECK(trimmed.length_penalty == 0.0);
    CHECK(trimmed.total == doctest::Approx(1.0 + 1.0));

    // Disabling the format component zeroes its contribution but does not
    // disable the gate: well-formed output still earns the other rewards.
    cfg.toggles.format = false;
    const auto no_format = rewards::composite_reward("x \\boxed{7} </think>", "7", tok, cfg);
    CHECK(no_format.format == 0);
    REQUIRE(no_format.accuracy.has_value());
    CHECK(no_format.total == doctest::Approx(1.0));
    const auto still_gated = rewards::composite_reward("plain", "7", tok, cfg);
    CHECK_FALSE(still_gated.accuracy.has_value());
}

TEST_CASE("composite reward with precomputed counts matches the tokenizer path") {
    const rewards::RewardConfig cfg;
    corpus::WhitespaceTokenizer tok;
    const std::string text = "a b c \\boxed{1} </think>";
    const auto via_tok = rewards::composite_reward(text, "1", tok, cfg);
    const auto via_count = rewards::composite_reward_counted(
        text, "1", static_cast<long long>(tok.count(text)), cfg);
    CHECK(via_tok.total == doctest::Approx(via_count.total).epsilon(1e-15));
    // A differing count shifts only the length-driven parts.
    const auto longer = rewards::composite_reward_counted(text, "1", 20000, cfg);
    CHECK(longer.total < via_count.total);
}

TEST_CASE("reward breakdown serializes enabled components only") {
    const rewards::RewardConfig cfg;
    corpus::WhitespaceTokenizer tok;
    const auto b = rewards::composite_reward("s \\boxed{2} </think>", "2", tok, cfg);
    const auto j = rewards::to_json(b, cfg);
    CHECK(j.contains("format"));
    CHECK(j.contains("cosine"));
    CHECK(j.contains("length_penalty"));
    CHECK(j.contains("total"));
    CHECK_FALSE(j.contains("accuracy"));
    CHECK(j["format"].get<int>() == 1);
}

TEST_CASE("reward config validation and key-value round-trip") {
    rewards::RewardConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.l_max = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = {};
    cfg.correct_lo = 2.0; // above correct_hi
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = {};
    cfg.length_penalty_coeff = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);

    // The bundled defaults file spells out the built-in configuration.
    const auto file_cfg =
        keyvalue::Config::parse_file(testutil::fixture("configs/reward_default.cfg"));
    const auto parsed = rewards::reward_config_from(file_cfg);
    const rewards::RewardConfig defaults;
    CHECK(parsed.l_max == defaults.l_max);
    CHECK(parsed.correct_lo == defaults.correct_lo);
    CHECK(parsed.correct_hi == defaults.correct_hi);
    CHECK(parsed.incorrect_lo == defaults.incorrect_lo);
    CHECK(parsed.incorrect_hi == defaults.incorrect_hi);
    CHECK(parsed.length_penalty_coeff == defaults.length_penalty_coeff);
    CHECK(parsed.accuracy_correct == defaults.accuracy_correct);
    CHECK(parsed.accuracy_incorrect == defaults.accuracy_incorrect);
    CHECK(parsed.toggles.format == defaults.toggles.format);
    CHECK(parsed.toggles.accuracy == defaults.toggles.accuracy);
    CHECK(parsed.toggles.cosine == defaults.toggles.cosine);
    CHECK(parsed.toggles.length_penalty == defaults.toggles.length_penalty);

    // into -> from recovers the same settings.
    rewards::RewardConfig custom;
    custom.l_max = 1234;
    custom.incorrect_hi = -0.25;
    custom.toggles.accuracy = true;
    keyvalue::Config kv;
    rewards::reward_config_into(custom, kv);
    const auto back = rewards::reward_config_from(kv);
    CHECK(back.l_max == 1234);
    CHECK(back.incorrect_hi == doctest::Approx(-0.25));
    CHECK(back.toggles.accuracy);
}
