// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Composite completion reward: binary format gate, optional binary accuracy,
// cosine length-scaled reward, and a linear length penalty, plus the boxed-
// answer extraction and normalization used to judge correctness.

#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "mathrl/corpus.hpp"
#include "mathrl/keyvalue.hpp"

namespace mathrl::rewards {

struct ComponentToggles {
    bool format = true;
    bool accuracy = false; // ablation variant; off by default
    bool cosine = true;
    bool length_penalty = true;
};

struct RewardConfig {
    // Trace length (tokens) at which the cosine reward reaches its far end.
    long long l_max = 30000;
    // Cosine reward ranges: correct answers span [correct_lo, correct_hi]
    // (long traces get the low end), incorrect span [incorrect_lo,
    // incorrect_hi] (long traces get the high, least-negative end).
    double correct_lo = 0.1;
    double correct_hi = 1.0;
    double incorrect_lo = -1.0;
    double incorrect_hi = -0.1;
    // Per-token penalty. Default makes a 16,384-token completion (the
    // generation cap) cost exactly one reward unit.
    double length_penalty_coeff = 1.0 / 16384.0;
    // Binary accuracy reward values, used only when toggled on.
    double accuracy_correct = 1.0;
    double accuracy_incorrect = 0.0;
    ComponentToggles toggles;

    void validate() const; // throws ValidationError
};

struct RewardBreakdown {
    int format = 0;                   // 0 when the format component is disabled
    std::optional<double> accuracy;   // absent when disabled or format = 0
    std::optional<double> cosine;     // absent when disabled or format = 0
    double length_penalty = 0.0;      // 0 when disabled
    double total = 0.0;               // sum of enabled components
};

// 1 iff the text matches: anything, literal "oxed{", anything up to the next
// '}', anything, literal "</think>", anything; newlines allowed everywhere.
// Equivalent to the lazy regex ^.*?oxed\{(.*?)\}.*?</think>.*?$ with
// dot-matches-newline (see the test suite's regex-engine cross-check).
int format_reward(std::string_view text);

// Content of the LAST \boxed{...}, scanned with balanced braces so nested
// LaTeX survives. nullopt when absent or the braces never close.
std::optional<std::string> extract_boxed_answer(std::string_view text);

// Normalized match: strips '$', \left, \right, and all ASCII whitespace;
// compares integers numerically, a/b and \frac{a}{b} as reduced fractions,
// everything else as strings. Empty input on either side is false.
bool verify_answer(std::string_view extracted, std::string_view ground_truth);

// Half-cosine interpolation over L' = min(length, l_max)/l_max between
// (1.0 -> 0.1) for correct and (-1.0 -> -0.1) for incorrect answers.
// Negative length throws ValidationError.
double cosine_reward(bool correct, long long length, const RewardConfig& cfg = {});

// -coeff * length; length must be >= 0.
double length_penalty(long long length, const RewardConfig& cfg = {});

// Format is evaluated first and gates accuracy/cosine: for unformatted
// output only format + length penalty apply. Length is the tokenizer's
// count of the full text.
RewardBreakdown composite_reward(std::string_view text, std::string_view ground_truth,
                                 const corpus::Tokenizer& tokenizer,
                                 const RewardConfig& cfg = {});

// Same, but with a precomputed token count (used where counts are data).
RewardBreakdown composite_reward_counted(std::string_view text,
                                         std::string_view ground_truth,
                                         long long token_count,
                                         const RewardConfig& cfg = {});

// Components keyed by name; disabled components are omitted.
nlohmann::ordered_json to_json(const RewardBreakdown& breakdown,
                               const RewardConfig& cfg = {});

// Key-value plumbing. All keys carry a reward_ prefix (reward_l_max,
// reward_correct_lo, ..., reward_enable_cosine) so reward settings can share
// a config file with trainer settings.
RewardConfig reward_config_from(const keyvalue::Config& cfg);
void reward_config_into(const RewardConfig& rcfg, keyvalue::Config& cfg);

} // namespace mathrl::rewards
