// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "mathrl/rewards.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>

#include "mathrl/errors.hpp"

namespace mathrl::rewards {

void RewardConfig::validate() const {
    if (l_max <= 0) throw ValidationError("l_max must be positive");
    if (!(0.0 < correct_lo && correct_lo <= correct_hi && correct_hi <= 1.0)) {
        throw ValidationError("correct reward range must satisfy 0 < lo <= hi <= 1");
    }
    if (!(-1.0 <= incorrect_lo && incorrect_lo <= incorrect_hi && incorrect_hi < 0.0)) {
        throw ValidationError("incorrect reward range must satisfy -1 <= lo <= hi < 0");
    }
    if (length_penalty_coeff < 0.0) {
        throw ValidationError("length_penalty_coeff must be non-negative");
    }
}

int format_reward(std::string_view text) {
    // Lazy quantifiers make the leftmost choices canonical: if the earliest
    // "oxed{" / first '}' after it / first "</think>" after that fail, no
    // later combination can succeed.
    const auto open = text.find("oxed{");
    if (open == std::string_view::npos) return 0;
    const auto close = text.find('}', open + 5);
    if (close == std::string_view::npos) return 0;
    return text.find("</think>", close + 1) != std::string_view::npos ? 1 : 0;
}

std::optional<std::string> extract_boxed_answer(std::string_view text) {
    static constexpr std::string_view kMarker = "\\boxed{";
    const auto start = text.rfind(kMarker);
    if (start == std::string_view::npos) return std::nullopt;
    std::size_t depth = 1;
    const std::size_t content_begin = start + kMarker.size();
    for (std::size_t i = content_begin; i < text.size(); ++i) {
        if (text[i] == '{') {
            ++depth;
        } else if (text[i] == '}') {
            if (--depth == 0) {
                return std::string(text.substr(content_begin, i - content_begin));
            }
        }
    }
    return std::nullopt; // braces never balance
}

namespace {

std::string normalize_answer(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        if (c == '$' || std::isspace(static_cast<unsigned char>(c))) continue;
        out.push_back(c);
    }
    for (std::string_view token : {std::string_view("\\left"), std::string_view("\\right")}) {
        std::size_t pos = 0;
        while ((pos = out.find(token, pos)) != std::string::npos) {
            out.erase(pos, token.size());
        }
    }
    return out;
}

std::optional<long long> parse_integer(std::string_view s) {
    if (s.empty()) return std::nullopt;
    long long value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

struct Fraction {
    long long num = 0;
    long long den = 1;
};

// Accepts "a/b" and "\frac{a}{b}" with integer a, b, b != 0.
std::optional<Fraction> parse_fraction(std::string_view s) {
    std::optional<long long> num, den;
    if (s.starts_with("\\frac{")) {
        const auto mid = s.find("}{", 6);
        if (mid == std::string_view::npos || !s.ends_with('}')) return std::nullopt;
        num = parse_integer(s.substr(6, mid - 6));
        den = parse_integer(s.substr(mid + 2, s.size() - mid - 3));
    } else {
        const auto slash = s.find('/');
        if (slash == std::string_view::npos) return std::nullopt;
        num = parse_integer(s.substr(0, slash));
        den = parse_integer(s.substr(slash + 1));
    }
    if (!num || !den || *den == 0) return std::nullopt;
    Fraction f{*num, *den};
    if (f.den < 0) {
        f.num = -f.num;
        f.den = -f.den;
    }
    const long long g = std::gcd(std::abs(f.num), f.den);
    if (g > 1) {
        f.num /= g;
        f.den /= g;
    }
    return f;
}

} // namespace

bool verify_answer(std::string_view extracted, std::string_view ground_truth) {
    if (extracted.empty() || ground_truth.empty()) return false;
    const std::string a = normalize_answer(extracted);
    const std::string b = normalize_answer(ground_truth);
    if (a.empty() || b.empty()) return false;

    const auto ia = parse_integer(a);
    const auto ib = parse_integer(b);
    if (ia && ib) return *ia == *ib;

    const auto fa = parse_fraction(a);
    const auto fb = parse_fraction(b);
    if (fa && fb) return fa->num == fb->num && fa->den == fb->den;

    return a == b;
}

double cosine_reward(bool correct, long long length, const RewardConfig& cfg) {
    cfg.validate();
    if (length < 0) throw ValidationError("cosine_reward length must be non-negative");
    const double progress =
        static_cast<double>(std::min(length, cfg.l_max)) / static_cast<double>(cfg.l_max);
    // v0 applies at length 0, v1 at l_max. Short correct traces sit at the
    // top of their range; short incorrect traces at the bottom of theirs.
    const double v0 = correct ? cfg.correct_hi : cfg.incorrect_lo;
    const double v1 = correct ? cfg.correct_lo : cfg.incorrect_hi;
    return v1 + 0.5 * (v0 - v1) * (1.0 + std::cos(M_PI * progress));
}

double length_penalty(long long length, const RewardConfig& cfg) {
    if (length < 0) throw ValidationError("length_penalty length must be non-negative");
    return -cfg.length_penalty_coeff * static_cast<double>(length);
}

namespace {

RewardBreakdown score(std::string_view text, std::string_view ground_truth,
                      long long token_count, const RewardConfig& cfg) {
    cfg.validate();
    RewardBreakdown out;
    const int fmt = format_reward(text);
    if (cfg.toggles.format) out.format = fmt;
    // Accuracy and cosine only apply to well-formed output.
    if (fmt == 1) {
        bool correct = false;
        if (const auto boxed = extract_boxed_answer(text)) {
            correct = verify_answer(*boxed, ground_truth);
        }
        if (cfg.toggles.accuracy) {
            out.accuracy = correct ? cfg.accuracy_correct : cfg.accuracy_incorrect;
        }
        if (cfg.toggles.cosine) {
            out.cosine = cosine_reward(correct, token_count, cfg);
        }
    }
    if (cfg.toggles.length_penalty) {
        out.length_penalty = length_penalty(token_count, cfg);
    }
    out.total = static_cast<double>(out.format) + out.accuracy.value_or(0.0) +
                out.cosine.value_or(0.0) + out.length_penalty;
    return out;
}

} // namespace

RewardBreakdown composite_reward(std::string_view text, std::string_view ground_truth,
                                 const corpus::Tokenizer& tokenizer,
                                 const RewardConfig& cfg) {
    return score(text, ground_truth, static_cast<long long>(tokenizer.count(text)), cfg);
}

RewardBreakdown composite_reward_counted(std::string_view text,
                                         std::string_view ground_truth,
                                         long long token_count, const RewardConfig& cfg) {
    if (token_count < 0) throw ValidationError("token_count must be non-negative");
    return score(text, ground_truth, token_count, cfg);
}

RewardConfig reward_config_from(const keyvalue::Config& cfg) {
    RewardConfig out;
    out.l_max = cfg.get_int_or("reward_l_max", out.l_max);
    out.correct_lo = cfg.get_double_or("reward_correct_lo", out.correct_lo);
    out.correct_hi = cfg.get_double_or("reward_correct_hi", out.correct_hi);
    out.incorrect_lo = cfg.get_double_or("reward_incorrect_lo", out.incorrect_lo);
    out.incorrect_hi = cfg.get_double_or("reward_incorrect_hi", out.incorrect_hi);
    out.length_penalty_coeff =
        cfg.get_double_or("reward_length_penalty_coeff", out.length_penalty_coeff);
    out.accuracy_correct = cfg.get_double_or("reward_accuracy_correct", out.accuracy_correct);
    out.accuracy_incorrect =
        cfg.get_double_or("reward_accuracy_incorrect", out.accuracy_incorrect);
    out.toggles.format = cfg.get_bool_or("reward_enable_format", out.toggles.format);
    out.toggles.accuracy = cfg.get_bool_or("reward_enable_accuracy", out.toggles.accuracy);
    out.toggles.cosine = cfg.get_bool_or("reward_enable_cosine", out.toggles.cosine);
    out.toggles.length_penalty =
        cfg.get_bool_or("reward_enable_length_penalty", out.toggles.length_penalty);
    out.validate();
    return out;
}

void reward_config_into(const RewardConfig& rcfg, keyvalue::Config& cfg) {
    cfg.set_int("reward_l_max", rcfg.l_max);
    cfg.set_double("reward_correct_lo", rcfg.correct_lo);
    cfg.set_double("reward_correct_hi", rcfg.correct_hi);
    cfg.set_double("reward_incorrect_lo", rcfg.incorrect_lo);
    cfg.set_double("reward_incorrect_hi", rcfg.incorrect_hi);
    cfg.set_double("reward_length_penalty_coeff", rcfg.length_penalty_coeff);
    cfg.set_double("reward_accuracy_correct", rcfg.accuracy_correct);
    cfg.set_double("reward_accuracy_incorrect", rcfg.accuracy_incorrect);
    cfg.set_bool("reward_enable_format", rcfg.toggles.format);
    cfg.set_bool("reward_enable_accuracy", rcfg.toggles.accuracy);
    cfg.set_bool("reward_enable_cosine", rcfg.toggles.cosine);
    cfg.set_bool("reward_enable_length_penalty", rcfg.toggles.length_penalty);
}

nlohmann::ordered_json to_json(const RewardBreakdown& breakdown, const RewardConfig& cfg) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    if (cfg.toggles.format) j["format"] = breakdown.format;
    if (breakdown.accuracy) j["accuracy"] = *breakdown.accuracy;
    if (breakdown.cosine) j["cosine"] = *breakdown.cosine;
    if (cfg.toggles.length_penalty) j["length_penalty"] = breakdown.length_penalty;
    j["total"] = breakdown.total;
    return j;
}

} // namespace mathrl::rewards
