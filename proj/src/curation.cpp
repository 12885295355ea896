// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "mathrl/curation.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

#include "mathrl/errors.hpp"
#include "mathrl/rewards.hpp"
#include "mathrl/unicode.hpp"

namespace mathrl::curation {

void CurationConfig::validate() const {
    if (long_trace_threshold <= 0) {
        throw ValidationError("long_trace_threshold must be positive");
    }
    if (high_acc_threshold < 0.0 || high_acc_threshold > 1.0) {
        throw ValidationError("high_acc_threshold must be a fraction in [0,1]");
    }
    if (mid_acc_lo < 0.0 || mid_acc_hi > 1.0 || mid_acc_lo > mid_acc_hi) {
        throw ValidationError("mid accuracy band must satisfy 0 <= lo <= hi <= 1");
    }
    if (hard_attempts < 1) throw ValidationError("hard_attempts must be >= 1");
    for (const auto& [name, cap] :
         {std::pair{"long_high_acc_cap", long_high_acc_cap},
          std::pair{"mid_acc_cap", mid_acc_cap}, std::pair{"hard_cap", hard_cap}}) {
        if (cap && *cap <= 0) {
            throw ValidationError(std::string(name) + " must be positive when present");
        }
    }
}

namespace {

std::optional<long long> cap_from(const keyvalue::Config& cfg, const char* key,
                                  std::optional<long long> fallback) {
    if (!cfg.contains(key)) return fallback;
    const std::string raw = cfg.get_string(key);
    if (raw == "none") return std::nullopt;
    return cfg.get_int(key);
}

} // namespace

CurationConfig CurationConfig::from_config(const keyvalue::Config& cfg) {
    CurationConfig out;
    out.long_trace_threshold =
        cfg.get_int_or("long_trace_threshold", out.long_trace_threshold);
    out.high_acc_threshold =
        cfg.get_double_or("high_acc_threshold", out.high_acc_threshold);
    out.mid_acc_lo = cfg.get_double_or("mid_acc_lo", out.mid_acc_lo);
    out.mid_acc_hi = cfg.get_double_or("mid_acc_hi", out.mid_acc_hi);
    out.hard_attempts = static_cast<int>(cfg.get_int_or("hard_attempts", out.hard_attempts));
    out.long_high_acc_cap = cap_from(cfg, "long_high_acc_cap", out.long_high_acc_cap);
    out.mid_acc_cap = cap_from(cfg, "mid_acc_cap", out.mid_acc_cap);
    out.hard_cap = cap_from(cfg, "hard_cap", out.hard_cap);
    out.validate();
    return out;
}

keyvalue::Config CurationConfig::to_config() const {
    keyvalue::Config cfg;
    cfg.set_int("long_trace_threshold", long_trace_threshold);
    cfg.set_double("high_acc_threshold", high_acc_threshold);
    cfg.set_double("mid_acc_lo", mid_acc_lo);
    cfg.set_double("mid_acc_hi", mid_acc_hi);
    cfg.set_int("hard_attempts", hard_attempts);
    const auto put_cap = [&cfg](const char* key, const std::optional<long long>& cap) {
        if (cap) {
            cfg.set_int(key, *cap);
        } else {
            cfg.set(key, "none");
        }
    };
    put_cap("long_high_acc_cap", long_high_acc_cap);
    put_cap("mid_acc_cap", mid_acc_cap);
    put_cap("hard_cap", hard_cap);
    return cfg;
}

// ---------------------------------------------------------------------------
// Normalization and filters
// ---------------------------------------------------------------------------

std::string normalize_statement(std::string_view statement) {
    std::string collapsed;
    collapsed.reserve(statement.size());
    bool pending_space = false;
    for (char c : statement) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !collapsed.empty();
            continue;
        }
        if (pending_space) {
            collapsed.push_back(' ');
            pending_space = false;
        }
        collapsed.push_back(c);
    }
    return unicode::nfc(collapsed);
}

namespace {

std::optional<long long> max_trace_tokens(const CurationRecord& r) {
    std::optional<long long> best;
    for (const auto& trace : r.traces) {
        if (!best || trace.token_count > *best) best = trace.token_count;
    }
    return best;
}

} // namespace

FilterResult filter_long_high_acc(std::span<const CurationRecord> records,
                                  const CurationConfig& cfg) {
    FilterResult out;
    for (const auto& r : records) {
        const auto acc = corpus::accuracy(r.problem);
        if (!acc) {
            ++out.drop_reasons["missing_accuracy"];
            continue;
        }
        const auto longest = max_trace_tokens(r);
        if (!longest) {
            ++out.drop_reasons["no_traces"];
            continue;
        }
        if (*longest <= cfg.long_trace_threshold) {
            ++out.drop_reasons["short_trace"];
            continue;
        }
        if (*acc <= cfg.high_acc_threshold) {
            ++out.drop_reasons["low_accuracy"];
            continue;
        }
        out.kept.push_back(r);
    }
    return out;
}

FilterResult filter_mid_acc(std::span<const CurationRecord> records,
                            const CurationConfig& cfg) {
    FilterResult out;
    for (const auto& r : records) {
        const auto acc = corpus::accuracy(r.problem);
        if (!acc) {
            ++out.drop_reasons["missing_accuracy"];
            continue;
        }
        if (*acc < cfg.mid_acc_lo || *acc > cfg.mid_acc_hi) {
            ++out.drop_reasons["outside_band"];
            continue;
        }
        out.kept.push_back(r);
    }
    return out;
}

FilterResult filter_hard_unsolved(std::span<const CurationRecord> records,
                                  const CurationConfig& cfg) {
    FilterResult out;
    const auto attempts = static_cast<std::size_t>(cfg.hard_attempts);
    for (const auto& r : records) {
        if (r.attempts.size() < attempts) {
            ++out.drop_reasons["too_few_attempts"];
            continue;
        }
        const bool solved = std::any_of(r.attempts.begin(), r.attempts.begin() + attempts,
                                        [](bool ok) { return ok; });
        if (solved) {
            ++out.drop_reasons["solved_within_attempts"];
            continue;
        }
        out.kept.push_back(r);
    }
    return out;
}

FilterResult dedup(std::span<const CurationRecord> records) {
    FilterResult out;
    std::unordered_set<std::string> seen;
    seen.reserve(records.size());
    for (const auto& r : records) {
        if (seen.insert(normalize_statement(r.problem.statement)).second) {
            out.kept.push_back(r);
        } else {
            ++out.drop_reasons["duplicate_statement"];
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Backfill and selection
// ---------------------------------------------------------------------------

namespace {

bool trace_order(const corpus::TraceRecord& a, const corpus::TraceRecord& b) {
    if (a.token_count != b.token_count) return a.token_count < b.token_count;
    return a.text < b.text;
}

} // namespace

std::optional<CurationRecord> backfill_answer(const CurationRecord& record) {
    struct Extraction {
        const corpus::TraceRecord* trace;
        std::string answer;
    };
    std::vector<Extraction> extractions;
    std::unordered_map<std::string, std::size_t> votes;
    for (const auto& trace : record.traces) {
        if (auto boxed = rewards::extract_boxed_answer(trace.text)) {
            ++votes[*boxed];
            extractions.push_back({&trace, std::move(*boxed)});
        }
    }
    if (extractions.empty()) return std::nullopt;

    std::size_t best = 0;
    for (const auto& [answer, count] : votes) best = std::max(best, count);

    // Ties between equally voted answers resolve to the answer boxed by the
    // shortest trace (token count, then text).
    std::sort(extractions.begin(), extractions.end(),
              [](const Extraction& a, const Extraction& b) {
                  return trace_order(*a.trace, *b.trace);
              });
    for (const auto& e : extractions) {
        if (votes.at(e.answer) == best) {
            CurationRecord out = record;
            out.problem.answer = e.answer;
            return out;
        }
    }
    return std::nullopt; // unreachable: some extraction carries the best vote
}

std::optional<SftTriplet> select_shortest_correct(
    const corpus::ProblemRecord& problem, std::span<const corpus::TraceRecord> traces) {
    if (!problem.answer || problem.answer->empty()) return std::nullopt;
    const corpus::TraceRecord* best = nullptr;
    std::string best_answer;
    for (const auto& trace : traces) {
        if (trace.problem_id != problem.id) {
            throw ValidationError("trace problem_id \"" + trace.problem_id +
                                  "\" does not reference problem \"" + problem.id + "\"");
        }
        auto boxed = rewards::extract_boxed_answer(trace.text);
        if (!boxed || !rewards::verify_answer(*boxed, *problem.answer)) continue;
        if (best == nullptr || trace_order(trace, *best)) {
            best = &trace;
            best_answer = std::move(*boxed);
        }
    }
    if (best == nullptr) return std::nullopt;
    SftTriplet triplet{problem, *best, *problem.answer};
    triplet.trace.extracted_answer = best_answer;
    triplet.trace.correct = true;
    return triplet;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

namespace {

std::vector<CurationRecord> load_source(const std::filesystem::path& path,
                                        corpus::SourceTag expected) {
    auto result = corpus::read_records<CurationRecord>(path, corpus::ErrorPolicy::fail_fast);
    std::vector<corpus::ProblemRecord> problems;
    problems.reserve(result.records.size());
    for (const auto& r : result.records) {
        if (r.problem.source != expected) {
            throw ValidationError("record \"" + r.problem.id + "\" in " + path.string() +
                                  " is tagged " + std::string(to_string(r.problem.source)) +
                                  ", expected " + std::string(to_string(expected)));
        }
        problems.push_back(r.problem);
    }
    corpus::validate_unique_ids(problems, path.string());
    return std::move(result.records);
}

// Truncates to the first `cap` records, counting the remainder as drops.
void apply_cap(FilterResult& result, const std::optional<long long>& cap) {
    if (!cap || std::cmp_less_equal(result.kept.size(), *cap)) return;
    const std::size_t keep = static_cast<std::size_t>(*cap);
    result.drop_reasons["over_cap"] += result.kept.size() - keep;
    result.kept.resize(keep);
}

StageStats make_stage(std::string name, std::size_t input, FilterResult&& result,
                      std::vector<CurationRecord>& merged) {
    StageStats stage{std::move(name), input, result.kept.size(),
                     std::move(result.drop_reasons)};
    merged.insert(merged.end(), std::make_move_iterator(result.kept.begin()),
                  std::make_move_iterator(result.kept.end()));
    return stage;
}

} // namespace

nlohmann::ordered_json CurationStats::to_json() const {
    nlohmann::ordered_json j;
    nlohmann::ordered_json stage_list = nlohmann::ordered_json::array();
    for (const auto& s : stages) {
        nlohmann::ordered_json sj;
        sj["stage"] = s.stage;
        sj["input"] = s.input;
        sj["output"] = s.output;
        sj["dropped"] = s.dropped();
        nlohmann::ordered_json reasons = nlohmann::ordered_json::object();
        for (const auto& [reason, count] : s.drop_reasons) reasons[reason] = count;
        sj["drop_reasons"] = std::move(reasons);
        stage_list.push_back(std::move(sj));
    }
    j["stages"] = std::move(stage_list);
    j["triplets"] = triplets;
    return j;
}

BuildResult build_sft_dataset(const SourceFiles& sources, const CurationConfig& cfg) {
    cfg.validate();
    BuildResult out;
    std::vector<CurationRecord> merged;

    // Merge order is the dedup survivorship priority.
    if (sources.openr1_math) {
        const auto records = load_source(*sources.openr1_math, corpus::SourceTag::openr1_math);
        auto long_batch = filter_long_high_acc(records, cfg);
        apply_cap(long_batch, cfg.long_high_acc_cap);
        out.stats.stages.push_back(make_stage("openr1_math:long_high_acc", records.size(),
                                              std::move(long_batch), merged));
        auto mid_batch = filter_mid_acc(records, cfg);
        apply_cap(mid_batch, cfg.mid_acc_cap);
        out.stats.stages.push_back(
            make_stage("openr1_math:mid_acc", records.size(), std::move(mid_batch), merged));
    }
    if (sources.openr1_hard) {
        const auto records = load_source(*sources.openr1_hard, corpus::SourceTag::openr1_hard);
        auto hard_batch = filter_hard_unsolved(records, cfg);
        apply_cap(hard_batch, cfg.hard_cap);
        out.stats.stages.push_back(make_stage("openr1_hard:hard_unsolved", records.size(),
                                              std::move(hard_batch), merged));
    }
    if (sources.light_r1_stage2) {
        auto records =
            load_source(*sources.light_r1_stage2, corpus::SourceTag::light_r1_stage2);
        FilterResult passthrough;
        passthrough.kept = std::move(records);
        out.stats.stages.push_back(make_stage("light_r1_stage2:passthrough",
                                              passthrough.kept.size(),
                                              std::move(passthrough), merged));
    }

    out.stats.stages.push_back(
        StageStats{"merge", merged.size(), merged.size(), {}});

    auto deduped = dedup(merged);
    out.stats.stages.push_back(StageStats{"dedup", merged.size(), deduped.kept.size(),
                                          std::move(deduped.drop_reasons)});

    // Statement dedup keeps distinct cross-source ids apart; surviving id
    // collisions mean genuinely conflicting inputs.
    {
        std::vector<corpus::ProblemRecord> problems;
        problems.reserve(deduped.kept.size());
        for (const auto& r : deduped.kept) problems.push_back(r.problem);
        corpus::validate_unique_ids(problems, "merged curation input");
    }

    StageStats backfill_stage{"backfill", deduped.kept.size(), 0, {}};
    std::vector<CurationRecord> answered;
    answered.reserve(deduped.kept.size());
    for (auto& r : deduped.kept) {
        if (r.problem.answer && !r.problem.answer->empty()) {
            answered.push_back(std::move(r));
            continue;
        }
        if (auto filled = backfill_answer(r)) {
            answered.push_back(std::move(*filled));
        } else {
            ++backfill_stage.drop_reasons["no_extractable_answer"];
        }
    }
    backfill_stage.output = answered.size();
    out.stats.stages.push_back(std::move(backfill_stage));

    StageStats select_stage{"select_shortest_correct", answered.size(), 0, {}};
    for (const auto& r : answered) {
        if (auto triplet = select_shortest_correct(r.problem, r.traces)) {
            out.triplets.push_back(std::move(*triplet));
        } else {
            ++select_stage.drop_reasons["no_correct_trace"];
        }
    }
    select_stage.output = out.triplets.size();
    out.stats.stages.push_back(std::move(select_stage));

    out.stats.triplets = out.triplets.size();
    return out;
}

} // namespace mathrl::curation

// ---------------------------------------------------------------------------
// Codecs
// ---------------------------------------------------------------------------

namespace mathrl::corpus {

curation::CurationRecord RecordCodec<curation::CurationRecord>::parse(const json& j) {
    if (!j.is_object()) throw ValidationError("curation record must be a JSON object");
    curation::CurationRecord r;
    r.problem = RecordCodec<ProblemRecord>::parse(detail::require_field(j, "problem"));
    if (auto it = j.find("traces"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw ValidationError("field \"traces\" must be an array");
        for (const auto& tj : *it) {
            auto trace = RecordCodec<TraceRecord>::parse(tj);
            if (trace.problem_id != r.problem.id) {
                throw ValidationError("trace problem_id \"" + trace.problem_id +
                                      "\" does not match problem id \"" + r.problem.id +
                                      "\"");
            }
            r.traces.push_back(std::move(trace));
        }
    }
    if (auto it = j.find("attempts"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw ValidationError("field \"attempts\" must be an array");
        for (const auto& aj : *it) {
            if (!aj.is_boolean()) {
                throw ValidationError("field \"attempts\" must contain booleans");
            }
            r.attempts.push_back(aj.get<bool>());
        }
    }
    return r;
}

json RecordCodec<curation::CurationRecord>::dump(const curation::CurationRecord& r) {
    json j = json::object();
    j["problem"] = RecordCodec<ProblemRecord>::dump(r.problem);
    json traces = json::array();
    for (const auto& t : r.traces) traces.push_back(RecordCodec<TraceRecord>::dump(t));
    j["traces"] = std::move(traces);
    if (!r.attempts.empty()) {
        json attempts = json::array();
        for (bool a : r.attempts) attempts.push_back(a);
        j["attempts"] = std::move(attempts);
    }
    return j;
}

curation::SftTriplet RecordCodec<curation::SftTriplet>::parse(const json& j) {
    if (!j.is_object()) throw ValidationError("sft triplet must be a JSON object");
    curation::SftTriplet t;
    t.problem = RecordCodec<ProblemRecord>::parse(detail::require_field(j, "problem"));
    t.trace = RecordCodec<TraceRecord>::parse(detail::require_field(j, "trace"));
    t.answer = detail::require_string(j, "answer", /*allow_empty=*/false);
    if (t.trace.problem_id != t.problem.id) {
        throw ValidationError("triplet trace does not reference its problem");
    }
    return t;
}

json RecordCodec<curation::SftTriplet>::dump(const curation::SftTriplet& t) {
    json j = json::object();
    j["problem"] = RecordCodec<ProblemRecord>::dump(t.problem);
    j["trace"] = RecordCodec<TraceRecord>::dump(t.trace);
    j["answer"] = t.answer;
    return j;
}

} // namespace mathrl::corpus
