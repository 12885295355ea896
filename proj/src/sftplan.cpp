// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "mathrl/sftplan.hpp"

#include <algorithm>
#include <cmath>

#include "mathrl/csv.hpp"
#include "mathrl/errors.hpp"

namespace mathrl::sftplan {

void SftConfig::validate() const {
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (learning_rate <= 0.0) throw ValidationError("learning_rate must be positive");
    if (scheduler != "cosine") {
        throw ValidationError("scheduler \"" + scheduler + "\" unsupported (only cosine)");
    }
    if (per_device_batch < 1) throw ValidationError("per_device_batch must be >= 1");
    if (grad_accum < 1) throw ValidationError("grad_accum must be >= 1");
    if (max_seq_len < 1) throw ValidationError("max_seq_len must be >= 1");
    if (system_prompt.empty()) throw ValidationError("system_prompt must be non-empty");
}

SftConfig SftConfig::with_overrides(const keyvalue::Config& overrides) {
    SftConfig cfg;
    for (const auto& [key, value] : overrides.entries()) {
        (void)value;
        if (key != "epochs" && key != "learning_rate" && key != "scheduler" &&
            key != "per_device_batch" && key != "grad_accum" && key != "max_seq_len" &&
            key != "packing" && key != "system_prompt") {
            throw ValidationError("unknown override key \"" + key + "\"");
        }
    }
    cfg.epochs = overrides.get_int_or("epochs", cfg.epochs);
    cfg.learning_rate = overrides.get_double_or("learning_rate", cfg.learning_rate);
    cfg.scheduler = overrides.get_string_or("scheduler", cfg.scheduler);
    cfg.per_device_batch = overrides.get_int_or("per_device_batch", cfg.per_device_batch);
    cfg.grad_accum = overrides.get_int_or("grad_accum", cfg.grad_accum);
    cfg.max_seq_len = overrides.get_int_or("max_seq_len", cfg.max_seq_len);
    cfg.packing = overrides.get_bool_or("packing", cfg.packing);
    cfg.system_prompt = overrides.get_string_or("system_prompt", cfg.system_prompt);
    cfg.validate();
    return cfg;
}

keyvalue::Config SftConfig::to_config() const {
    keyvalue::Config out;
    out.set_int("epochs", epochs);
    out.set_double("learning_rate", learning_rate);
    out.set("scheduler", scheduler);
    out.set_int("per_device_batch", per_device_batch);
    out.set_int("grad_accum", grad_accum);
    out.set_int("max_seq_len", max_seq_len);
    out.set_bool("packing", packing);
    out.set("system_prompt", system_prompt);
    return out;
}

double cosine_lr(long long step, long long total_steps, double lr0) {
    if (total_steps < 1) throw ValidationError("total_steps must be >= 1");
    if (step < 0 || step > total_steps) {
        throw ValidationError("step " + std::to_string(step) + " outside [0, " +
                              std::to_string(total_steps) + "]");
    }
    const double progress = static_cast<double>(step) / static_cast<double>(total_steps);
    return lr0 * 0.5 * (1.0 + std::cos(M_PI * progress));
}

std::vector<PackedBin> pack_sequences(std::vector<PackSample> samples, long long max_len) {
    if (max_len < 1) throw ValidationError("max_len must be >= 1");
    std::string offenders;
    for (const auto& s : samples) {
        if (s.token_count < 0) {
            throw ValidationError("sample \"" + s.id + "\" has negative token count");
        }
        if (s.token_count > max_len) {
            offenders += offenders.empty() ? "" : ", ";
            offenders += s.id;
        }
    }
    if (!offenders.empty()) {
        throw ValidationError("samples exceed max_len " + std::to_string(max_len) + ": " +
                              offenders);
    }
    std::sort(samples.begin(), samples.end(), [](const PackSample& a, const PackSample& b) {
        if (a.token_count != b.token_count) return a.token_count > b.token_count;
        return a.id < b.id;
    });
    std::vector<PackedBin> bins;
    for (auto& s : samples) {
        PackedBin* fit = nullptr;
        for (auto& bin : bins) {
            if (bin.total_tokens + s.token_count <= max_len) {
                fit = &bin;
                break;
            }
        }
        if (fit == nullptr) {
            bins.emplace_back();
            fit = &bins.back();
        }
        fit->total_tokens += s.token_count;
        fit->sample_ids.push_back(std::move(s.id));
    }
    return bins;
}

DatasetScan scan_dataset(std::span<const curation::SftTriplet> triplets,
                         const corpus::Tokenizer& tokenizer, long long max_seq_len) {
    if (max_seq_len < 1) throw ValidationError("max_seq_len must be >= 1");
    DatasetScan scan;
    scan.samples.reserve(triplets.size());
    for (const auto& t : triplets) {
        const long long tokens =
            static_cast<long long>(tokenizer.count(t.problem.statement)) +
            t.trace.token_count;
        scan.samples.push_back({t.problem.id, tokens});
        scan.total_tokens += tokens;
        scan.max_sample_tokens = std::max(scan.max_sample_tokens, tokens);
        if (tokens > max_seq_len) scan.overlong_ids.push_back(t.problem.id);
    }
    return scan;
}

keyvalue::Config emit_sft_config(const DatasetScan& scan, const SftConfig& cfg,
                                 const std::filesystem::path& out_file) {
    cfg.validate();
    keyvalue::Config out = cfg.to_config();
    out.set_int("dataset_samples", static_cast<long long>(scan.samples.size()));
    out.set_int("dataset_total_tokens", scan.total_tokens);
    out.set_int("dataset_max_sample_tokens", scan.max_sample_tokens);
    out.set_int("dataset_overlong_samples", static_cast<long long>(scan.overlong_ids.size()));
    if (!scan.overlong_ids.empty()) {
        std::string joined;
        for (const auto& id : scan.overlong_ids) {
            joined += joined.empty() ? "" : ",";
            joined += id;
        }
        out.set("dataset_overlong_ids", joined);
    }
    out.write_file(out_file);
    return out;
}

void write_packing_report(std::span<const PackedBin> bins, long long max_len,
                          const std::filesystem::path& out_file) {
    std::vector<std::string> rows;
    rows.reserve(bins.size());
    for (std::size_t i = 0; i < bins.size(); ++i) {
        std::string ids;
        for (const auto& id : bins[i].sample_ids) {
            ids += ids.empty() ? "" : ";";
            ids += id;
        }
        const double fill = static_cast<double>(bins[i].total_tokens) /
                            static_cast<double>(max_len);
        rows.push_back(csv::join_row({std::to_string(i), ids,
                                      std::to_string(bins[i].total_tokens),
                                      csv::fixed9(fill)}));
    }
    csv::write_file(out_file, "bin,sample_ids,total_tokens,fill", rows);
}

} // namespace mathrl::sftplan
