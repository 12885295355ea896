// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Supervised fine-tuning planning: validated training-config emission for
// external trainers, the cosine learning-rate schedule, and deterministic
// first-fit-decreasing sequence packing.

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mathrl/corpus.hpp"
#include "mathrl/curation.hpp"
#include "mathrl/keyvalue.hpp"

namespace mathrl::sftplan {

struct SftConfig {
    long long epochs = 10;
    double learning_rate = 1e-5;
    std::string scheduler = "cosine";
    long long per_device_batch = 1;
    long long grad_accum = 8;
    long long max_seq_len = 24000;
    bool packing = true;
    std::string system_prompt =
        "Please reason step by step, and put your final answer within \\boxed{{}}";

    void validate() const; // throws ValidationError naming the field
    // Defaults overridden by any of the keys above present in `overrides`;
    // unknown keys are an error.
    static SftConfig with_overrides(const keyvalue::Config& overrides);
    keyvalue::Config to_config() const;
};

// lr0 * (1 + cos(pi * step / total_steps)) / 2, no warmup.
// Requires 0 <= step <= total_steps and total_steps >= 1.
double cosine_lr(long long step, long long total_steps, double lr0);

struct PackSample {
    std::string id;
    long long token_count = 0;
};

struct PackedBin {
    std::vector<std::string> sample_ids;
    long long total_tokens = 0;
};

// First-fit-decreasing: sort by token count descending (ties by id
// ascending), place each sample into the first bin with room, else open a
// new bin. Samples exceeding max_len throw ValidationError listing them.
std::vector<PackedBin> pack_sequences(std::vector<PackSample> samples, long long max_len);

// Per-sample training length: tokens(statement) + trace token count.
struct DatasetScan {
    std::vector<PackSample> samples;        // input order
    long long total_tokens = 0;
    long long max_sample_tokens = 0;
    std::vector<std::string> overlong_ids;  // samples longer than max_seq_len
};

DatasetScan scan_dataset(std::span<const curation::SftTriplet> triplets,
                         const corpus::Tokenizer& tokenizer, long long max_seq_len);

// Writes the training config plus dataset_* summary keys (including the
// overlong-sample flags) as a key-value file; returns what was written.
keyvalue::Config emit_sft_config(const DatasetScan& scan, const SftConfig& cfg,
                                 const std::filesystem::path& out_file);

// packing_report.csv rows: bin, sample_ids (';'-joined), total_tokens, fill.
void write_packing_report(std::span<const PackedBin> bins, long long max_len,
                          const std::filesystem::path& out_file);

} // namespace mathrl::sftplan
