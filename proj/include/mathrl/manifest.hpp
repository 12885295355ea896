// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run manifests: every artifact-producing command drops a manifest.json next
// to its outputs recording the command, argv, seed, tokenizer, tool version,
// and the full effective config plus its hash. Deliberately no timestamps or
// host details, so reruns of the same invocation produce identical bytes.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mathrl/keyvalue.hpp"

namespace mathrl::manifest {

// FNV-1a, 64-bit, over the raw bytes.
std::uint64_t fnv1a64(std::string_view bytes);

// Lowercase 16-hex-digit form of fnv1a64().
std::string fnv1a64_hex(std::string_view bytes);

struct RunManifest {
    std::string command;            // subcommand name, e.g. "curate"
    std::vector<std::string> argv;  // full argv as invoked
    std::uint64_t seed = 0;
    std::string tokenizer;
    keyvalue::Config effective_config; // defaults merged with file and flags
};

// Serialized manifest JSON (pretty, 2-space indent, '\n' terminated).
// config_hash is fnv1a64_hex of effective_config.serialize().
std::string render(const RunManifest& m);

// Writes render(m) to dir/manifest.json. The directory must exist.
void write(const RunManifest& m, const std::filesystem::path& dir);

} // namespace mathrl::manifest
