// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "mathrl/manifest.hpp"

#include <fstream>

#include <json.hpp>

#include "mathrl/errors.hpp"
#include "mathrl/version.hpp"

namespace mathrl::manifest {

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string fnv1a64_hex(std::string_view bytes) {
    static constexpr char kDigits[] = "0123456789abcdef";
    const std::uint64_t hash = fnv1a64(bytes);
    std::string out(16, '0');
    for (int i = 0; i < 16; ++i) {
        out[15 - i] = kDigits[(hash >> (4 * i)) & 0xF];
    }
    return out;
}

std::string render(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["tool"] = kToolName;
    j["version"] = kVersion;
    j["command"] = m.command;
    j["argv"] = m.argv;
    j["seed"] = m.seed;
    j["tokenizer"] = m.tokenizer;
    j["config_hash"] = fnv1a64_hex(m.effective_config.serialize());
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto& [key, value] : m.effective_config.entries()) {
        cfg[key] = value;
    }
    j["effective_config"] = std::move(cfg);
    return j.dump(2) + "\n";
}

void write(const RunManifest& m, const std::filesystem::path& dir) {
    const std::filesystem::path path = dir / "manifest.json";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out.is_open()) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << render(m);
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace mathrl::manifest
