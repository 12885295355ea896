// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Minimal "key = value" config files: one pair per line, '#' starts a
// comment, blank lines ignored. Values are strings until a typed getter
// interprets them, so unknown keys survive a parse/serialize round trip.

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mathrl::keyvalue {

class Config {
  public:
    static Config parse_file(const std::filesystem::path& path);
    static Config parse_string(std::string_view text, std::string_view origin = "<string>");

    bool contains(std::string_view key) const;

    // Required getters throw ValidationError naming the key; *_or getters
    // fall back to the provided default when the key is absent.
    std::string get_string(std::string_view key) const;
    std::string get_string_or(std::string_view key, std::string_view fallback) const;
    long long get_int(std::string_view key) const;
    long long get_int_or(std::string_view key, long long fallback) const;
    double get_double(std::string_view key) const;
    double get_double_or(std::string_view key, double fallback) const;
    bool get_bool(std::string_view key) const;
    bool get_bool_or(std::string_view key, bool fallback) const;

    // set() keeps the insertion position of an existing key.
    void set(std::string_view key, std::string_view value);
    void set_int(std::string_view key, long long value);
    void set_double(std::string_view key, double value); // shortest round-trip text
    void set_bool(std::string_view key, bool value);

    // Insertion-ordered view, used for serialization and manifests.
    const std::vector<std::pair<std::string, std::string>>& entries() const {
        return entries_;
    }

    std::string serialize() const; // "key = value\n" per entry, insertion order
    void write_file(const std::filesystem::path& path) const;

  private:
    std::optional<std::string_view> find(std::string_view key) const;

    std::vector<std::pair<std::string, std::string>> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

} // namespace mathrl::keyvalue
