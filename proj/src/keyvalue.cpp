// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "mathrl/keyvalue.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "mathrl/errors.hpp"

namespace mathrl::keyvalue {

namespace {

std::string_view trim(std::string_view s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) return {};
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value,
                            std::string_view expected) {
    throw ValidationError("config key \"" + std::string(key) + "\" has value \"" +
                          std::string(value) + "\", expected " + std::string(expected));
}

long long parse_int(std::string_view key, std::string_view value) {
    long long out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        bad_value(key, value, "an integer");
    }
    return out;
}

double parse_double(std::string_view key, std::string_view value) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        bad_value(key, value, "a number");
    }
    return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
    if (value == "true") return true;
    if (value == "false") return false;
    bad_value(key, value, "\"true\" or \"false\"");
}

} // namespace

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc()) throw ValidationError("cannot format double value");
    return std::string(buf, ptr);
}

Config Config::parse_string(std::string_view text, std::string_view origin) {
    Config cfg;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const std::string_view raw =
            text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ValidationError(std::string(origin) + ":" + std::to_string(line_no) +
                                  ": expected \"key = value\"");
        }
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ValidationError(std::string(origin) + ":" + std::to_string(line_no) +
                                  ": empty key");
        }
        if (cfg.contains(key)) {
            throw ValidationError(std::string(origin) + ":" + std::to_string(line_no) +
                                  ": duplicate key \"" + std::string(key) + "\"");
        }
        cfg.set(key, value);
    }
    return cfg;
}

Config Config::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.is_open()) {
        throw IoError("cannot open config file " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path.string());
}

bool Config::contains(std::string_view key) const {
    return index_.contains(std::string(key));
}

std::optional<std::string_view> Config::find(std::string_view key) const {
    auto it = index_.find(std::string(key));
    if (it == index_.end()) return std::nullopt;
    return std::string_view(entries_[it->second].second);
}

std::string Config::get_string(std::string_view key) const {
    auto v = find(key);
    if (!v) throw ValidationError("missing config key \"" + std::string(key) + "\"");
    return std::string(*v);
}

std::string Config::get_string_or(std::string_view key, std::string_view fallback) const {
    auto v = find(key);
    return std::string(v.value_or(fallback));
}

long long Config::get_int(std::string_view key) const {
    return parse_int(key, get_string(key));
}

long long Config::get_int_or(std::string_view key, long long fallback) const {
    auto v = find(key);
    return v ? parse_int(key, *v) : fallback;
}

double Config::get_double(std::string_view key) const {
    return parse_double(key, get_string(key));
}

double Config::get_double_or(std::string_view key, double fallback) const {
    auto v = find(key);
    return v ? parse_double(key, *v) : fallback;
}

bool Config::get_bool(std::string_view key) const {
    return parse_bool(key, get_string(key));
}

bool Config::get_bool_or(std::string_view key, bool fallback) const {
    auto v = find(key);
    return v ? parse_bool(key, *v) : fallback;
}

void Config::set(std::string_view key, std::string_view value) {
    auto it = index_.find(std::string(key));
    if (it != index_.end()) {
        entries_[it->second].second = std::string(value);
        return;
    }
    index_.emplace(std::string(key), entries_.size());
    entries_.emplace_back(std::string(key), std::string(value));
}

void Config::set_int(std::string_view key, long long value) {
    set(key, std::to_string(value));
}

void Config::set_double(std::string_view key, double value) {
    set(key, format_double(value));
}

void Config::set_bool(std::string_view key, bool value) {
    set(key, value ? "true" : "false");
}

std::string Config::serialize() const {
    std::string out;
    for (const auto& [key, value] : entries_) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    }
    return out;
}

void Config::write_file(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out.is_open()) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << serialize();
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace mathrl::keyvalue
