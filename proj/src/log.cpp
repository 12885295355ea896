// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "mathrl/log.hpp"

#include <atomic>
#include <mutex>

#include "mathrl/errors.hpp"

namespace mathrl::log {

namespace {

std::atomic<Level> g_threshold{Level::info};
std::mutex g_mutex;

const char* label(Level level) {
    switch (level) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
    }
    return "?";
}

} // namespace

Level threshold() { return g_threshold.load(std::memory_order_relaxed); }

void set_threshold(Level level) { g_threshold.store(level, std::memory_order_relaxed); }

Level parse_level(std::string_view name) {
    if (name == "debug") return Level::debug;
    if (name == "info") return Level::info;
    if (name == "warn") return Level::warn;
    if (name == "error") return Level::error;
    throw ValidationError("--log-level: unknown level '" + std::string(name) +
                          "' (expected debug|info|warn|error)");
}

void write(Level level, std::string_view message) {
    if (level < threshold()) return;
    std::lock_guard<std::mutex> lock(g_mutex);
    std::fprintf(stderr, "[%s] %.*s\n", label(level), static_cast<int>(message.size()),
                 message.data());
}

} // namespace mathrl::log
