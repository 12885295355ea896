// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mathrl {

// Bad user input: flags, config files, out-of-range parameters. The CLI maps
// this to exit code 1; everything else derived from std::runtime_error maps
// to exit code 2.
class ValidationError : public std::runtime_error {
  public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Unreadable file, unwritable directory, and similar fatal I/O conditions.
class IoError : public std::runtime_error {
  public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace mathrl
