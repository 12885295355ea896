// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

namespace mathrl::unicode {

// Canonical composition (NFC) of UTF-8 text. Invalid byte sequences are
// replaced with U+FFFD, matching ICU's converter behavior.
std::string nfc(std::string_view utf8);

} // namespace mathrl::unicode
