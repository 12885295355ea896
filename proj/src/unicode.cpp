// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "mathrl/unicode.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "mathrl/errors.hpp"

namespace mathrl::unicode {

std::string nfc(std::string_view utf8) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || norm == nullptr) {
        throw IoError("ICU NFC normalizer unavailable");
    }
    const icu::UnicodeString input = icu::UnicodeString::fromUTF8(
        icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
    const icu::UnicodeString normalized = norm->normalize(input, status);
    if (U_FAILURE(status)) {
        throw IoError("ICU NFC normalization failed");
    }
    std::string out;
    normalized.toUTF8String(out);
    return out;
}

} // namespace mathrl::unicode
