// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace mathrl {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kToolName = "mathrl";

} // namespace mathrl
