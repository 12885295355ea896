// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Tiny CSV emission helpers. Our CSVs never need quoting: ids are
// validated not to contain commas/newlines before a row is written.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mathrl::csv {

// Fixed 9-decimal rendering used for every float column, so re-parsing a
// CSV reproduces in-memory values to well under 1e-9.
std::string fixed9(double value);

// Throws ValidationError if a cell contains a comma, CR, or LF.
std::string join_row(const std::vector<std::string>& cells);

// Writes header + rows, '\n' line endings, trailing newline.
void write_file(const std::filesystem::path& path, const std::string& header,
                const std::vector<std::string>& rows);

// Cell-level variant: every cell passes through join_row validation.
void write_file(const std::filesystem::path& path,
                const std::vector<std::string>& header_cells,
                const std::vector<std::vector<std::string>>& rows);

} // namespace mathrl::csv
