// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "mathrl/csv.hpp"

#include <cstdio>
#include <fstream>

#include "mathrl/errors.hpp"

namespace mathrl::csv {

std::string fixed9(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9f", value);
    return buf;
}

std::string join_row(const std::vector<std::string>& cells) {
    std::string row;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].find_first_of(",\r\n") != std::string::npos) {
            throw ValidationError("CSV cell \"" + cells[i] + "\" needs quoting, which this "
                                  "writer does not support");
        }
        if (i > 0) row += ',';
        row += cells[i];
    }
    return row;
}

void write_file(const std::filesystem::path& path, const std::string& header,
                const std::vector<std::string>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out.is_open()) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << header << '\n';
    for (const auto& row : rows) out << row << '\n';
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

void write_file(const std::filesystem::path& path,
                const std::vector<std::string>& header_cells,
                const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::string> joined;
    joined.reserve(rows.size());
    for (const auto& cells : rows) joined.push_back(join_row(cells));
    write_file(path, join_row(header_cells), joined);
}

} // namespace mathrl::csv
