// Copyright (c) 2026 The mathrl Authors
// SPDX-License-Identifier: Apache-2.0
//
// Shared test helpers: fixture paths, scratch directories, file slurping,
// and a CLI runner that captures output and exit status.

#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace testutil {

inline std::filesystem::path fixtures_dir() {
#ifdef MATHRL_FIXTURES_DIR
    return std::filesystem::path(MATHRL_FIXTURES_DIR);
#else
    return std::filesystem::path("tests") / "fixtures";
#endif
}

inline std::filesystem::path fixture(const std::string& rel) {
    return fixtures_dir() / rel;
}

// Unique scratch directory, removed on destruction.
class TempDir {
  public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        const auto base = std::filesystem::temp_directory_path();
        path_ = base / ("mathrl_test_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

  private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

struct CliResult {
    int exit_code = -1;
    std::string output; // stdout and stderr interleaved
};

// Runs the mathrl binary with `args` appended; captures combined output.
inline CliResult run_cli(const std::string& args) {
#ifdef MATHRL_CLI_PATH
    const std::string binary = MATHRL_CLI_PATH;
#else
    const std::string binary = "mathrl";
#endif
    const std::string cmd = binary + " " + args + " 2>&1";
    CliResult result;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) return result;
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = ::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
        result.output.append(buf.data(), n);
    }
    const int status = ::pclose(pipe);
    if (status >= 0 && WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    }
    return result;
}

} // namespace testutil
