// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

namespace tvc::tools {

struct CommandResult {
    int exit_code = 0;
    std::string output;  // captured stdout
};

/// Runs `command` through /bin/sh, capturing stdout.
CommandResult run_command(const std::string & command);

/// Single-quotes an argument for the shell.
std::string shell_quote(const std::string & arg);

/// Parses the first whitespace-delimited token of `text` as a double.
double parse_number(const std::string & text);

/// A file under the temp directory, removed on destruction.
class TempFile {
public:
    explicit TempFile(const std::string & suffix);
    ~TempFile();
    TempFile(const TempFile &) = delete;
    TempFile & operator=(const TempFile &) = delete;

    const std::filesystem::path & path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

} // namespace tvc::tools
