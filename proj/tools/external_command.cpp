// SPDX-License-Identifier: Apache-2.0
#include "external_command.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <atomic>
#include <cstdio>
#include <sstream>

#include "tvc/error.hpp"

namespace tvc::tools {

CommandResult run_command(const std::string & command) {
    FILE * pipe = ::popen(command.c_str(), "r");
    if (pipe == nullptr) {
        raise(Errc::IoFailure, "cannot run '" + command + "'");
    }
    CommandResult result;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
        result.output.append(buf.data(), n);
    }
    const int status = ::pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string shell_quote(const std::string & arg) {
    std::string out = "'";
    for (char c : arg) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    out += "'";
    return out;
}

double parse_number(const std::string & text) {
    std::istringstream in(text);
    std::string token;
    if (!(in >> token)) {
        raise(Errc::InvalidArgument, "command printed no number");
    }
    std::size_t used = 0;
    double v         = 0.0;
    try {
        v = std::stod(token, &used);
    } catch (const std::exception &) {
        used = 0;
    }
    if (used != token.size()) {
        raise(Errc::InvalidArgument, "command printed '" + token + "', expected a number");
    }
    return v;
}

TempFile::TempFile(const std::string & suffix) {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("tvc-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + suffix);
}

TempFile::~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
}

} // namespace tvc::tools
