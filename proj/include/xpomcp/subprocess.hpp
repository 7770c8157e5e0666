#pragma once

#include <string>

namespace xpomcp {

struct SubprocessResult {
    int exit_code = -1;
    bool timed_out = false;
    std::string stdout_text;
    std::string stderr_text;
};

// Runs `path` feeding `input` on stdin and capturing both output streams.
// Kills the process (and its children) after timeout_seconds.
SubprocessResult run_subprocess(const std::string& path, const std::string& input,
                                double timeout_seconds);

}  // namespace xpomcp
