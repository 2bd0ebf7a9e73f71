#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cbvc {

struct ProcessResult {
  int exit_code = -1;  // 128 + signal number when killed by a signal
  std::string stderr_text;
  double wall_seconds = 0.0;
};

// Looks `name` up on PATH unless it already contains a slash.
std::optional<std::filesystem::path> find_executable(const std::string& name);

// Runs argv[0] (resolved via PATH) with stdin and stdout on /dev/null and
// stderr captured. Throws IoError if the process cannot be started.
ProcessResult run_process(const std::vector<std::string>& argv);

}  // namespace cbvc
