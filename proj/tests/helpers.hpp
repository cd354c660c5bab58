#pragma once

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "blmchain/cli.hpp"

namespace testing_support {

struct RunResult {
  int code = 0;
  std::string out;
  std::string err;
};

/// Runs the CLI in-process.
inline RunResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  RunResult r;
  r.code = blmchain::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

/// Runs a shell command and captures stdout.
inline RunResult shell(const std::string& command) {
  RunResult r;
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) {
    r.code = -1;
    return r;
  }
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  std::random_device rd;
  auto dir = std::filesystem::temp_directory_path() /
             ("blmchain-" + name + "-" + std::to_string(rd()) + std::to_string(rd()));
  std::filesystem::create_directories(dir);
  return dir;
}

inline blmchain::tsp::TspInstance unit_square() {
  return blmchain::tsp::TspInstance{"square", {{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
}

}  // namespace testing_support
