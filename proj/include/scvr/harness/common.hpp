#pragma once

// Error codes and small helpers shared by the command-line front-end.

#include <cstdlib>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace scvr::harness {

/// Process exit codes.
enum class Exit : int { ok = 0, verify_failed = 1, config = 2, data = 3, divergence = 4 };

/// An error reported as a single line "error[CODE]: message".
class CliError : public std::runtime_error {
 public:
  CliError(std::string code, Exit exit, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)), exit_(exit) {}

  const std::string& code() const { return code_; }
  int exit_code() const { return static_cast<int>(exit_); }
  std::string line() const { return "error[" + code_ + "]: " + flatten(what()); }

 private:
  static std::string flatten(std::string s) {
    for (char& ch : s)
      if (ch == '\n' || ch == '\r') ch = ' ';
    return s;
  }

  std::string code_;
  Exit exit_;
};

inline CliError config_error(const std::string& msg) { return {"CONFIG", Exit::config, msg}; }
inline CliError data_error(const std::string& msg) { return {"DATA", Exit::data, msg}; }
inline CliError divergence_error(const std::string& msg) {
  return {"DIVERGENCE", Exit::divergence, msg};
}

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "SCVR_OUTPUT_DIR";

/// Relative output paths are placed under $SCVR_OUTPUT_DIR when it is set.
inline std::string resolve_output(const std::string& path, const std::string& fallback_name) {
  std::filesystem::path p = path.empty() ? std::filesystem::path(fallback_name) : std::filesystem::path(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0')
      p = std::filesystem::path(dir) / p;
  }
  return p.string();
}

}  // namespace scvr::harness
