#pragma once

#include <stdexcept>
#include <string>

namespace ggcam {

// Exit-code carrying error hierarchy. The CLI maps these onto process
// exit codes and prints a single machine-parsable line.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
  static constexpr int exit_code = 2;
  static constexpr const char* prefix = "E_USAGE";
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
  static constexpr int exit_code = 3;
  static constexpr const char* prefix = "E_DATA";
};

struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
  static constexpr int exit_code = 4;
  static constexpr const char* prefix = "E_NUM";
};

}  // namespace ggcam
