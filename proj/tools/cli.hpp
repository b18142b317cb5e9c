#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cpf::cli {

/// Process environment the CLI reads. Kept explicit so tests can run the CLI
/// in-process.
struct RunEnv {
  /// Value of CPF_SALT, when set.
  std::optional<std::string> salt;
};

/// Runs one command line (without the program name). Returns the exit code:
/// 0 success, 1 usage or configuration error, 2 data error, 3 internal error.
/// Errors are reported on `err` as one JSON line
/// {"error": {"kind", "message", "exit_code"}}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const RunEnv& env = {});

}  // namespace cpf::cli
