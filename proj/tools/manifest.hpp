#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpf/time.hpp"

namespace cpf::cli {

inline constexpr std::string_view kEngineVersion = "0.1.0";

/// Wall clock, or the Unix epoch when frozen (for byte-stable outputs).
struct Clock {
  bool frozen = false;
  Timestamp now() const;
};

struct InputDigest {
  std::string role;  // flag that named the file
  std::string path;
  std::string sha256;
  std::uint64_t bytes = 0;
};

struct RunManifest {
  std::vector<std::string> command_line;
  std::string config_hash;
  std::vector<InputDigest> inputs;
  std::string engine_version{kEngineVersion};
  Timestamp started_at{};
  Timestamp finished_at{};
  std::vector<std::string> outputs;
  /// Set when the run failed after its flags were accepted.
  std::optional<nlohmann::json> error;

  nlohmann::json to_json() const;
};

/// Reads an input file once, records its digest, and returns the bytes so the
/// digest covers exactly what is processed.
class InputReader {
 public:
  explicit InputReader(RunManifest& manifest) : manifest_(manifest) {}
  std::string read(const std::string& role, const std::filesystem::path& path);

 private:
  RunManifest& manifest_;
};

/// Output files staged in memory and written together at the end of a run.
class OutputSet {
 public:
  void add(std::string name, std::string content);
  /// Creates `dir` and writes every file atomically; returns the names.
  std::vector<std::string> write(const std::filesystem::path& dir) const;
  bool empty() const { return files_.empty(); }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

}  // namespace cpf::cli
