#include "manifest.hpp"

#include <system_error>

#include "cpf/errors.hpp"
#include "cpf/io.hpp"

namespace cpf::cli {

Timestamp Clock::now() const {
  if (frozen) return Timestamp{};
  return std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now());
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json inputs_json = nlohmann::json::array();
  for (const auto& in : inputs) {
    inputs_json.push_back(
        {{"role", in.role}, {"path", in.path}, {"sha256", in.sha256}, {"bytes", in.bytes}});
  }
  nlohmann::json j = {
      {"command_line", command_line},
      {"config_hash", config_hash},
      {"inputs", inputs_json},
      {"engine_version", engine_version},
      {"started_at", format_rfc3339(started_at)},
      {"finished_at", format_rfc3339(finished_at)},
      {"outputs", outputs},
      {"status", error ? "error" : "ok"},
  };
  if (error) j["error"] = *error;
  return j;
}

std::string InputReader::read(const std::string& role, const std::filesystem::path& path) {
  std::string bytes = io::read_file(path);
  manifest_.inputs.push_back({role, path.string(), io::sha256_hex(bytes), bytes.size()});
  return bytes;
}

void OutputSet::add(std::string name, std::string content) {
  files_.emplace_back(std::move(name), std::move(content));
}

std::vector<std::string> OutputSet::write(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());
  std::vector<std::string> names;
  for (const auto& [name, content] : files_) {
    io::write_file_atomic(dir / name, content);
    names.push_back(name);
  }
  return names;
}

}  // namespace cpf::cli
