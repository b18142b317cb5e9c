#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "cpf/domain.hpp"
#include "cpf/errors.hpp"

namespace cpf {

struct Provenance {
  std::vector<std::string> sources;
  Timestamp ingested_at{};
};

struct DatasetBundle {
  std::vector<AlertRecord> alerts;
  std::vector<VulnRecord> vulns;
  std::vector<CommItem> comm;
  Provenance provenance;
};

struct RejectedLine {
  std::size_t line = 0;  // 1-based
  std::string reason;

  friend bool operator==(const RejectedLine&, const RejectedLine&) = default;
};

struct IngestReport {
  std::map<RecordKind, std::size_t> accepted;
  std::vector<RejectedLine> rejected;
  /// Nonblank input lines seen.
  std::size_t total_lines = 0;

  std::size_t accepted_total() const;
  void merge(const IngestReport& other);
  friend bool operator==(const IngestReport&, const IngestReport&) = default;
};

/// Parses line-delimited JSON records of one kind from a stream, appending
/// accepted records to `into`. Blank lines are skipped; every other line is
/// either accepted or listed as rejected with its 1-based line number.
IngestReport parse_records(std::istream& in, RecordKind kind, DatasetBundle& into);

/// File variant. Throws IoError when the file cannot be read.
IngestReport load_dataset(const std::filesystem::path& path, RecordKind kind, DatasetBundle& into);

/// Same as load_dataset, with the kind given by name ("alerts", "vulns", "comm").
/// Throws UsageError for an unknown kind.
IngestReport load_dataset(const std::filesystem::path& path, std::string_view kind,
                          DatasetBundle& into);

struct DuplicateId {
  RecordKind kind;
  std::string id;
  std::string first_source;
  std::string second_source;
};

class MergeError : public DataError {
 public:
  explicit MergeError(std::vector<DuplicateId> duplicates);
  const char* kind() const noexcept override { return "merge"; }
  const std::vector<DuplicateId>& duplicates() const { return duplicates_; }

 private:
  std::vector<DuplicateId> duplicates_;
};

/// Concatenates bundles in order. Any id appearing twice within a record kind
/// raises MergeError listing every duplicate with both provenances.
DatasetBundle merge_bundles(const std::vector<DatasetBundle>& bundles);

}  // namespace cpf
