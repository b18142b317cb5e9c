#include "cpf/ingestion.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "cpf/codec.hpp"

namespace cpf {
namespace {

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string join_reasons(const std::vector<Violation>& vs) {
  std::string out;
  for (const auto& v : vs) {
    if (!out.empty()) out += "; ";
    out += v.to_string();
  }
  return out;
}

template <typename Record, typename Decoder>
void accept_line(const codec::json& j, Decoder decode, std::vector<Record>& sink,
                 std::unordered_set<std::string>& seen, std::size_t line_no,
                 IngestReport& report, RecordKind kind) {
  auto decoded = decode(j);
  if (!decoded.ok()) {
    report.rejected.push_back({line_no, join_reasons(decoded.violations)});
    return;
  }
  if (!seen.insert(decoded.record->id).second) {
    report.rejected.push_back({line_no, "id: duplicate id " + decoded.record->id});
    return;
  }
  sink.push_back(std::move(*decoded.record));
  ++report.accepted[kind];
}

std::string source_label(const DatasetBundle& b) {
  if (b.provenance.sources.empty()) return "<memory>";
  std::string out;
  for (const auto& s : b.provenance.sources) {
    if (!out.empty()) out += ",";
    out += s;
  }
  return out;
}

template <typename Record>
void merge_kind(const std::vector<DatasetBundle>& bundles,
                std::vector<Record> DatasetBundle::*member, RecordKind kind,
                std::vector<Record>& out, std::vector<DuplicateId>& dups) {
  std::unordered_map<std::string, std::size_t> owner;
  for (std::size_t b = 0; b < bundles.size(); ++b) {
    for (const auto& rec : bundles[b].*member) {
      auto [it, inserted] = owner.emplace(rec.id, b);
      if (!inserted) {
        dups.push_back({kind, rec.id, source_label(bundles[it->second]), source_label(bundles[b])});
        continue;
      }
      out.push_back(rec);
    }
  }
}

}  // namespace

std::size_t IngestReport::accepted_total() const {
  return std::accumulate(accepted.begin(), accepted.end(), std::size_t{0},
                         [](std::size_t acc, const auto& kv) { return acc + kv.second; });
}

void IngestReport::merge(const IngestReport& other) {
  for (const auto& [k, n] : other.accepted) accepted[k] += n;
  rejected.insert(rejected.end(), other.rejected.begin(), other.rejected.end());
  total_lines += other.total_lines;
}

IngestReport parse_records(std::istream& in, RecordKind kind, DatasetBundle& into) {
  IngestReport report;
  report.accepted[kind] = 0;
  std::unordered_set<std::string> seen;
  auto seed_seen = [&](const auto& records) {
    for (const auto& r : records) seen.insert(r.id);
  };
  switch (kind) {
    case RecordKind::Alerts: seed_seen(into.alerts); break;
    case RecordKind::Vulns: seed_seen(into.vulns); break;
    case RecordKind::Comm: seed_seen(into.comm); break;
  }

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    ++report.total_lines;
    codec::json j = codec::json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) {
      report.rejected.push_back({line_no, "line: malformed JSON"});
      continue;
    }
    switch (kind) {
      case RecordKind::Alerts:
        accept_line(j, codec::decode_alert, into.alerts, seen, line_no, report, kind);
        break;
      case RecordKind::Vulns:
        accept_line(j, codec::decode_vuln, into.vulns, seen, line_no, report, kind);
        break;
      case RecordKind::Comm:
        accept_line(j, codec::decode_comm, into.comm, seen, line_no, report, kind);
        break;
    }
  }
  return report;
}

IngestReport load_dataset(const std::filesystem::path& path, RecordKind kind,
                          DatasetBundle& into) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  auto report = parse_records(in, kind, into);
  if (in.bad()) throw IoError("read failure on " + path.string());
  into.provenance.sources.push_back(path.string());
  return report;
}

IngestReport load_dataset(const std::filesystem::path& path, std::string_view kind,
                          DatasetBundle& into) {
  auto k = parse_record_kind(kind);
  if (!k) throw UsageError("unknown record kind '" + std::string(kind) + "'");
  return load_dataset(path, *k, into);
}

MergeError::MergeError(std::vector<DuplicateId> duplicates)
    : DataError([&] {
        std::string msg = "duplicate ids across bundles:";
        for (const auto& d : duplicates) {
          msg += " " + std::string(to_string(d.kind)) + "/" + d.id + " (" + d.first_source +
                 " vs " + d.second_source + ")";
        }
        return msg;
      }()),
      duplicates_(std::move(duplicates)) {}

DatasetBundle merge_bundles(const std::vector<DatasetBundle>& bundles) {
  DatasetBundle out;
  std::vector<DuplicateId> dups;
  merge_kind(bundles, &DatasetBundle::alerts, RecordKind::Alerts, out.alerts, dups);
  merge_kind(bundles, &DatasetBundle::vulns, RecordKind::Vulns, out.vulns, dups);
  merge_kind(bundles, &DatasetBundle::comm, RecordKind::Comm, out.comm, dups);
  if (!dups.empty()) throw MergeError(std::move(dups));
  for (const auto& b : bundles) {
    out.provenance.sources.insert(out.provenance.sources.end(), b.provenance.sources.begin(),
                                  b.provenance.sources.end());
    out.provenance.ingested_at = std::max(out.provenance.ingested_at, b.provenance.ingested_at);
  }
  return out;
}

}  // namespace cpf
