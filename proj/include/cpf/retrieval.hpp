#pragma once

// Document index over metric snapshots and anonymized snippets, hybrid
// scoring (embedding cosine + keyword Jaccard + recency), and context
// assembly for a downstream consumer.

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "cpf/time.hpp"

namespace cpf::retrieval {

inline constexpr std::size_t kDimensions = 384;
/// Bucket reserved for texts whose hashed vector is zero (e.g. empty text).
/// Tokens hash into the other 383 buckets only.
inline constexpr std::size_t kReservedBucket = kDimensions - 1;
inline constexpr std::string_view kEmbedderId = "fhash-384-v1";
inline constexpr int kIndexFormatVersion = 1;

using Vector = std::array<double, kDimensions>;

/// Lowercased ASCII-alphanumeric runs, in text order.
std::vector<std::string> tokenize(std::string_view text);

/// Signed feature hashing of the token bag (FNV-1a 64-bit; bucket = h mod 383,
/// sign from the top bit), L2-normalized.
Vector embed(std::string_view text);

double cosine(const Vector& a, const Vector& b);

struct DocInput {
  std::string id;
  /// Must already be anonymized.
  std::string text;
  Timestamp timestamp;
  std::set<std::string> tags;
};

struct IndexedDoc {
  std::string id;
  std::string text;
  Timestamp timestamp;
  std::set<std::string> tags;
  Vector vector;
  /// Distinct tokens, sorted.
  std::vector<std::string> tokens;
};

struct ScoreWeights {
  double alpha = 0.6;
  double beta = 0.3;
  double gamma = 0.1;
  Millis tau = std::chrono::hours(24 * 30);

  /// Throws ConfigError for negative weights or a non-positive tau.
  void validate() const;
};

struct QueryFilter {
  /// A document must carry every listed tag.
  std::set<std::string> required_tags;
  std::optional<Timestamp> from;  // inclusive
  std::optional<Timestamp> to;    // exclusive

  bool admits(const IndexedDoc& doc) const;
};

struct QueryOptions {
  std::size_t top_k = 5;
  ScoreWeights weights;
  QueryFilter filter;
  /// Reference time for recency; defaults to the newest document in the index.
  std::optional<Timestamp> as_of;
  /// Snippets longer than this are cut (at a character boundary) and marked.
  std::size_t max_snippet = 400;
};

struct Hit {
  std::string id;
  Timestamp timestamp;
  /// Raw similarity terms.
  double cosine = 0.0;
  double jaccard = 0.0;
  double recency = 0.0;
  /// The three weighted addends; score == semantic + keyword + temporal.
  double semantic = 0.0;
  double keyword = 0.0;
  double temporal = 0.0;
  double score = 0.0;
  std::string snippet;
};

class DocumentIndex {
 public:
  DocumentIndex() = default;
  DocumentIndex(DocumentIndex&& other) noexcept;
  DocumentIndex& operator=(DocumentIndex&& other) noexcept;
  DocumentIndex(const DocumentIndex&) = delete;
  DocumentIndex& operator=(const DocumentIndex&) = delete;

  /// Throws IndexError for an empty or duplicate id.
  std::string add(DocInput doc);
  /// Adds every document of `other`; throws IndexError on the first shared id
  /// without modifying this index.
  void merge(const DocumentIndex& other);

  std::optional<IndexedDoc> get(std::string_view id) const;
  std::size_t size() const;
  std::optional<Timestamp> newest() const;

  /// Hits for documents passing the filter, sorted by score descending then
  /// id ascending, at most top_k. Throws IndexError on an empty index and
  /// UsageError when top_k is 0. Safe to call concurrently with add().
  std::vector<Hit> query(std::string_view text, const QueryOptions& options = {}) const;

  /// Text format: a JSON header line {"format":"cpf-index","version",
  /// "embedder","dimensions","count"} followed by one JSON object per
  /// document {"id","text","timestamp","tags"} in insertion order. Vectors
  /// are recomputed on load, so the header's embedder id must match.
  std::string serialize() const;
  /// Throws IndexError for a wrong header or malformed document line.
  static DocumentIndex deserialize(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static DocumentIndex load(const std::filesystem::path& path);

 private:
  mutable std::shared_mutex mutex_;
  std::vector<std::shared_ptr<const IndexedDoc>> docs_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

struct ContextBundle {
  std::string query;
  std::vector<Hit> hits;
  /// Query first, then one "\n\n[doc <id> score=<s>]\n<snippet>" segment per
  /// included hit, in rank order.
  std::string assembled_text;
  std::size_t included = 0;
};

/// Appends segments in rank order while the total length stays within
/// `budget` characters, stopping at the first segment that does not fit.
/// Throws UsageError when the query alone exceeds the budget.
ContextBundle assemble_context(std::string_view query, std::vector<Hit> hits, std::size_t budget);

/// The header line of a hit inside assembled text.
std::string segment_of(const Hit& hit);

nlohmann::json to_json(const Hit& hit);
nlohmann::json to_json(const ContextBundle& bundle);

struct ConsumerResponse {
  std::string text;
  double confidence = 0.0;
};

/// Downstream analysis slot: takes a context bundle, returns text and a
/// confidence in [0, 1].
class ContextConsumer {
 public:
  virtual ~ContextConsumer() = default;
  virtual ConsumerResponse consume(const ContextBundle& bundle) = 0;
};

/// Returns the assembled text unchanged; confidence is the clamped top score.
class EchoConsumer : public ContextConsumer {
 public:
  ConsumerResponse consume(const ContextBundle& bundle) override;
};

}  // namespace cpf::retrieval
