#include "cpf/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>

#include "cpf/errors.hpp"
#include "cpf/io.hpp"

namespace cpf::retrieval {
namespace {

using nlohmann::json;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> distinct_tokens(std::string_view text) {
  auto tokens = tokenize(text);
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return tokens;
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t common = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

std::string snippet_of(const std::string& text, std::size_t max) {
  if (text.size() <= max) return text;
  std::size_t cut = max;
  // Do not split a UTF-8 sequence.
  while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
  return text.substr(0, cut) + "...";
}

std::shared_ptr<const IndexedDoc> make_doc(DocInput in) {
  if (in.id.empty()) throw IndexError("document id must be nonempty");
  auto doc = std::make_shared<IndexedDoc>();
  doc->vector = embed(in.text);
  doc->tokens = distinct_tokens(in.text);
  doc->id = std::move(in.id);
  doc->text = std::move(in.text);
  doc->timestamp = in.timestamp;
  doc->tags = std::move(in.tags);
  return doc;
}

std::string format_score(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", s);
  return buf;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vector embed(std::string_view text) {
  Vector v{};
  for (const auto& token : tokenize(text)) {
    const std::uint64_t h = fnv1a(token);
    const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
    v[h % kReservedBucket] += sign;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm == 0.0) {
    v[kReservedBucket] = 1.0;
    return v;
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

double cosine(const Vector& a, const Vector& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < kDimensions; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

void ScoreWeights::validate() const {
  if (!(alpha >= 0 && beta >= 0 && gamma >= 0)) {
    throw ConfigError("retrieval weights must be nonnegative");
  }
  if (tau.count() <= 0) throw ConfigError("recency time constant must be positive");
}

bool QueryFilter::admits(const IndexedDoc& doc) const {
  if (from && doc.timestamp < *from) return false;
  if (to && !(doc.timestamp < *to)) return false;
  return std::includes(doc.tags.begin(), doc.tags.end(), required_tags.begin(),
                       required_tags.end());
}

DocumentIndex::DocumentIndex(DocumentIndex&& other) noexcept {
  std::unique_lock lock(other.mutex_);
  docs_ = std::move(other.docs_);
  by_id_ = std::move(other.by_id_);
}

DocumentIndex& DocumentIndex::operator=(DocumentIndex&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mutex_, other.mutex_);
    docs_ = std::move(other.docs_);
    by_id_ = std::move(other.by_id_);
  }
  return *this;
}

std::string DocumentIndex::add(DocInput doc) {
  auto built = make_doc(std::move(doc));
  std::unique_lock lock(mutex_);
  if (by_id_.count(built->id) != 0) throw IndexError("duplicate document id '" + built->id + "'");
  by_id_.emplace(built->id, docs_.size());
  docs_.push_back(built);
  return built->id;
}

void DocumentIndex::merge(const DocumentIndex& other) {
  if (&other == this) throw IndexError("cannot merge an index into itself");
  std::vector<std::shared_ptr<const IndexedDoc>> incoming;
  {
    std::shared_lock lock(other.mutex_);
    incoming = other.docs_;
  }
  std::unique_lock lock(mutex_);
  for (const auto& d : incoming) {
    if (by_id_.count(d->id) != 0) throw IndexError("duplicate document id '" + d->id + "'");
  }
  for (const auto& d : incoming) {
    by_id_.emplace(d->id, docs_.size());
    docs_.push_back(d);
  }
}

std::optional<IndexedDoc> DocumentIndex::get(std::string_view id) const {
  std::shared_lock lock(mutex_);
  const auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return *docs_[it->second];
}

std::size_t DocumentIndex::size() const {
  std::shared_lock lock(mutex_);
  return docs_.size();
}

std::optional<Timestamp> DocumentIndex::newest() const {
  std::shared_lock lock(mutex_);
  std::optional<Timestamp> out;
  for (const auto& d : docs_) {
    if (!out || *out < d->timestamp) out = d->timestamp;
  }
  return out;
}

std::vector<Hit> DocumentIndex::query(std::string_view text, const QueryOptions& options) const {
  if (options.top_k == 0) throw UsageError("top-k must be at least 1");
  options.weights.validate();
  std::vector<std::shared_ptr<const IndexedDoc>> snapshot;
  {
    std::shared_lock lock(mutex_);
    snapshot = docs_;
  }
  if (snapshot.empty()) throw IndexError("query against an empty index");

  Timestamp as_of{};
  if (options.as_of) {
    as_of = *options.as_of;
  } else {
    as_of = snapshot.front()->timestamp;
    for (const auto& d : snapshot) as_of = std::max(as_of, d->timestamp);
  }

  const Vector q = embed(text);
  const auto q_tokens = distinct_tokens(text);
  const double tau_ms = static_cast<double>(options.weights.tau.count());
  std::vector<Hit> hits;
  for (const auto& d : snapshot) {
    if (!options.filter.admits(*d)) continue;
    Hit h;
    h.id = d->id;
    h.timestamp = d->timestamp;
    h.cosine = cosine(q, d->vector);
    h.jaccard = jaccard(q_tokens, d->tokens);
    const double age = std::max(0.0, static_cast<double>((as_of - d->timestamp).count()));
    h.recency = std::exp(-age / tau_ms);
    h.semantic = options.weights.alpha * h.cosine;
    h.keyword = options.weights.beta * h.jaccard;
    h.temporal = options.weights.gamma * h.recency;
    h.score = h.semantic + h.keyword + h.temporal;
    hits.push_back(std::move(h));
  }
  auto better = [](const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  };
  const std::size_t keep = std::min(options.top_k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(),
                    better);
  hits.resize(keep);
  // Snippets come from the snapshot, not the live index.
  std::unordered_map<std::string_view, const IndexedDoc*> by_id;
  for (const auto& d : snapshot) by_id.emplace(d->id, d.get());
  for (auto& h : hits) h.snippet = snippet_of(by_id.at(h.id)->text, options.max_snippet);
  return hits;
}

std::string DocumentIndex::serialize() const {
  std::shared_lock lock(mutex_);
  std::string out = json{{"format", "cpf-index"},
                         {"version", kIndexFormatVersion},
                         {"embedder", kEmbedderId},
                         {"dimensions", kDimensions},
                         {"count", docs_.size()}}
                        .dump();
  out += '\n';
  for (const auto& d : docs_) {
    out += json{{"id", d->id},
                {"text", d->text},
                {"timestamp", format_rfc3339(d->timestamp)},
                {"tags", d->tags}}
               .dump();
    out += '\n';
  }
  return out;
}

DocumentIndex DocumentIndex::deserialize(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw IndexError("index file is empty");
  const json header = json::parse(line, nullptr, false);
  if (header.is_discarded() || !header.is_object() || header.value("format", "") != "cpf-index") {
    throw IndexError("index file lacks the cpf-index header");
  }
  if (header.value("version", -1) != kIndexFormatVersion) {
    throw IndexError("unsupported index version");
  }
  if (header.value("embedder", "") != kEmbedderId ||
      header.value("dimensions", std::size_t{0}) != kDimensions) {
    throw IndexError("index was built with a different embedder");
  }
  DocumentIndex index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = json::parse(line, nullptr, false);
    const auto where = "index line " + std::to_string(line_no) + ": ";
    if (j.is_discarded() || !j.is_object()) throw IndexError(where + "malformed JSON");
    try {
      DocInput doc;
      doc.id = j.at("id").get<std::string>();
      doc.text = j.at("text").get<std::string>();
      auto ts = parse_rfc3339(j.at("timestamp").get<std::string>());
      if (!ts) throw IndexError(where + "invalid timestamp");
      doc.timestamp = *ts;
      for (const auto& t : j.value("tags", json::array())) doc.tags.insert(t.get<std::string>());
      index.add(std::move(doc));
    } catch (const json::exception& e) {
      throw IndexError(where + e.what());
    }
  }
  if (index.size() != header.value("count", std::size_t{0})) {
    throw IndexError("index document count does not match its header");
  }
  return index;
}

void DocumentIndex::save(const std::filesystem::path& path) const {
  io::write_file_atomic(path, serialize());
}

DocumentIndex DocumentIndex::load(const std::filesystem::path& path) {
  return deserialize(io::read_file(path));
}

std::string segment_of(const Hit& hit) {
  return "\n\n[doc " + hit.id + " score=" + format_score(hit.score) + "]\n" + hit.snippet;
}

ContextBundle assemble_context(std::string_view query, std::vector<Hit> hits, std::size_t budget) {
  if (query.size() > budget) {
    throw UsageError("context budget of " + std::to_string(budget) +
                     " characters is smaller than the query");
  }
  ContextBundle b;
  b.query = std::string(query);
  b.assembled_text = b.query;
  for (const auto& h : hits) {
    const std::string seg = segment_of(h);
    if (b.assembled_text.size() + seg.size() > budget) break;
    b.assembled_text += seg;
    ++b.included;
  }
  b.hits = std::move(hits);
  return b;
}

json to_json(const Hit& hit) {
  return {
      {"id", hit.id},
      {"timestamp", format_rfc3339(hit.timestamp)},
      {"score", hit.score},
      {"components",
       {{"semantic", hit.semantic}, {"keyword", hit.keyword}, {"temporal", hit.temporal}}},
      {"raw", {{"cosine", hit.cosine}, {"jaccard", hit.jaccard}, {"recency", hit.recency}}},
      {"snippet", hit.snippet},
  };
}

json to_json(const ContextBundle& bundle) {
  json hits = json::array();
  for (const auto& h : bundle.hits) hits.push_back(to_json(h));
  return {
      {"query", bundle.query},
      {"hits", hits},
      {"included", bundle.included},
      {"assembled_text", bundle.assembled_text},
  };
}

ConsumerResponse EchoConsumer::consume(const ContextBundle& bundle) {
  const double top = bundle.hits.empty() ? 0.0 : bundle.hits.front().score;
  return {bundle.assembled_text, std::clamp(top, 0.0, 1.0)};
}

}  // namespace cpf::retrieval
