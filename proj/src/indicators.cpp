#include "cpf/indicators.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_set>

#include "cpf/codec.hpp"
#include "cpf/errors.hpp"
#include "cpf/stats.hpp"

namespace cpf::indicators {
namespace {

bool in_scope(const AlertRecord& a, const Scope& scope) {
  switch (scope.kind) {
    case Scope::Kind::Org: return true;
    case Scope::Kind::Team: return a.team && *a.team == scope.id;
    case Scope::Kind::Analyst: return a.assigned_to && *a.assigned_to == scope.id;
  }
  return false;
}

long long floor_div(long long a, long long b) {
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

IndicatorResult make_result(Indicator ind, const Scope& scope, const TimeRange& range) {
  IndicatorResult r;
  r.indicator = ind;
  r.scope = scope;
  r.range = range;
  return r;
}

void require_range(const TimeRange& range) {
  if (!(range.start < range.end)) throw UsageError("time range start must precede end");
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

bool IgnoreMarkers::matches(const std::optional<std::string>& notes) const {
  if (!notes || notes->empty()) return empty_is_ignored;
  return markers.find(*notes) != markers.end();
}

IndicatorResult compute_compliance_fatigue(std::span<const AlertRecord> alerts,
                                           const TimeRange& range, const Scope& scope,
                                           const IgnoreMarkers& ignore) {
  require_range(range);
  std::uint64_t in_range = 0, closed = 0, ignored = 0;
  long long total_ack_ms = 0;
  for (const auto& a : alerts) {
    if (!range.contains(a.created_at) || !in_scope(a, scope)) continue;
    ++in_range;
    if (a.status != AlertStatus::Closed || !a.closed_at) continue;
    ++closed;
    total_ack_ms += (*a.closed_at - a.created_at).count();
    if (ignore.matches(a.resolution_notes)) ++ignored;
  }

  auto r = make_result(Indicator::ComplianceFatigue, scope, range);
  const double mtta =
      closed > 0 ? static_cast<double>(total_ack_ms) / static_cast<double>(closed) / 60'000.0 : 0.0;
  const double ir = closed > 0 ? static_cast<double>(ignored) / static_cast<double>(closed) : 0.0;
  r.values.emplace(metric::kMTTA, MetricValue::finite(mtta));
  r.values.emplace(metric::kIR, MetricValue::finite(ir));
  r.sample_sizes = {{"alerts", in_range}, {"closed", closed}, {"ignored", ignored}};
  return r;
}

std::vector<WindowBin> bin_alerts(std::span<const AlertRecord> alerts, const TimeRange& range,
                                  Millis window, const Scope& scope) {
  require_range(range);
  if (window.count() <= 0) throw UsageError("window duration must be positive");
  const long long w = window.count();
  const long long first = floor_div(range.start.time_since_epoch().count(), w);
  const long long last = floor_div(range.end.time_since_epoch().count() - 1, w);

  std::vector<WindowBin> bins(static_cast<std::size_t>(last - first + 1));
  for (long long idx = first; idx <= last; ++idx) {
    auto& bin = bins[static_cast<std::size_t>(idx - first)];
    const Timestamp lo{Millis{idx * w}};
    const Timestamp hi{Millis{(idx + 1) * w}};
    bin.window = {std::max(lo, range.start), std::min(hi, range.end)};
  }
  for (const auto& a : alerts) {
    if (!range.contains(a.created_at) || !in_scope(a, scope)) continue;
    const long long idx = floor_div(a.created_at.time_since_epoch().count(), w);
    auto& bin = bins[static_cast<std::size_t>(idx - first)];
    ++bin.total_volume;
    const bool missed = a.status == AlertStatus::Missed;
    if (missed) ++bin.missed_count;
    if (a.severity == Severity::Critical) {
      ++bin.total_critical;
      if (missed) ++bin.missed_critical;
    }
  }
  return bins;
}

IndicatorResult compute_alert_overload(std::span<const AlertRecord> alerts, const TimeRange& range,
                                       Millis window, const Scope& scope) {
  const auto bins = bin_alerts(alerts, range, window, scope);
  if (bins.size() < 2) {
    throw DomainError("alert overload needs at least two time windows in range, got " +
                      std::to_string(bins.size()));
  }
  std::vector<double> volumes, misses;
  volumes.reserve(bins.size());
  misses.reserve(bins.size());
  std::uint64_t total = 0, total_missed = 0;
  for (const auto& b : bins) {
    volumes.push_back(static_cast<double>(b.total_volume));
    misses.push_back(static_cast<double>(b.missed_count));
    total += b.total_volume;
    total_missed += b.missed_count;
  }
  const double threshold = stats::percentile(volumes, 90.0);

  std::uint64_t critical_in_peak = 0, missed_in_peak = 0, peak_bins = 0;
  for (const auto& b : bins) {
    if (static_cast<double>(b.total_volume) > threshold) {
      ++peak_bins;
      critical_in_peak += b.total_critical;
      missed_in_peak += b.missed_critical;
    }
  }

  auto r = make_result(Indicator::AlertOverload, scope, range);
  const double pmr = critical_in_peak > 0 ? static_cast<double>(missed_in_peak) /
                                                static_cast<double>(critical_in_peak)
                                          : 0.0;
  r.values.emplace(metric::kPMR, MetricValue::finite(pmr));
  try {
    r.values.emplace(metric::kVMCC, MetricValue::finite(stats::pearson(volumes, misses)));
  } catch (const UndefinedCorrelation&) {
    r.values.emplace(metric::kVMCC, MetricValue::undefined());
  }
  r.sample_sizes = {{"alerts", total},
                    {"bins", bins.size()},
                    {"peak_bins", peak_bins},
                    {"critical_in_peak", critical_in_peak},
                    {"missed_critical_in_peak", missed_in_peak},
                    {"missed", total_missed}};
  return r;
}

IndicatorResult compute_risk_perception_gap(std::span<const VulnRecord> vulns,
                                            const TimeRange& range,
                                            const RiskGapOptions& options) {
  require_range(range);
  struct Group {
    std::uint64_t vulns = 0;
    std::uint64_t counted = 0;  // density numerator
    std::uint64_t remediated = 0;
    long long patch_ms = 0;
    std::unordered_set<std::string> assets;
  };
  Group prod, nonprod;
  for (const auto& v : vulns) {
    if (!range.contains(v.detected_at)) continue;
    Group& g = v.environment == Environment::Prod ? prod : nonprod;
    ++g.vulns;
    g.assets.insert(v.asset_id);
    const bool open_at_end = !v.remediated_at || *v.remediated_at >= range.end;
    if (!options.open_only || open_at_end) ++g.counted;
    if (v.remediated_at) {
      ++g.remediated;
      g.patch_ms += (*v.remediated_at - v.detected_at).count();
    }
  }

  std::uint64_t prod_assets = prod.assets.size();
  std::uint64_t nonprod_assets = nonprod.assets.size();
  if (options.inventory) {
    prod_assets = nonprod_assets = 0;
    for (const auto& [asset, env] : *options.inventory) {
      ++(env == Environment::Prod ? prod_assets : nonprod_assets);
    }
  }

  auto r = make_result(Indicator::RiskPerceptionGap, Scope::org(), range);
  if (prod.remediated > 0 && nonprod.remediated > 0) {
    const double mttp_prod = static_cast<double>(prod.patch_ms) / static_cast<double>(prod.remediated);
    const double mttp_nonprod =
        static_cast<double>(nonprod.patch_ms) / static_cast<double>(nonprod.remediated);
    r.values.emplace(metric::kPLG, MetricValue::finite((mttp_nonprod - mttp_prod) / 3'600'000.0));
  } else {
    r.values.emplace(metric::kPLG, MetricValue::undefined());
  }

  if (prod_assets == 0 || nonprod_assets == 0) {
    r.values.emplace(metric::kVDR, MetricValue::undefined());
  } else {
    const double density_prod =
        static_cast<double>(prod.counted) / static_cast<double>(prod_assets);
    const double density_nonprod =
        static_cast<double>(nonprod.counted) / static_cast<double>(nonprod_assets);
    r.values.emplace(metric::kVDR, density_prod > 0
                                       ? MetricValue::finite(density_nonprod / density_prod)
                                       : MetricValue::infinite());
  }
  r.sample_sizes = {{"prod_vulns", prod.vulns},
                    {"nonprod_vulns", nonprod.vulns},
                    {"prod_assets", prod_assets},
                    {"nonprod_assets", nonprod_assets},
                    {"prod_remediated", prod.remediated},
                    {"nonprod_remediated", nonprod.remediated}};
  return r;
}

TopicTaxonomy::TopicTaxonomy(std::map<std::string, std::vector<std::string>, std::less<>> entries)
    : entries_(std::move(entries)) {
  if (entries_.empty()) throw DomainError("topic taxonomy is empty");
  std::map<std::string, std::string> owner;
  for (auto& [key, triggers] : entries_) {
    if (key.empty()) throw DomainError("topic taxonomy has an empty key");
    if (triggers.empty()) throw DomainError("topic '" + key + "' has no trigger phrases");
    for (auto& t : triggers) {
      t = normalize_text(trim(t));
      if (t.empty()) throw DomainError("topic '" + key + "' has an empty trigger phrase");
      auto [it, inserted] = owner.emplace(t, key);
      if (!inserted && it->second != key) {
        throw DomainError("trigger '" + t + "' maps to both '" + it->second + "' and '" + key + "'");
      }
    }
  }
}

TopicTaxonomy TopicTaxonomy::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DomainError("taxonomy must be a JSON object");
  std::map<std::string, std::vector<std::string>, std::less<>> entries;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_array()) throw DomainError("taxonomy entry '" + key + "' must be an array");
    auto& list = entries[key];
    for (const auto& phrase : value) {
      if (!phrase.is_string()) throw DomainError("taxonomy entry '" + key + "' has a non-string");
      list.push_back(phrase.get<std::string>());
    }
  }
  return TopicTaxonomy(std::move(entries));
}

nlohmann::json TopicTaxonomy::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : entries_) j[k] = v;
  return j;
}

TopicTaxonomy TopicTaxonomy::builtin() {
  return TopicTaxonomy({
      {"cert_expiry", {"cert expired", "certificate expired", "expired certificate"}},
      {"credential_leak", {"leaked credentials", "password leak", "credential dump"}},
      {"data_exfiltration", {"exfiltration", "data exfil"}},
      {"firewall_change", {"firewall rule", "open port"}},
      {"lateral_movement", {"lateral movement", "pass the hash"}},
      {"malware", {"malware", "ransomware", "trojan"}},
      {"mfa_bypass", {"mfa bypass", "mfa fatigue", "push bombing"}},
      {"phishing", {"phishing", "phish"}},
      {"privilege_escalation", {"privilege escalation", "sudo abuse"}},
      {"shadow_it", {"shadow it", "unsanctioned app"}},
      {"unpatched_system", {"unpatched", "missing patch"}},
      {"vpn_misconfig", {"vpn misconfig", "split tunnel"}},
  });
}

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

bool contains_phrase(std::string_view text, std::string_view phrase) {
  if (phrase.empty()) return false;
  for (std::size_t pos = text.find(phrase); pos != std::string_view::npos;
       pos = text.find(phrase, pos + 1)) {
    const bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
    const std::size_t after = pos + phrase.size();
    const bool right_ok = after == text.size() || !is_word_char(text[after]);
    if (left_ok && right_ok) return true;
  }
  return false;
}

std::set<std::string> extract_topics(std::span<const CommItem> items, const TopicTaxonomy& taxonomy,
                                     std::span<const std::string> keywords) {
  std::vector<std::string> kws;
  kws.reserve(keywords.size());
  for (const auto& k : keywords) {
    auto n = normalize_text(trim(k));
    if (!n.empty()) kws.push_back(std::move(n));
  }

  std::set<std::string> topics;
  for (const auto& item : items) {
    const std::string text = normalize_text(item.text);
    if (!kws.empty() && std::none_of(kws.begin(), kws.end(), [&](const std::string& k) {
          return contains_phrase(text, k);
        })) {
      continue;
    }
    for (const auto& [key, triggers] : taxonomy.entries()) {
      if (topics.count(key)) continue;
      for (const auto& t : triggers) {
        if (contains_phrase(text, t)) {
          topics.insert(key);
          break;
        }
      }
    }
    if (topics.size() == taxonomy.entries().size()) break;
  }
  return topics;
}

IndicatorResult compute_uctr(std::span<const CommItem> comm, const TopicTaxonomy& taxonomy,
                             std::span<const std::string> keywords, const TimeRange& range) {
  require_range(range);
  std::vector<CommItem> official, priv;
  for (const auto& c : comm) {
    if (!range.contains(c.timestamp)) continue;
    (c.visibility == Visibility::Official ? official : priv).push_back(c);
  }
  const auto official_topics = extract_topics(official, taxonomy, keywords);
  const auto private_topics = extract_topics(priv, taxonomy, keywords);
  std::set<std::string> all = official_topics;
  all.insert(private_topics.begin(), private_topics.end());

  auto r = make_result(Indicator::AgainstGravity, Scope::org(), range);
  r.values.emplace(metric::kUCTR,
                   all.empty() ? MetricValue::undefined()
                               : MetricValue::finite(static_cast<double>(private_topics.size()) /
                                                     static_cast<double>(all.size())));
  r.sample_sizes = {{"official_items", official.size()},
                    {"private_items", priv.size()},
                    {"official_topics", official_topics.size()},
                    {"private_topics", private_topics.size()},
                    {"union_topics", all.size()}};
  return r;
}

bool Threshold::tripped_by(const MetricValue& v) const {
  if (v.is_infinite()) return op == Op::Greater || op == Op::GreaterEqual;
  if (!v.is_finite()) return false;
  switch (op) {
    case Op::Greater: return v.value() > value;
    case Op::GreaterEqual: return v.value() >= value;
    case Op::Less: return v.value() < value;
    case Op::LessEqual: return v.value() <= value;
  }
  return false;
}

std::string Threshold::to_string() const {
  const char* sym = op == Op::Greater        ? ">"
                    : op == Op::GreaterEqual ? ">="
                    : op == Op::Less         ? "<"
                                             : "<=";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s %g", sym, value);
  return buf;
}

std::optional<Threshold> Threshold::parse(std::string_view text) {
  const std::string s = trim(text);
  Threshold t;
  std::size_t skip = 0;
  if (s.rfind(">=", 0) == 0) {
    t.op = Op::GreaterEqual;
    skip = 2;
  } else if (s.rfind("<=", 0) == 0) {
    t.op = Op::LessEqual;
    skip = 2;
  } else if (s.rfind(">", 0) == 0) {
    t.op = Op::Greater;
    skip = 1;
  } else if (s.rfind("<", 0) == 0) {
    t.op = Op::Less;
    skip = 1;
  } else {
    return std::nullopt;
  }
  const std::string num = trim(std::string_view(s).substr(skip));
  if (num.empty()) return std::nullopt;
  char* end = nullptr;
  t.value = std::strtod(num.c_str(), &end);
  if (end != num.c_str() + num.size() || !std::isfinite(t.value)) return std::nullopt;
  return t;
}

ClassifierConfig ClassifierConfig::defaults() {
  ClassifierConfig c;
  c.thresholds.emplace(metric::kUCTR, Threshold{Threshold::Op::Greater, 0.5});
  c.thresholds.emplace(metric::kVMCC, Threshold{Threshold::Op::Greater, 0.0});
  c.thresholds.emplace(metric::kPLG, Threshold{Threshold::Op::Greater, 0.0});
  c.thresholds.emplace(metric::kVDR, Threshold{Threshold::Op::Greater, 1.0});
  c.thresholds.emplace(metric::kIR, Threshold{Threshold::Op::Greater, 0.3});
  c.thresholds.emplace(metric::kPMR, Threshold{Threshold::Op::Greater, 0.2});
  return c;
}

ClassifierConfig ClassifierConfig::parse(std::string_view text) {
  ClassifierConfig c = defaults();
  bool markers_replaced = false;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.rfind("threshold.", 0) == 0) {
      const std::string name = key.substr(10);
      if (!indicator_of_metric(name)) {
        throw ConfigError("config line " + std::to_string(line_no) + ": unknown metric '" + name +
                          "'");
      }
      auto t = Threshold::parse(value);
      if (!t) {
        throw ConfigError("config line " + std::to_string(line_no) + ": bad comparator '" +
                          value + "'");
      }
      c.thresholds.insert_or_assign(name, *t);
    } else if (key == "ignore_marker") {
      if (!markers_replaced) {
        c.ignore.markers.clear();
        markers_replaced = true;
      }
      c.ignore.markers.insert(codec::normalize_notes(value));
    } else if (key == "ignore_empty") {
      if (value != "true" && value != "false") {
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": ignore_empty must be true or false");
      }
      c.ignore.empty_is_ignored = value == "true";
    } else {
      throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  return c;
}

std::vector<RiskFlag> classify_risk(std::span<const IndicatorResult> results,
                                    const ClassifierConfig& config) {
  for (const auto& [name, t] : config.thresholds) {
    if (!indicator_of_metric(name)) throw ConfigError("threshold for unknown metric '" + name + "'");
  }
  std::vector<RiskFlag> flags;
  flags.reserve(results.size());
  for (const auto& r : results) {
    RiskFlag f{r.indicator, r.scope, false, {}, {}};
    std::vector<std::string> notes;
    for (const auto& [name, value] : r.values) {
      auto it = config.thresholds.find(name);
      if (it == config.thresholds.end()) {
        notes.push_back(name + " has no configured threshold");
        continue;
      }
      const auto& t = it->second;
      if (value.is_undefined() || value.is_suppressed()) {
        notes.push_back(name + " is " + std::string(to_string(value.kind())) +
                        "; not evaluated against " + t.to_string());
        continue;
      }
      if (t.tripped_by(value)) {
        f.flagged = true;
        f.triggered_metrics.push_back(name);
        notes.push_back(name + "=" + value.to_string() + " crosses threshold " + t.to_string());
      } else {
        notes.push_back(name + "=" + value.to_string() + " within threshold " + t.to_string());
      }
    }
    for (const auto& n : notes) {
      if (!f.rationale.empty()) f.rationale += "; ";
      f.rationale += n;
    }
    flags.push_back(std::move(f));
  }
  return flags;
}

}  // namespace cpf::indicators
