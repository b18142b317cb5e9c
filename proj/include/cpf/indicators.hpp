#pragma once

// The four indicator computations (compliance fatigue, alert overload,
// risk perception gap, against-gravity communication), their supporting
// topic extraction, and threshold-based risk classification.

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpf/domain.hpp"

namespace cpf::indicators {

/// Resolution notes that count as "ignored". Notes are compared after the
/// ingestion normalization (trim + lowercase).
struct IgnoreMarkers {
  std::set<std::string, std::less<>> markers{"false positive"};
  /// Whether absent or empty notes count as ignored.
  bool empty_is_ignored = true;

  bool matches(const std::optional<std::string>& notes) const;
};

/// MTTA (minutes) and IR over closed alerts created in `range`, optionally
/// restricted to a team or analyst. Both are 0 when their denominator is 0.
IndicatorResult compute_compliance_fatigue(std::span<const AlertRecord> alerts,
                                           const TimeRange& range,
                                           const Scope& scope = Scope::org(),
                                           const IgnoreMarkers& ignore = {});

struct WindowBin {
  TimeRange window;
  std::uint64_t total_volume = 0;
  std::uint64_t total_critical = 0;
  std::uint64_t missed_critical = 0;
  /// Missed alerts of any severity.
  std::uint64_t missed_count = 0;

  friend bool operator==(const WindowBin&, const WindowBin&) = default;
};

/// Bins in-scope alerts by created_at into windows aligned to epoch multiples
/// of `window`. Every aligned window overlapping `range` is returned, empty or
/// not; the first and last may be clipped by the range.
std::vector<WindowBin> bin_alerts(std::span<const AlertRecord> alerts, const TimeRange& range,
                                  Millis window, const Scope& scope = Scope::org());

/// PMR over bins whose volume exceeds the 90th percentile of bin volumes, and
/// VMCC = pearson(volume, missed_count) across bins (undefined marker when a
/// series is constant). Throws DomainError when the range yields < 2 bins.
IndicatorResult compute_alert_overload(std::span<const AlertRecord> alerts, const TimeRange& range,
                                       Millis window, const Scope& scope = Scope::org());

using AssetInventory = std::map<std::string, Environment, std::less<>>;

struct RiskGapOptions {
  /// Count only vulns still open at range end in the density numerator.
  bool open_only = false;
  /// When given, per-environment asset counts come from the inventory instead
  /// of the distinct assets among the filtered vulns.
  const AssetInventory* inventory = nullptr;
};

/// PLG (hours) = MTTP(dev+staging) - MTTP(prod), and VDR = density ratio
/// non-prod / prod, over vulns detected in `range`. VDR carries the infinite
/// marker when prod density is 0; a group with no assets makes its density
/// and VDR undefined; a group with no remediated vulns makes PLG undefined.
IndicatorResult compute_risk_perception_gap(std::span<const VulnRecord> vulns,
                                            const TimeRange& range,
                                            const RiskGapOptions& options = {});

/// Canonical topic keys with their lowercase trigger phrases.
class TopicTaxonomy {
 public:
  /// Throws DomainError when empty, when a key has no triggers, or when a
  /// trigger phrase is empty or listed under more than one key.
  explicit TopicTaxonomy(std::map<std::string, std::vector<std::string>, std::less<>> entries);

  /// {"topic_key": ["phrase", ...], ...}
  static TopicTaxonomy from_json(const nlohmann::json& j);
  static TopicTaxonomy builtin();

  const std::map<std::string, std::vector<std::string>, std::less<>>& entries() const {
    return entries_;
  }
  nlohmann::json to_json() const;

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> entries_;
};

/// Lowercases and collapses whitespace runs to single spaces.
std::string normalize_text(std::string_view text);

/// True when `phrase` occurs in `normalized_text` with non-alphanumeric
/// characters (or the text edge) on both sides.
bool contains_phrase(std::string_view normalized_text, std::string_view phrase);

/// Union of topic keys over items whose text contains one of the supplied
/// keywords (token-bounded) and a trigger phrase of that topic. An empty
/// keyword list applies no keyword filter.
std::set<std::string> extract_topics(std::span<const CommItem> items, const TopicTaxonomy& taxonomy,
                                     std::span<const std::string> keywords);

/// |private topics| / |private topics U official topics| over items in range;
/// undefined marker when the union is empty.
IndicatorResult compute_uctr(std::span<const CommItem> comm, const TopicTaxonomy& taxonomy,
                             std::span<const std::string> keywords, const TimeRange& range);

struct Threshold {
  enum class Op { Greater, GreaterEqual, Less, LessEqual };
  Op op = Op::Greater;
  double value = 0.0;

  /// Markers other than infinite never trip a threshold.
  bool tripped_by(const MetricValue& v) const;
  std::string to_string() const;
  static std::optional<Threshold> parse(std::string_view text);
};

struct ClassifierConfig {
  std::map<std::string, Threshold, std::less<>> thresholds;
  IgnoreMarkers ignore;

  /// UCTR > 0.5, VMCC > 0, PLG > 0, VDR > 1, plus the tunable IR > 0.3 and PMR > 0.2.
  static ClassifierConfig defaults();

  /// Key-value text: "threshold.<METRIC> = <op> <value>", "ignore_marker = <text>"
  /// (repeatable; the first occurrence replaces the default set),
  /// "ignore_empty = true|false". '#' starts a comment. Throws ConfigError.
  static ClassifierConfig parse(std::string_view text);
};

struct RiskFlag {
  Indicator indicator;
  Scope scope;
  bool flagged = false;
  std::vector<std::string> triggered_metrics;
  std::string rationale;
};

/// One flag per input result. Undefined and suppressed metrics are never
/// flagged; the rationale says why.
std::vector<RiskFlag> classify_risk(std::span<const IndicatorResult> results,
                                    const ClassifierConfig& config);

}  // namespace cpf::indicators
