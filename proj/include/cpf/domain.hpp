#pragma once

// Telemetry and result types shared across the engine. Pure data, no I/O.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cpf/time.hpp"

namespace cpf {

enum class AlertStatus { New, InProgress, Closed, Missed };
enum class Severity { Low, Medium, High, Critical };
enum class Environment { Prod, Dev, Staging };
enum class Visibility { Official, Private };
enum class CommSource { Ticketing, Chat };
enum class RecordKind { Alerts, Vulns, Comm };
enum class Indicator { ComplianceFatigue, AlertOverload, RiskPerceptionGap, AgainstGravity };

std::string_view to_string(AlertStatus v);
std::string_view to_string(Severity v);
std::string_view to_string(Environment v);
std::string_view to_string(Visibility v);
std::string_view to_string(CommSource v);
std::string_view to_string(RecordKind v);
std::string_view to_string(Indicator v);

std::optional<AlertStatus> parse_alert_status(std::string_view s);
std::optional<Severity> parse_severity(std::string_view s);
std::optional<Environment> parse_environment(std::string_view s);
std::optional<Visibility> parse_visibility(std::string_view s);
std::optional<CommSource> parse_comm_source(std::string_view s);
std::optional<RecordKind> parse_record_kind(std::string_view s);
std::optional<Indicator> parse_indicator(std::string_view s);

inline constexpr std::array<Indicator, 4> kAllIndicators = {
    Indicator::ComplianceFatigue, Indicator::AlertOverload, Indicator::RiskPerceptionGap,
    Indicator::AgainstGravity};

/// Half-open interval [start, end).
struct TimeRange {
  Timestamp start;
  Timestamp end;

  bool contains(Timestamp t) const { return start <= t && t < end; }
  Millis length() const { return end - start; }
  friend bool operator==(const TimeRange&, const TimeRange&) = default;
};

struct AlertRecord {
  std::string id;
  Timestamp created_at;
  std::optional<Timestamp> closed_at;
  AlertStatus status = AlertStatus::New;
  Severity severity = Severity::Low;
  std::optional<std::string> assigned_to;
  std::optional<std::string> team;
  /// Trimmed and lowercased at ingestion.
  std::optional<std::string> resolution_notes;
  /// Accepted from exports but not used by MTTA, which follows closed_at - created_at.
  std::optional<Timestamp> acknowledged_at;

  friend bool operator==(const AlertRecord&, const AlertRecord&) = default;
};

struct VulnRecord {
  std::string id;
  std::string asset_id;
  Severity severity = Severity::Low;
  Environment environment = Environment::Prod;
  Timestamp detected_at;
  std::optional<Timestamp> remediated_at;

  friend bool operator==(const VulnRecord&, const VulnRecord&) = default;
};

struct CommItem {
  std::string id;
  Timestamp timestamp;
  Visibility visibility = Visibility::Official;
  CommSource source = CommSource::Ticketing;
  std::string text;

  friend bool operator==(const CommItem&, const CommItem&) = default;
};

struct Violation {
  std::string field;
  std::string rule;

  std::string to_string() const { return field + ": " + rule; }
  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Returns one entry per broken invariant; empty means the record is valid.
std::vector<Violation> validate_record(const AlertRecord& r);
std::vector<Violation> validate_record(const VulnRecord& r);
std::vector<Violation> validate_record(const CommItem& r);
std::vector<Violation> validate_record(const TimeRange& r);

/// A metric value: a finite real, or one of the first-class markers.
/// Markers are never encoded as sentinel reals.
class MetricValue {
 public:
  enum class Kind { Finite, Undefined, Infinite, Suppressed };

  MetricValue() = default;
  static MetricValue finite(double v) { return MetricValue(Kind::Finite, v); }
  static MetricValue undefined() { return MetricValue(Kind::Undefined, 0.0); }
  static MetricValue infinite() { return MetricValue(Kind::Infinite, 0.0); }
  static MetricValue suppressed() { return MetricValue(Kind::Suppressed, 0.0); }

  Kind kind() const { return kind_; }
  bool is_finite() const { return kind_ == Kind::Finite; }
  bool is_undefined() const { return kind_ == Kind::Undefined; }
  bool is_infinite() const { return kind_ == Kind::Infinite; }
  bool is_suppressed() const { return kind_ == Kind::Suppressed; }
  /// Only meaningful when is_finite().
  double value() const { return value_; }

  std::string to_string() const;
  friend bool operator==(const MetricValue&, const MetricValue&) = default;

 private:
  MetricValue(Kind k, double v) : kind_(k), value_(v) {}
  Kind kind_ = Kind::Undefined;
  double value_ = 0.0;
};

std::string_view to_string(MetricValue::Kind k);

namespace metric {
inline constexpr std::string_view kMTTA = "MTTA";
inline constexpr std::string_view kIR = "IR";
inline constexpr std::string_view kPMR = "PMR";
inline constexpr std::string_view kVMCC = "VMCC";
inline constexpr std::string_view kPLG = "PLG";
inline constexpr std::string_view kVDR = "VDR";
inline constexpr std::string_view kUCTR = "UCTR";
}  // namespace metric

/// Which metrics an indicator produces.
std::vector<std::string_view> metrics_of(Indicator ind);
std::optional<Indicator> indicator_of_metric(std::string_view metric);

struct Scope {
  enum class Kind { Org, Team, Analyst };
  Kind kind = Kind::Org;
  std::string id;

  static Scope org() { return {Kind::Org, {}}; }
  static Scope team(std::string id) { return {Kind::Team, std::move(id)}; }
  static Scope analyst(std::string id) { return {Kind::Analyst, std::move(id)}; }

  /// "org", "team:<id>" or "analyst:<id>".
  std::string to_string() const;
  static std::optional<Scope> parse(std::string_view s);
  friend bool operator==(const Scope&, const Scope&) = default;
};

enum class Suppression { None, Suppressed, MergeIntoParent };
std::string_view to_string(Suppression s);
std::optional<Suppression> parse_suppression(std::string_view s);

struct IndicatorResult {
  Indicator indicator = Indicator::ComplianceFatigue;
  Scope scope;
  TimeRange range;
  std::map<std::string, MetricValue, std::less<>> values;
  std::map<std::string, std::uint64_t, std::less<>> sample_sizes;
  /// Distinct individuals behind the group; required by k-anonymity enforcement.
  std::optional<std::uint64_t> member_count;
  Suppression suppression = Suppression::None;

  friend bool operator==(const IndicatorResult&, const IndicatorResult&) = default;
};

enum class PeriodLabel { Case, Control };
std::string_view to_string(PeriodLabel l);
std::optional<PeriodLabel> parse_period_label(std::string_view s);

/// Fixed feature order used by the retrospective model.
inline constexpr std::array<std::string_view, 7> kFeatureNames = {
    metric::kMTTA, metric::kIR, metric::kPMR, metric::kVMCC,
    metric::kPLG,  metric::kVDR, metric::kUCTR};

struct FeatureRow {
  TimeRange period;
  std::string scope;
  PeriodLabel label = PeriodLabel::Control;
  /// Ordered as kFeatureNames; undefined/infinite entries keep their markers here.
  std::array<MetricValue, kFeatureNames.size()> features;

  friend bool operator==(const FeatureRow&, const FeatureRow&) = default;
};

struct ValidationReport {
  /// Term names, "intercept" first.
  std::vector<std::string> terms;
  std::vector<double> coefficients;
  std::vector<double> std_errors;
  std::vector<double> p_values;
  double auc = 0.0;
  std::uint64_t n_cases = 0;
  std::uint64_t n_controls = 0;
  bool converged = false;
};

}  // namespace cpf
