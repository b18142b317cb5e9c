#include "cpf/domain.hpp"

#include <cmath>
#include <cstdio>
#include <utility>

namespace cpf {
namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::pair<std::string_view, Enum>, N>& table,
                           std::string_view s) {
  for (const auto& [name, value] : table) {
    if (name == s) return value;
  }
  return std::nullopt;
}

template <typename Enum, std::size_t N>
std::string_view name_of(const std::array<std::pair<std::string_view, Enum>, N>& table, Enum v) {
  for (const auto& [name, value] : table) {
    if (value == v) return name;
  }
  return "?";
}

constexpr std::array<std::pair<std::string_view, AlertStatus>, 4> kStatus{{
    {"new", AlertStatus::New},
    {"in_progress", AlertStatus::InProgress},
    {"closed", AlertStatus::Closed},
    {"missed", AlertStatus::Missed},
}};
constexpr std::array<std::pair<std::string_view, Severity>, 4> kSeverity{{
    {"low", Severity::Low},
    {"medium", Severity::Medium},
    {"high", Severity::High},
    {"critical", Severity::Critical},
}};
constexpr std::array<std::pair<std::string_view, Environment>, 3> kEnvironment{{
    {"prod", Environment::Prod},
    {"dev", Environment::Dev},
    {"staging", Environment::Staging},
}};
constexpr std::array<std::pair<std::string_view, Visibility>, 2> kVisibility{{
    {"official", Visibility::Official},
    {"private", Visibility::Private},
}};
constexpr std::array<std::pair<std::string_view, CommSource>, 2> kSource{{
    {"ticketing", CommSource::Ticketing},
    {"chat", CommSource::Chat},
}};
constexpr std::array<std::pair<std::string_view, RecordKind>, 3> kKind{{
    {"alerts", RecordKind::Alerts},
    {"vulns", RecordKind::Vulns},
    {"comm", RecordKind::Comm},
}};
constexpr std::array<std::pair<std::string_view, Indicator>, 4> kIndicator{{
    {"compliance_fatigue", Indicator::ComplianceFatigue},
    {"alert_overload", Indicator::AlertOverload},
    {"risk_perception_gap", Indicator::RiskPerceptionGap},
    {"against_gravity", Indicator::AgainstGravity},
}};
constexpr std::array<std::pair<std::string_view, Suppression>, 3> kSuppression{{
    {"none", Suppression::None},
    {"suppressed", Suppression::Suppressed},
    {"merge_into_parent", Suppression::MergeIntoParent},
}};
constexpr std::array<std::pair<std::string_view, PeriodLabel>, 2> kLabel{{
    {"case", PeriodLabel::Case},
    {"control", PeriodLabel::Control},
}};

}  // namespace

std::string_view to_string(AlertStatus v) { return name_of(kStatus, v); }
std::string_view to_string(Severity v) { return name_of(kSeverity, v); }
std::string_view to_string(Environment v) { return name_of(kEnvironment, v); }
std::string_view to_string(Visibility v) { return name_of(kVisibility, v); }
std::string_view to_string(CommSource v) { return name_of(kSource, v); }
std::string_view to_string(RecordKind v) { return name_of(kKind, v); }
std::string_view to_string(Indicator v) { return name_of(kIndicator, v); }
std::string_view to_string(Suppression v) { return name_of(kSuppression, v); }
std::string_view to_string(PeriodLabel v) { return name_of(kLabel, v); }

std::optional<AlertStatus> parse_alert_status(std::string_view s) { return lookup(kStatus, s); }
std::optional<Severity> parse_severity(std::string_view s) { return lookup(kSeverity, s); }
std::optional<Environment> parse_environment(std::string_view s) { return lookup(kEnvironment, s); }
std::optional<Visibility> parse_visibility(std::string_view s) { return lookup(kVisibility, s); }
std::optional<CommSource> parse_comm_source(std::string_view s) { return lookup(kSource, s); }
std::optional<RecordKind> parse_record_kind(std::string_view s) { return lookup(kKind, s); }
std::optional<Indicator> parse_indicator(std::string_view s) { return lookup(kIndicator, s); }
std::optional<Suppression> parse_suppression(std::string_view s) { return lookup(kSuppression, s); }
std::optional<PeriodLabel> parse_period_label(std::string_view s) { return lookup(kLabel, s); }

std::vector<Violation> validate_record(const AlertRecord& r) {
  std::vector<Violation> out;
  if (r.id.empty()) out.push_back({"id", "must be nonempty"});
  if (r.closed_at && *r.closed_at < r.created_at) {
    out.push_back({"closed_at", "closed_at precedes created_at"});
  }
  if (r.status == AlertStatus::Closed && !r.closed_at) {
    out.push_back({"closed_at", "status closed requires closed_at"});
  }
  if (r.status == AlertStatus::Missed && r.closed_at) {
    out.push_back({"status", "missed is terminal and cannot carry closed_at"});
  }
  if (r.acknowledged_at && *r.acknowledged_at < r.created_at) {
    out.push_back({"acknowledged_at", "acknowledged_at precedes created_at"});
  }
  return out;
}

std::vector<Violation> validate_record(const VulnRecord& r) {
  std::vector<Violation> out;
  if (r.id.empty()) out.push_back({"id", "must be nonempty"});
  if (r.asset_id.empty()) out.push_back({"asset_id", "must be nonempty"});
  if (r.remediated_at && *r.remediated_at < r.detected_at) {
    out.push_back({"remediated_at", "remediated_at precedes detected_at"});
  }
  return out;
}

std::vector<Violation> validate_record(const CommItem& r) {
  std::vector<Violation> out;
  if (r.id.empty()) out.push_back({"id", "must be nonempty"});
  return out;
}

std::vector<Violation> validate_record(const TimeRange& r) {
  std::vector<Violation> out;
  if (!(r.start < r.end)) out.push_back({"range", "start must precede end"});
  return out;
}

std::string_view to_string(MetricValue::Kind k) {
  switch (k) {
    case MetricValue::Kind::Finite: return "finite";
    case MetricValue::Kind::Undefined: return "undefined";
    case MetricValue::Kind::Infinite: return "infinite";
    case MetricValue::Kind::Suppressed: return "suppressed";
  }
  return "?";
}

std::string MetricValue::to_string() const {
  if (kind_ != Kind::Finite) return std::string(cpf::to_string(kind_));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", value_);
  return buf;
}

std::vector<std::string_view> metrics_of(Indicator ind) {
  switch (ind) {
    case Indicator::ComplianceFatigue: return {metric::kMTTA, metric::kIR};
    case Indicator::AlertOverload: return {metric::kPMR, metric::kVMCC};
    case Indicator::RiskPerceptionGap: return {metric::kPLG, metric::kVDR};
    case Indicator::AgainstGravity: return {metric::kUCTR};
  }
  return {};
}

std::optional<Indicator> indicator_of_metric(std::string_view m) {
  for (Indicator ind : kAllIndicators) {
    for (auto name : metrics_of(ind)) {
      if (name == m) return ind;
    }
  }
  return std::nullopt;
}

std::string Scope::to_string() const {
  switch (kind) {
    case Kind::Org: return "org";
    case Kind::Team: return "team:" + id;
    case Kind::Analyst: return "analyst:" + id;
  }
  return "?";
}

std::optional<Scope> Scope::parse(std::string_view s) {
  if (s == "org") return Scope::org();
  const auto colon = s.find(':');
  if (colon == std::string_view::npos || colon + 1 == s.size()) return std::nullopt;
  const auto head = s.substr(0, colon);
  std::string id(s.substr(colon + 1));
  if (head == "team") return Scope::team(std::move(id));
  if (head == "analyst") return Scope::analyst(std::move(id));
  return std::nullopt;
}

}  // namespace cpf
