#pragma once

// Retrospective case-control harness: per-period feature extraction, the
// logistic model over the seven features, and its success criteria.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cpf/domain.hpp"
#include "cpf/indicators.hpp"
#include "cpf/ingestion.hpp"

namespace cpf::validation {

struct PeriodSpec {
  TimeRange range;
  PeriodLabel label = PeriodLabel::Control;
  /// Org or team. Team scope restricts the alert-based features to that team;
  /// vulnerability and communication features are always organization-wide.
  Scope scope;

  friend bool operator==(const PeriodSpec&, const PeriodSpec&) = default;
};

/// One JSON object per line: {"start", "end", "label": "case"|"control",
/// "scope": "org"|"team:<id>"}. Blank lines are skipped. Throws DataError
/// naming the line for malformed entries.
std::vector<PeriodSpec> parse_periods(std::string_view jsonl);

/// Throws DomainError when two periods of the same scope overlap.
void check_disjoint(std::span<const PeriodSpec> periods);

struct FeatureParams {
  Millis window = std::chrono::hours(1);
  indicators::TopicTaxonomy taxonomy = indicators::TopicTaxonomy::builtin();
  std::vector<std::string> keywords;
  indicators::IgnoreMarkers ignore;
  indicators::RiskGapOptions risk;
};

struct DroppedPeriod {
  TimeRange period;
  std::string scope;
  std::string reason;
};

struct FeatureTable {
  std::vector<FeatureRow> rows;
  std::vector<DroppedPeriod> dropped;
};

/// Runs all four indicators for every period and assembles the fixed-order
/// feature vector. Markers are kept; imputation happens in prepare_design.
/// Periods whose features are all undefined are dropped with a reason.
FeatureTable build_feature_table(const DatasetBundle& bundle, std::span<const PeriodSpec> periods,
                                 const FeatureParams& params = {});

/// The feature vector of one period, exactly as build_feature_table computes it.
FeatureRow feature_row(const DatasetBundle& bundle, const PeriodSpec& period,
                       const FeatureParams& params = {});

struct ExcludedFeature {
  std::string feature;
  std::string reason;
};

/// Standardized design (without the intercept column) ready for fitting.
struct Design {
  std::vector<std::string> columns;
  Eigen::MatrixXd x;
  std::vector<int> labels;  // 1 = case
  std::vector<ExcludedFeature> excluded;
  /// Per feature: rows imputed from "undefined" and from "infinite".
  std::map<std::string, std::pair<std::size_t, std::size_t>> imputed_counts;
  bool any_imputed = false;
};

/// Imputation: undefined (and suppressed) entries take the column mean of the
/// finite rows; infinite entries take twice the column max of the finite rows.
/// When anything was imputed an "imputed" 0/1 column is appended. Columns are
/// then z-scored with the sample standard deviation; columns with no finite
/// rows or zero spread are excluded and listed.
Design prepare_design(std::span<const FeatureRow> rows);

struct RetroReport {
  ValidationReport model;
  bool auc_met = false;
  std::size_t significant_count = 0;
  bool significance_met = false;
  std::vector<std::string> significant_features;
  std::vector<ExcludedFeature> excluded;
  std::map<std::string, std::pair<std::size_t, std::size_t>> imputed_counts;
};

inline constexpr double kAucThreshold = 0.8;
inline constexpr double kSignificanceLevel = 0.05;
inline constexpr std::size_t kRequiredSignificant = 3;

/// Re-derives the criteria from a model: AUC strictly above 0.8 and at least
/// three of the seven features with p < 0.05, both false when not converged.
void evaluate_criteria(RetroReport& report);

/// Fits the model on the standardized features and evaluates the criteria.
/// Throws DomainError for fewer than 8 rows or a single label. A column that
/// makes the design rank deficient is excluded and the fit repeated.
RetroReport run_retrospective(std::span<const FeatureRow> rows);

nlohmann::json to_json(const RetroReport& report);

}  // namespace cpf::validation
