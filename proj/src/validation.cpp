#include "cpf/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cpf/codec.hpp"
#include "cpf/errors.hpp"
#include "cpf/stats.hpp"

namespace cpf::validation {
namespace {

using nlohmann::json;

Timestamp timestamp_field(const json& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw DataError("periods line " + std::to_string(line) + ": missing string field '" + key + "'");
  }
  auto t = parse_rfc3339(it->get_ref<const std::string&>());
  if (!t) {
    throw DataError("periods line " + std::to_string(line) + ": '" + key +
                    "' is not an RFC3339 timestamp");
  }
  return *t;
}

std::size_t feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kFeatureNames.size(); ++i) {
    if (kFeatureNames[i] == name) return i;
  }
  return kFeatureNames.size();
}

MetricValue value_of(const IndicatorResult& r, std::string_view metric) {
  const auto it = r.values.find(metric);
  return it == r.values.end() ? MetricValue::undefined() : it->second;
}

}  // namespace

std::vector<PeriodSpec> parse_periods(std::string_view jsonl) {
  std::vector<PeriodSpec> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw DataError("periods line " + std::to_string(line_no) + ": malformed JSON");
    }
    PeriodSpec p;
    p.range = {timestamp_field(j, "start", line_no), timestamp_field(j, "end", line_no)};
    if (!(p.range.start < p.range.end)) {
      throw DataError("periods line " + std::to_string(line_no) + ": end must follow start");
    }
    const auto label = j.find("label");
    std::optional<PeriodLabel> parsed_label;
    if (label != j.end() && label->is_string()) {
      parsed_label = parse_period_label(label->get_ref<const std::string&>());
    }
    if (!parsed_label) {
      throw DataError("periods line " + std::to_string(line_no) +
                      ": label must be \"case\" or \"control\"");
    }
    p.label = *parsed_label;
    const auto scope = j.find("scope");
    if (scope == j.end()) {
      p.scope = Scope::org();
    } else {
      std::optional<Scope> s;
      if (scope->is_string()) s = Scope::parse(scope->get_ref<const std::string&>());
      if (!s || s->kind == Scope::Kind::Analyst) {
        throw DataError("periods line " + std::to_string(line_no) +
                        ": scope must be \"org\" or \"team:<id>\"");
      }
      p.scope = *s;
    }
    out.push_back(std::move(p));
  }
  return out;
}

void check_disjoint(std::span<const PeriodSpec> periods) {
  std::map<std::string, std::vector<const PeriodSpec*>> by_scope;
  for (const auto& p : periods) by_scope[p.scope.to_string()].push_back(&p);
  for (auto& [scope, list] : by_scope) {
    std::sort(list.begin(), list.end(), [](const PeriodSpec* a, const PeriodSpec* b) {
      return a->range.start < b->range.start;
    });
    for (std::size_t i = 1; i < list.size(); ++i) {
      if (list[i]->range.start < list[i - 1]->range.end) {
        throw DomainError("periods overlap in scope " + scope + ": " +
                          format_rfc3339(list[i - 1]->range.start) + " and " +
                          format_rfc3339(list[i]->range.start));
      }
    }
  }
}

FeatureRow feature_row(const DatasetBundle& bundle, const PeriodSpec& period,
                       const FeatureParams& params) {
  const std::vector<IndicatorResult> results = {
      indicators::compute_compliance_fatigue(bundle.alerts, period.range, period.scope,
                                             params.ignore),
      indicators::compute_alert_overload(bundle.alerts, period.range, params.window, period.scope),
      indicators::compute_risk_perception_gap(bundle.vulns, period.range, params.risk),
      indicators::compute_uctr(bundle.comm, params.taxonomy, params.keywords, period.range),
  };
  FeatureRow row;
  row.period = period.range;
  row.scope = period.scope.to_string();
  row.label = period.label;
  row.features.fill(MetricValue::undefined());
  for (const auto& r : results) {
    for (auto name : metrics_of(r.indicator)) {
      const auto i = feature_index(name);
      if (i < kFeatureNames.size()) row.features[i] = value_of(r, name);
    }
  }
  return row;
}

FeatureTable build_feature_table(const DatasetBundle& bundle, std::span<const PeriodSpec> periods,
                                 const FeatureParams& params) {
  check_disjoint(periods);
  FeatureTable table;
  for (const auto& p : periods) {
    FeatureRow row = feature_row(bundle, p, params);
    const bool all_undefined = std::all_of(row.features.begin(), row.features.end(),
                                           [](const MetricValue& v) { return v.is_undefined(); });
    if (all_undefined) {
      table.dropped.push_back({p.range, row.scope, "every feature is undefined"});
      continue;
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

Design prepare_design(std::span<const FeatureRow> rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Design d;
  std::vector<Eigen::VectorXd> kept;
  std::vector<bool> row_imputed(rows.size(), false);

  for (std::size_t f = 0; f < kFeatureNames.size(); ++f) {
    const std::string name(kFeatureNames[f]);
    double sum = 0.0, max = -std::numeric_limits<double>::infinity();
    std::size_t finite = 0;
    for (const auto& r : rows) {
      if (r.features[f].is_finite()) {
        sum += r.features[f].value();
        max = std::max(max, r.features[f].value());
        ++finite;
      }
    }
    if (finite == 0) {
      d.excluded.push_back({name, "no finite values"});
      continue;
    }
    const double mean = sum / static_cast<double>(finite);
    const double inf_fill = max > 0 ? 2.0 * max : max + 1.0;
    Eigen::VectorXd col(n);
    std::size_t from_undefined = 0, from_infinite = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const MetricValue& v = rows[static_cast<std::size_t>(i)].features[f];
      if (v.is_finite()) {
        col(i) = v.value();
      } else if (v.is_infinite()) {
        col(i) = inf_fill;
        ++from_infinite;
        row_imputed[static_cast<std::size_t>(i)] = true;
      } else {
        col(i) = mean;
        ++from_undefined;
        row_imputed[static_cast<std::size_t>(i)] = true;
      }
    }
    if (from_undefined + from_infinite > 0) {
      d.imputed_counts[name] = {from_undefined, from_infinite};
      d.any_imputed = true;
    }
    d.columns.push_back(name);
    kept.push_back(std::move(col));
  }
  if (d.any_imputed) {
    Eigen::VectorXd flag(n);
    for (Eigen::Index i = 0; i < n; ++i) flag(i) = row_imputed[static_cast<std::size_t>(i)] ? 1 : 0;
    d.columns.push_back("imputed");
    kept.push_back(std::move(flag));
  }

  std::vector<std::string> columns;
  std::vector<Eigen::VectorXd> standardized;
  for (std::size_t c = 0; c < kept.size(); ++c) {
    const Eigen::VectorXd& col = kept[c];
    const double mean = n > 0 ? col.mean() : 0.0;
    const double var =
        n > 1 ? (col.array() - mean).square().sum() / static_cast<double>(n - 1) : 0.0;
    const double sd = std::sqrt(var);
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      d.excluded.push_back({d.columns[c], "constant across periods"});
      continue;
    }
    columns.push_back(d.columns[c]);
    standardized.push_back(((col.array() - mean) / sd).matrix());
  }
  d.columns = std::move(columns);
  d.x.resize(n, static_cast<Eigen::Index>(standardized.size()));
  for (std::size_t c = 0; c < standardized.size(); ++c) {
    d.x.col(static_cast<Eigen::Index>(c)) = standardized[c];
  }
  d.labels.reserve(rows.size());
  for (const auto& r : rows) d.labels.push_back(r.label == PeriodLabel::Case ? 1 : 0);
  return d;
}

void evaluate_criteria(RetroReport& report) {
  const auto& m = report.model;
  report.significant_features.clear();
  for (std::size_t i = 0; i < m.terms.size() && i < m.p_values.size(); ++i) {
    if (feature_index(m.terms[i]) == kFeatureNames.size()) continue;
    if (m.p_values[i] < kSignificanceLevel) report.significant_features.push_back(m.terms[i]);
  }
  report.significant_count = m.converged ? report.significant_features.size() : 0;
  if (!m.converged) report.significant_features.clear();
  report.auc_met = m.converged && m.auc > kAucThreshold;
  report.significance_met = report.significant_count >= kRequiredSignificant;
}

RetroReport run_retrospective(std::span<const FeatureRow> rows) {
  if (rows.size() < 8) {
    throw DomainError("retrospective fit needs at least 8 periods, got " +
                      std::to_string(rows.size()));
  }
  std::size_t cases = 0;
  for (const auto& r : rows) cases += r.label == PeriodLabel::Case ? 1 : 0;
  if (cases == 0 || cases == rows.size()) {
    throw DomainError("retrospective fit needs both case and control periods");
  }

  Design d = prepare_design(rows);
  RetroReport report;
  report.excluded = d.excluded;
  report.imputed_counts = d.imputed_counts;

  stats::LogisticModel model;
  while (true) {
    Eigen::MatrixXd design(d.x.rows(), d.x.cols() + 1);
    design.col(0).setOnes();
    design.rightCols(d.x.cols()) = d.x;
    try {
      model = stats::fit_logistic(design, d.labels);
      break;
    } catch (const FitError& e) {
      const int col = e.column() - 1;
      if (col < 0 || col >= d.x.cols()) throw;
      report.excluded.push_back({d.columns[static_cast<std::size_t>(col)],
                                 "linearly dependent on earlier features"});
      d.columns.erase(d.columns.begin() + col);
      Eigen::MatrixXd reduced(d.x.rows(), d.x.cols() - 1);
      reduced << d.x.leftCols(col), d.x.rightCols(d.x.cols() - col - 1);
      d.x = std::move(reduced);
    }
  }

  ValidationReport& v = report.model;
  v.terms.push_back("intercept");
  v.terms.insert(v.terms.end(), d.columns.begin(), d.columns.end());
  v.coefficients.assign(model.coefficients.data(),
                        model.coefficients.data() + model.coefficients.size());
  v.n_cases = cases;
  v.n_controls = rows.size() - cases;
  v.converged = model.converged;
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  v.std_errors.assign(v.terms.size(), nan);
  v.p_values.assign(v.terms.size(), nan);
  if (model.converged) {
    try {
      v.std_errors = stats::standard_errors(model);
      v.p_values = stats::wald_p_values(model);
    } catch (const InferenceError&) {
      v.converged = false;
      v.std_errors.assign(v.terms.size(), nan);
      v.p_values.assign(v.terms.size(), nan);
    }
  }
  Eigen::MatrixXd design(d.x.rows(), d.x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(d.x.cols()) = d.x;
  const Eigen::VectorXd p = stats::predict_probabilities(design, model.coefficients);
  v.auc = stats::auc_roc(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())),
                         d.labels);
  evaluate_criteria(report);
  return report;
}

json to_json(const RetroReport& report) {
  json excluded = json::array();
  for (const auto& e : report.excluded) excluded.push_back({{"feature", e.feature}, {"reason", e.reason}});
  json imputed = json::object();
  for (const auto& [name, counts] : report.imputed_counts) {
    imputed[name] = {{"undefined", counts.first}, {"infinite", counts.second}};
  }
  return {
      {"note", "AUC is computed in-sample on the fitted probabilities; no resampling"},
      {"model", codec::encode(report.model)},
      {"criteria",
       {{"auc_met", report.auc_met},
        {"auc_threshold", kAucThreshold},
        {"significant_count", report.significant_count},
        {"significance_level", kSignificanceLevel},
        {"significance_met", report.significance_met}}},
      {"significant_features", report.significant_features},
      {"excluded_features", excluded},
      {"imputed", imputed},
  };
}

}  // namespace cpf::validation
