#include "cpf/codec.hpp"

#include <algorithm>
#include <cctype>

#include "cpf/errors.hpp"

namespace cpf::codec {
namespace {

json opt_time(const std::optional<Timestamp>& t) {
  return t ? json(format_rfc3339(*t)) : json(nullptr);
}

json opt_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

// Small helper that reads fields out of one JSON object and accumulates
// violations instead of throwing.
class FieldReader {
 public:
  FieldReader(const json& obj, std::vector<Violation>& out) : obj_(obj), out_(out) {}

  std::optional<std::string> required_string(const char* key) {
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) {
      out_.push_back({key, "missing required field"});
      return std::nullopt;
    }
    if (!it->is_string()) {
      out_.push_back({key, "must be a string"});
      return std::nullopt;
    }
    return it->get<std::string>();
  }

  std::optional<std::string> optional_string(const char* key) {
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) {
      out_.push_back({key, "must be a string or null"});
      return std::nullopt;
    }
    return it->get<std::string>();
  }

  std::optional<Timestamp> required_time(const char* key) {
    auto s = required_string(key);
    if (!s) return std::nullopt;
    auto t = parse_rfc3339(*s);
    if (!t) out_.push_back({key, "invalid RFC3339 timestamp"});
    return t;
  }

  // Outer optional: whether parsing succeeded. Inner: whether the field was present.
  std::optional<std::optional<Timestamp>> optional_time(const char* key) {
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return std::optional<Timestamp>{};
    if (!it->is_string()) {
      out_.push_back({key, "must be an RFC3339 string or null"});
      return std::nullopt;
    }
    auto t = parse_rfc3339(it->get_ref<const std::string&>());
    if (!t) {
      out_.push_back({key, "invalid RFC3339 timestamp"});
      return std::nullopt;
    }
    return std::optional<Timestamp>{*t};
  }

  template <typename Enum, typename Parser>
  std::optional<Enum> required_enum(const char* key, Parser parse, const char* rule) {
    auto s = required_string(key);
    if (!s) return std::nullopt;
    auto v = parse(*s);
    if (!v) out_.push_back({key, rule});
    return v;
  }

 private:
  const json& obj_;
  std::vector<Violation>& out_;
};

bool require_object(const json& j, std::vector<Violation>& out) {
  if (!j.is_object()) {
    out.push_back({"line", "expected a JSON object"});
    return false;
  }
  return true;
}

}  // namespace

std::string normalize_notes(std::string_view s) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

json encode(const AlertRecord& r) {
  json j = {
      {"id", r.id},
      {"created_at", format_rfc3339(r.created_at)},
      {"closed_at", opt_time(r.closed_at)},
      {"status", to_string(r.status)},
      {"severity", to_string(r.severity)},
      {"assigned_to", opt_string(r.assigned_to)},
      {"team", opt_string(r.team)},
      {"resolution_notes", opt_string(r.resolution_notes)},
  };
  if (r.acknowledged_at) j["acknowledged_at"] = format_rfc3339(*r.acknowledged_at);
  return j;
}

json encode(const VulnRecord& r) {
  return {
      {"id", r.id},
      {"asset_id", r.asset_id},
      {"severity", to_string(r.severity)},
      {"environment", to_string(r.environment)},
      {"detected_at", format_rfc3339(r.detected_at)},
      {"remediated_at", opt_time(r.remediated_at)},
  };
}

json encode(const CommItem& r) {
  return {
      {"id", r.id},
      {"timestamp", format_rfc3339(r.timestamp)},
      {"visibility", to_string(r.visibility)},
      {"source", to_string(r.source)},
      {"text", r.text},
  };
}

Decoded<AlertRecord> decode_alert(const json& j) {
  Decoded<AlertRecord> out;
  if (!require_object(j, out.violations)) return out;
  FieldReader f(j, out.violations);
  auto id = f.required_string("id");
  auto created = f.required_time("created_at");
  auto closed = f.optional_time("closed_at");
  auto status = f.required_enum<AlertStatus>("status", parse_alert_status, "unknown status");
  auto severity = f.required_enum<Severity>("severity", parse_severity, "unknown severity");
  auto assigned = f.optional_string("assigned_to");
  auto team = f.optional_string("team");
  auto notes = f.optional_string("resolution_notes");
  auto acked = f.optional_time("acknowledged_at");
  if (!out.violations.empty()) return out;

  AlertRecord r;
  r.id = *id;
  r.created_at = *created;
  r.closed_at = *closed;
  r.status = *status;
  r.severity = *severity;
  r.assigned_to = assigned;
  r.team = team;
  if (notes) r.resolution_notes = normalize_notes(*notes);
  r.acknowledged_at = *acked;
  out.violations = validate_record(r);
  out.record = std::move(r);
  return out;
}

Decoded<VulnRecord> decode_vuln(const json& j) {
  Decoded<VulnRecord> out;
  if (!require_object(j, out.violations)) return out;
  FieldReader f(j, out.violations);
  auto id = f.required_string("id");
  auto asset = f.required_string("asset_id");
  auto severity = f.required_enum<Severity>("severity", parse_severity, "unknown severity");
  auto env = f.required_enum<Environment>("environment", parse_environment,
                                          "unknown environment tag");
  auto detected = f.required_time("detected_at");
  auto remediated = f.optional_time("remediated_at");
  if (!out.violations.empty()) return out;

  VulnRecord r;
  r.id = *id;
  r.asset_id = *asset;
  r.severity = *severity;
  r.environment = *env;
  r.detected_at = *detected;
  r.remediated_at = *remediated;
  out.violations = validate_record(r);
  out.record = std::move(r);
  return out;
}

Decoded<CommItem> decode_comm(const json& j) {
  Decoded<CommItem> out;
  if (!require_object(j, out.violations)) return out;
  FieldReader f(j, out.violations);
  auto id = f.required_string("id");
  auto ts = f.required_time("timestamp");
  auto vis = f.required_enum<Visibility>("visibility", parse_visibility, "unknown visibility");
  auto src = f.required_enum<CommSource>("source", parse_comm_source, "unknown source");
  auto text = f.required_string("text");
  if (!out.violations.empty()) return out;

  CommItem r;
  r.id = *id;
  r.timestamp = *ts;
  r.visibility = *vis;
  r.source = *src;
  r.text = *text;
  out.violations = validate_record(r);
  out.record = std::move(r);
  return out;
}

json encode(const MetricValue& v) {
  if (v.is_finite()) return v.value();
  return std::string(to_string(v.kind()));
}

std::optional<MetricValue> decode_metric(const json& j) {
  if (j.is_number()) return MetricValue::finite(j.get<double>());
  if (!j.is_string()) return std::nullopt;
  const auto& s = j.get_ref<const std::string&>();
  if (s == "undefined") return MetricValue::undefined();
  if (s == "infinite") return MetricValue::infinite();
  if (s == "suppressed") return MetricValue::suppressed();
  return std::nullopt;
}

json encode(const TimeRange& r) {
  return {{"start", format_rfc3339(r.start)}, {"end", format_rfc3339(r.end)}};
}

json encode(const IndicatorResult& r) {
  json values = json::object();
  for (const auto& [k, v] : r.values) values[k] = encode(v);
  json sizes = json::object();
  for (const auto& [k, v] : r.sample_sizes) sizes[k] = v;
  return {
      {"indicator", to_string(r.indicator)},
      {"scope", r.scope.to_string()},
      {"range", encode(r.range)},
      {"values", values},
      {"sample_sizes", sizes},
      {"member_count", r.member_count ? json(*r.member_count) : json(nullptr)},
      {"suppression", to_string(r.suppression)},
  };
}

IndicatorResult decode_indicator_result(const json& j) {
  try {
    IndicatorResult r;
    auto ind = parse_indicator(j.at("indicator").get<std::string>());
    auto scope = Scope::parse(j.at("scope").get<std::string>());
    auto start = parse_rfc3339(j.at("range").at("start").get<std::string>());
    auto end = parse_rfc3339(j.at("range").at("end").get<std::string>());
    auto supp = parse_suppression(j.value("suppression", std::string("none")));
    if (!ind || !scope || !start || !end || !supp) throw DataError("malformed indicator result");
    r.indicator = *ind;
    r.scope = *scope;
    r.range = {*start, *end};
    r.suppression = *supp;
    for (const auto& [k, v] : j.at("values").items()) {
      auto m = decode_metric(v);
      if (!m) throw DataError("malformed metric value for " + k);
      r.values.emplace(k, *m);
    }
    for (const auto& [k, v] : j.at("sample_sizes").items()) {
      r.sample_sizes.emplace(k, v.get<std::uint64_t>());
    }
    if (auto it = j.find("member_count"); it != j.end() && !it->is_null()) {
      r.member_count = it->get<std::uint64_t>();
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed indicator result: ") + e.what());
  }
}

json encode(const FeatureRow& row) {
  json features = json::object();
  for (std::size_t i = 0; i < kFeatureNames.size(); ++i) {
    features[std::string(kFeatureNames[i])] = encode(row.features[i]);
  }
  return {
      {"period", encode(row.period)},
      {"scope", row.scope},
      {"label", to_string(row.label)},
      {"features", features},
  };
}

json encode(const ValidationReport& r) {
  return {
      {"terms", r.terms},
      {"coefficients", r.coefficients},
      {"std_errors", r.std_errors},
      {"p_values", r.p_values},
      {"auc", r.auc},
      {"n_cases", r.n_cases},
      {"n_controls", r.n_controls},
      {"converged", r.converged},
  };
}

}  // namespace cpf::codec
