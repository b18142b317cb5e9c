#pragma once

// JSON encoding of records and results. Record encodings follow the
// line-delimited export schemas; decoding reports schema violations as data.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpf/domain.hpp"

namespace cpf::codec {

using json = nlohmann::json;

template <typename T>
struct Decoded {
  std::optional<T> record;
  std::vector<Violation> violations;

  bool ok() const { return record.has_value() && violations.empty(); }
};

/// Lowercase + trim; applied once to resolution notes on the way in.
std::string normalize_notes(std::string_view s);

json encode(const AlertRecord& r);
json encode(const VulnRecord& r);
json encode(const CommItem& r);

/// Decodes a parsed JSON object and runs validate_record on the result.
Decoded<AlertRecord> decode_alert(const json& j);
Decoded<VulnRecord> decode_vuln(const json& j);
Decoded<CommItem> decode_comm(const json& j);

/// Finite values become numbers; markers become their names ("undefined", ...).
json encode(const MetricValue& v);
std::optional<MetricValue> decode_metric(const json& j);

json encode(const TimeRange& r);
json encode(const IndicatorResult& r);
/// Throws DataError on malformed input.
IndicatorResult decode_indicator_result(const json& j);

json encode(const FeatureRow& row);
json encode(const ValidationReport& r);

}  // namespace cpf::codec
