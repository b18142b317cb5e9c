#include <gtest/gtest.h>

#include "cpf/codec.hpp"
#include "cpf/domain.hpp"
#include "fixtures.hpp"

using namespace cpf;
using fixtures::at;

TEST(Rfc3339, ParsesUtcAndOffsets) {
  auto z = parse_rfc3339("2024-03-01T12:00:00Z");
  auto off = parse_rfc3339("2024-03-01T14:00:00+02:00");
  ASSERT_TRUE(z && off);
  EXPECT_EQ(*z, *off);
  auto frac = parse_rfc3339("2024-03-01T12:00:00.250Z");
  ASSERT_TRUE(frac);
  EXPECT_EQ((*frac - *z).count(), 250);
}

TEST(Rfc3339, RejectsGarbage) {
  for (const char* s : {"", "2024-03-01", "2024-13-01T00:00:00Z", "2024-02-30T00:00:00Z",
                        "2024-03-01T25:00:00Z", "yesterday", "2024-03-01T00:00:00"}) {
    EXPECT_FALSE(parse_rfc3339(s)) << s;
  }
}

TEST(Rfc3339, FormatRoundTrips) {
  for (const char* s : {"2024-03-01T12:00:00Z", "1999-12-31T23:59:59.999Z", "1970-01-01T00:00:00Z"}) {
    auto t = parse_rfc3339(s);
    ASSERT_TRUE(t);
    EXPECT_EQ(format_rfc3339(*t), s);
  }
}

TEST(Duration, ParsesUnits) {
  EXPECT_EQ(parse_duration("1h")->count(), 3'600'000);
  EXPECT_EQ(parse_duration("15m")->count(), 900'000);
  EXPECT_EQ(parse_duration("2d")->count(), 172'800'000);
  EXPECT_EQ(parse_duration("500ms")->count(), 500);
  EXPECT_FALSE(parse_duration("h"));
  EXPECT_FALSE(parse_duration("10y"));
  EXPECT_EQ(format_duration(Millis{3'600'000}), "1h");
}

TEST(AlertValidation, ReportsEachBrokenInvariant) {
  AlertRecord a;
  a.id = "a1";
  a.created_at = at("2024-03-01T12:00:00Z");
  a.status = AlertStatus::Closed;
  EXPECT_EQ(validate_record(a).size(), 1u);  // closed without closed_at

  a.closed_at = at("2024-03-01T11:00:00Z");
  auto v = validate_record(a);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].field, "closed_at");

  a.closed_at = at("2024-03-01T12:30:00Z");
  EXPECT_TRUE(validate_record(a).empty());

  a.status = AlertStatus::Missed;
  EXPECT_EQ(validate_record(a).size(), 1u);
}

TEST(MetricValue, MarkersAreDistinctFromNumbers) {
  EXPECT_NE(MetricValue::finite(0.0), MetricValue::undefined());
  EXPECT_NE(MetricValue::infinite(), MetricValue::suppressed());
  EXPECT_EQ(MetricValue::finite(0.5).to_string(), "0.5");
  EXPECT_EQ(MetricValue::infinite().to_string(), "infinite");
}

TEST(Scope, ParsesAndPrints) {
  EXPECT_EQ(Scope::parse("org"), Scope::org());
  EXPECT_EQ(Scope::parse("team:blue"), Scope::team("blue"));
  EXPECT_EQ(Scope::parse("analyst:x-1")->to_string(), "analyst:x-1");
  EXPECT_FALSE(Scope::parse("team:"));
  EXPECT_FALSE(Scope::parse("department:a"));
}

TEST(Codec, AlertRoundTrip) {
  AlertRecord a;
  a.id = "a1";
  a.created_at = at("2024-03-01T12:00:00Z");
  a.closed_at = at("2024-03-01T12:45:00Z");
  a.status = AlertStatus::Closed;
  a.severity = Severity::Critical;
  a.assigned_to = "ana";
  a.resolution_notes = "false positive";
  auto d = codec::decode_alert(codec::encode(a));
  ASSERT_TRUE(d.ok());
  EXPECT_EQ(*d.record, a);
}

TEST(Codec, NullOptionalsAndUnknownFields) {
  auto j = nlohmann::json::parse(
      R"({"id":"a2","created_at":"2024-03-01T00:00:00Z","closed_at":null,"status":"new",
          "severity":"low","assigned_to":null,"team":null,"resolution_notes":null,"extra":[1,2]})");
  auto d = codec::decode_alert(j);
  ASSERT_TRUE(d.ok());
  EXPECT_FALSE(d.record->closed_at);
  EXPECT_FALSE(d.record->assigned_to);
}

TEST(Codec, NotesAreNormalizedOnce) {
  auto j = nlohmann::json::parse(
      R"({"id":"a3","created_at":"2024-03-01T00:00:00Z","closed_at":"2024-03-01T00:10:00Z",
          "status":"closed","severity":"high","resolution_notes":"  False Positive "})");
  auto d = codec::decode_alert(j);
  ASSERT_TRUE(d.ok());
  EXPECT_EQ(d.record->resolution_notes, "false positive");
}

TEST(Codec, UnknownEnvironmentIsAViolation) {
  auto j = nlohmann::json::parse(
      R"({"id":"v1","asset_id":"h1","severity":"low","environment":"qa",
          "detected_at":"2024-03-01T00:00:00Z","remediated_at":null})");
  auto d = codec::decode_vuln(j);
  EXPECT_FALSE(d.ok());
  ASSERT_FALSE(d.violations.empty());
  EXPECT_EQ(d.violations[0].field, "environment");
  EXPECT_EQ(d.violations[0].rule, "unknown environment tag");
}

TEST(Codec, IndicatorResultRoundTrip) {
  IndicatorResult r;
  r.indicator = Indicator::RiskPerceptionGap;
  r.scope = Scope::org();
  r.range = fixtures::range("2024-03-01T00:00:00Z", "2024-03-02T00:00:00Z");
  r.values = {{"PLG", MetricValue::finite(72.0)}, {"VDR", MetricValue::infinite()}};
  r.sample_sizes = {{"prod_vulns", 3}};
  r.member_count = 12;
  const auto back = codec::decode_indicator_result(codec::encode(r));
  EXPECT_EQ(back, r);
  EXPECT_EQ(codec::encode(r)["values"]["VDR"], "infinite");
}
