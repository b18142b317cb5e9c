#include <gtest/gtest.h>

#include <cmath>

#include "cpf/indicators.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cpf;
using namespace cpf::indicators;
using fixtures::at;

namespace {

const TimeRange kDay = fixtures::range("2024-03-01T00:00:00Z", "2024-03-02T00:00:00Z");
constexpr Millis kHour{3'600'000};

AlertRecord closed_alert(std::string id, Timestamp created, Millis delay, std::optional<std::string> notes) {
  AlertRecord a;
  a.id = std::move(id);
  a.created_at = created;
  a.closed_at = created + delay;
  a.status = AlertStatus::Closed;
  a.resolution_notes = std::move(notes);
  return a;
}

AlertRecord alert_at(std::string id, Timestamp created, AlertStatus status, Severity sev) {
  AlertRecord a;
  a.id = std::move(id);
  a.created_at = created;
  a.status = status;
  a.severity = sev;
  return a;
}

VulnRecord vuln(std::string id, std::string asset, Environment env, Timestamp detected,
                std::optional<Millis> fix) {
  VulnRecord v;
  v.id = std::move(id);
  v.asset_id = std::move(asset);
  v.environment = env;
  v.detected_at = detected;
  if (fix) v.remediated_at = detected + *fix;
  return v;
}

CommItem comm(std::string id, Visibility vis, std::string text) {
  CommItem c;
  c.id = std::move(id);
  c.timestamp = at("2024-03-01T10:00:00Z");
  c.visibility = vis;
  c.source = vis == Visibility::Official ? CommSource::Ticketing : CommSource::Chat;
  c.text = std::move(text);
  return c;
}

double value_of(const IndicatorResult& r, std::string_view metric) {
  const auto& v = r.values.find(metric)->second;
  EXPECT_TRUE(v.is_finite()) << metric << " is " << v.to_string();
  return v.value();
}

std::vector<std::pair<std::string, std::vector<std::string>>> taxonomy_pairs(const TopicTaxonomy& t) {
  return {t.entries().begin(), t.entries().end()};
}

}  // namespace

TEST(ComplianceFatigue, TwoAlertTrace) {
  const std::vector<AlertRecord> alerts = {
      closed_alert("a1", at("2024-03-01T09:00:00Z"), Millis{30 * 60'000}, "false positive"),
      closed_alert("a2", at("2024-03-01T10:00:00Z"), Millis{90 * 60'000}, "patched"),
  };
  const auto r = compute_compliance_fatigue(alerts, kDay);
  EXPECT_DOUBLE_EQ(value_of(r, metric::kMTTA), 60.0);
  EXPECT_DOUBLE_EQ(value_of(r, metric::kIR), 0.5);
}

TEST(ComplianceFatigue, AllFalsePositives) {
  std::vector<AlertRecord> alerts;
  for (int i = 0; i < 10; ++i) {
    alerts.push_back(closed_alert("a" + std::to_string(i), at("2024-03-01T01:00:00Z") + i * kHour,
                                  Millis{60'000}, "false positive"));
  }
  EXPECT_DOUBLE_EQ(value_of(compute_compliance_fatigue(alerts, kDay), metric::kIR), 1.0);
}

TEST(ComplianceFatigue, EmptyInputGivesZeros) {
  const auto r = compute_compliance_fatigue({}, kDay);
  EXPECT_DOUBLE_EQ(value_of(r, metric::kMTTA), 0.0);
  EXPECT_DOUBLE_EQ(value_of(r, metric::kIR), 0.0);
}

TEST(ComplianceFatigue, CustomMarkers) {
  const std::vector<AlertRecord> alerts = {
      closed_alert("a1", at("2024-03-01T09:00:00Z"), Millis{60'000}, "benign"),
      closed_alert("a2", at("2024-03-01T10:00:00Z"), Millis{60'000}, std::nullopt),
  };
  IgnoreMarkers m;
  m.markers = {"benign"};
  m.empty_is_ignored = false;
  EXPECT_DOUBLE_EQ(value_of(compute_compliance_fatigue(alerts, kDay, Scope::org(), m), metric::kIR), 0.5);
}

TEST(ComplianceFatigue, MatchesOracleAcrossScopes) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    std::mt19937_64 rng(seed);
    const auto b = fixtures::random_bundle(rng, kDay, 150, 0, 0);
    struct Case {
      Scope scope;
      std::string analyst, team;
    };
    for (const auto& c : {Case{Scope::org(), "", ""}, Case{Scope::team("blue"), "", "blue"},
                          Case{Scope::analyst("analyst-2"), "analyst-2", ""}}) {
      const auto got = compute_compliance_fatigue(b.alerts, kDay, c.scope);
      const auto want = oracle::compliance_fatigue(b.alerts, kDay, c.analyst, c.team);
      EXPECT_NEAR(value_of(got, metric::kMTTA), want.mtta, 1e-9);
      EXPECT_NEAR(value_of(got, metric::kIR), want.ignore_rate, 1e-12);
    }
  }
}

TEST(BinAlerts, EpochAlignedAndClipped) {
  const TimeRange r{at("2024-03-01T00:30:00Z"), at("2024-03-01T03:15:00Z")};
  const std::vector<AlertRecord> alerts = {
      alert_at("a1", at("2024-03-01T00:10:00Z"), AlertStatus::New, Severity::Low),  // before range
      alert_at("a2", at("2024-03-01T00:45:00Z"), AlertStatus::Missed, Severity::Critical),
      alert_at("a3", at("2024-03-01T03:10:00Z"), AlertStatus::New, Severity::Critical),
  };
  const auto bins = bin_alerts(alerts, r, kHour);
  ASSERT_EQ(bins.size(), 4u);
  EXPECT_EQ(bins[0].window.start, r.start);
  EXPECT_EQ(bins[0].window.end, at("2024-03-01T01:00:00Z"));
  EXPECT_EQ(bins[3].window.end, r.end);
  EXPECT_EQ(bins[0].total_volume, 1u);
  EXPECT_EQ(bins[0].missed_critical, 1u);
  EXPECT_EQ(bins[1].total_volume, 0u);
  EXPECT_EQ(bins[3].total_critical, 1u);
}

TEST(AlertOverload, ProportionalMissesCorrelatePerfectly) {
  std::vector<AlertRecord> alerts;
  const TimeRange r{at("2024-03-01T00:00:00Z"), at("2024-03-01T10:00:00Z")};
  for (int bin = 0; bin < 10; ++bin) {
    const int volume = 2 * (bin + 1);
    for (int i = 0; i < volume; ++i) {
      const auto status = i < volume / 2 ? AlertStatus::Missed : AlertStatus::Closed;
      alerts.push_back(alert_at("a" + std::to_string(bin) + "-" + std::to_string(i),
                                r.start + bin * kHour + Millis{i * 1000}, status, Severity::Medium));
    }
  }
  EXPECT_NEAR(value_of(compute_alert_overload(alerts, r, kHour), metric::kVMCC), 1.0, 1e-12);
}

TEST(AlertOverload, RisingHourlyVolumeMatchesOracle) {
  std::vector<AlertRecord> alerts;
  for (int h = 0; h < 24; ++h) {
    const int volume = 10 + h;
    for (int i = 0; i < volume; ++i) {
      const auto sev = i % 3 == 0 ? Severity::Critical : Severity::Low;
      const auto status = (i % 5 == 0 && h > 15) ? AlertStatus::Missed : AlertStatus::Closed;
      alerts.push_back(alert_at("h" + std::to_string(h) + "-" + std::to_string(i),
                                kDay.start + h * kHour + Millis{i * 60'000}, status, sev));
    }
  }
  const auto got = compute_alert_overload(alerts, kDay, kHour);
  const auto want = oracle::alert_overload(alerts, kDay, kHour.count());
  EXPECT_NEAR(value_of(got, metric::kPMR), want.pmr, 1e-12);
  ASSERT_TRUE(want.vmcc);
  EXPECT_NEAR(value_of(got, metric::kVMCC), *want.vmcc, 1e-12);
  // Peak bins are hours 22 and 23 (volumes 32, 33 above the 90th percentile 31.7).
  EXPECT_GT(value_of(got, metric::kPMR), 0.0);
}

TEST(AlertOverload, ConstantSeriesGivesUndefinedCorrelation) {
  std::vector<AlertRecord> alerts;
  for (int h = 0; h < 24; ++h) {
    alerts.push_back(alert_at("a" + std::to_string(h), kDay.start + h * kHour, AlertStatus::New,
                              Severity::Low));
  }
  const auto r = compute_alert_overload(alerts, kDay, kHour);
  EXPECT_TRUE(r.values.at("VMCC").is_undefined());
}

TEST(AlertOverload, SingleBinIsDomainError) {
  EXPECT_THROW(compute_alert_overload({}, {kDay.start, kDay.start + kHour}, kHour), DomainError);
}

TEST(AlertOverload, MatchesOracleOnRandomBundles) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const auto b = fixtures::random_bundle(rng, kDay, 300, 0, 0);
    for (long long w : {3'600'000LL, 900'000LL, 420'000LL}) {
      const auto got = compute_alert_overload(b.alerts, kDay, Millis{w});
      const auto want = oracle::alert_overload(b.alerts, kDay, w);
      EXPECT_NEAR(value_of(got, metric::kPMR), want.pmr, 1e-12);
      if (want.vmcc) {
        EXPECT_NEAR(value_of(got, metric::kVMCC), *want.vmcc, 1e-9);
      } else {
        EXPECT_TRUE(got.values.at("VMCC").is_undefined());
      }
    }
  }
}

TEST(RiskGap, MirroredEnvironmentsShowNoGap) {
  std::vector<VulnRecord> v;
  for (int i = 0; i < 4; ++i) {
    const auto t = kDay.start + i * kHour;
    v.push_back(vuln("p" + std::to_string(i), "prod-" + std::to_string(i), Environment::Prod, t, 10 * kHour));
    v.push_back(vuln("d" + std::to_string(i), "dev-" + std::to_string(i), Environment::Dev, t, 10 * kHour));
  }
  const auto r = compute_risk_perception_gap(v, kDay);
  EXPECT_DOUBLE_EQ(value_of(r, metric::kPLG), 0.0);
  EXPECT_DOUBLE_EQ(value_of(r, metric::kVDR), 1.0);
}

TEST(RiskGap, SlowerNonProdPatchingAndDenserNonProd) {
  std::vector<VulnRecord> v;
  for (int i = 0; i < 3; ++i) {
    v.push_back(vuln("p" + std::to_string(i), "prod-" + std::to_string(i), Environment::Prod,
                     kDay.start + i * kHour, 48 * kHour));
  }
  for (int i = 0; i < 5; ++i) {
    v.push_back(vuln("d" + std::to_string(i), "dev-" + std::to_string(i % 4), Environment::Dev,
                     kDay.start + i * kHour, 120 * kHour));
  }
  AssetInventory inv;
  for (int i = 0; i < 6; ++i) inv["prod-" + std::to_string(i)] = Environment::Prod;
  for (int i = 0; i < 4; ++i) inv["dev-" + std::to_string(i)] = Environment::Dev;
  RiskGapOptions opts;
  opts.inventory = &inv;
  const auto r = compute_risk_perception_gap(v, kDay, opts);
  EXPECT_DOUBLE_EQ(value_of(r, metric::kPLG), 72.0);
  EXPECT_DOUBLE_EQ(value_of(r, metric::kVDR), 2.5);
}

TEST(RiskGap, ProdAssetsWithoutVulnsMakeRatioInfinite) {
  const std::vector<VulnRecord> v = {
      vuln("d1", "dev-1", Environment::Dev, kDay.start, 5 * kHour)};
  AssetInventory inv = {{"prod-1", Environment::Prod}, {"dev-1", Environment::Dev}};
  RiskGapOptions opts;
  opts.inventory = &inv;
  const auto r = compute_risk_perception_gap(v, kDay, opts);
  EXPECT_TRUE(r.values.at("VDR").is_infinite());
  EXPECT_TRUE(r.values.at("PLG").is_undefined());
}

TEST(RiskGap, NoVulnsAtAllIsUndefined) {
  const auto r = compute_risk_perception_gap({}, kDay);
  EXPECT_TRUE(r.values.at("VDR").is_undefined());
  EXPECT_TRUE(r.values.at("PLG").is_undefined());
}

TEST(RiskGap, OpenOnlyCountsVulnsStillOpenAtRangeEnd) {
  const std::vector<VulnRecord> v = {
      vuln("p1", "prod-1", Environment::Prod, kDay.start, 2 * kHour),
      vuln("p2", "prod-1", Environment::Prod, kDay.start, std::nullopt),
      vuln("d1", "dev-1", Environment::Dev, kDay.start, std::nullopt),
      vuln("d2", "dev-1", Environment::Dev, kDay.start, 100 * kHour),
  };
  RiskGapOptions opts;
  opts.open_only = true;
  EXPECT_DOUBLE_EQ(value_of(compute_risk_perception_gap(v, kDay, opts), metric::kVDR), 2.0);
}

TEST(RiskGap, MatchesOracleOnRandomBundles) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(500 + seed);
    const auto b = fixtures::random_bundle(rng, kDay, 0, 1 + seed % 25, 0);
    const auto got = compute_risk_perception_gap(b.vulns, kDay);
    const auto want = oracle::risk_perception_gap(b.vulns, kDay);
    if (want.plg) {
      EXPECT_NEAR(value_of(got, metric::kPLG), *want.plg, 1e-9);
    } else {
      EXPECT_TRUE(got.values.at("PLG").is_undefined());
    }
    const auto& vdr = got.values.at("VDR");
    ASSERT_EQ(vdr.kind(), want.vdr.kind());
    if (vdr.is_finite()) EXPECT_NEAR(vdr.value(), want.vdr.value(), 1e-12);
  }
}

TEST(Topics, TokenBoundedMatching) {
  const auto tax = TopicTaxonomy::builtin();
  const std::vector<std::string> cert = {"cert"};
  const std::vector<CommItem> hit = {comm("c1", Visibility::Private, "the VPN cert expired again")};
  EXPECT_EQ(extract_topics(hit, tax, cert), (std::set<std::string>{"cert_expiry"}));
  const std::vector<CommItem> miss = {
      comm("c2", Visibility::Private, "a concerted effort; certificate expired twice")};
  EXPECT_TRUE(extract_topics(miss, tax, cert).empty());
  EXPECT_EQ(extract_topics(miss, tax, {}), (std::set<std::string>{"cert_expiry"}));
}

TEST(Topics, NormalizationIsCaseAndWhitespaceInsensitive) {
  EXPECT_EQ(normalize_text("  Lateral\t\tMOVEMENT \n seen "), "lateral movement seen");
  EXPECT_TRUE(contains_phrase("saw lateral movement.", "lateral movement"));
  EXPECT_FALSE(contains_phrase("phishing", "phish"));
  EXPECT_TRUE(contains_phrase("phish!", "phish"));
}

TEST(Topics, TaxonomyValidation) {
  using Entries = std::map<std::string, std::vector<std::string>, std::less<>>;
  EXPECT_THROW(TopicTaxonomy(Entries{}), DomainError);
  EXPECT_THROW(TopicTaxonomy(Entries{{"a", {}}}), DomainError);
  EXPECT_THROW(TopicTaxonomy(Entries{{"a", {"x"}}, {"b", {"x"}}}), DomainError);
  const auto t = TopicTaxonomy::from_json(TopicTaxonomy::builtin().to_json());
  EXPECT_EQ(t.entries(), TopicTaxonomy::builtin().entries());
}

TEST(Uctr, PrivateOnlyShare) {
  std::vector<CommItem> items = {
      comm("c1", Visibility::Private, "phishing wave"),
      comm("c2", Visibility::Private, "malware on laptop"),
      comm("c3", Visibility::Private, "shadow it tool again"),
      comm("c4", Visibility::Official, "unpatched servers"),
      comm("c5", Visibility::Official, "firewall rule change"),
      comm("c6", Visibility::Official, "lateral movement seen"),
      comm("c7", Visibility::Private, "lateral movement seen too"),
  };
  const auto r = compute_uctr(items, TopicTaxonomy::builtin(), {}, kDay);
  EXPECT_NEAR(value_of(r, metric::kUCTR), 4.0 / 6.0, 1e-12);
}

TEST(Uctr, NoTopicsIsUndefined) {
  const std::vector<CommItem> items = {comm("c1", Visibility::Private, "lunch?")};
  EXPECT_TRUE(compute_uctr(items, TopicTaxonomy::builtin(), {}, kDay).values.at("UCTR").is_undefined());
}

TEST(Uctr, MatchesOracleOnRandomBundles) {
  const auto tax = TopicTaxonomy::builtin();
  const std::vector<std::vector<std::string>> keyword_sets = {{}, {"on"}, {"check", "security"}, {"again"}};
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    std::mt19937_64 rng(900 + seed);
    const auto b = fixtures::random_bundle(rng, kDay, 0, 0, 40);
    for (const auto& kw : keyword_sets) {
      const auto got = compute_uctr(b.comm, tax, kw, kDay);
      const auto want = oracle::uctr(b.comm, taxonomy_pairs(tax), kw, kDay);
      if (want) {
        EXPECT_NEAR(value_of(got, metric::kUCTR), *want, 1e-12);
      } else {
        EXPECT_TRUE(got.values.at("UCTR").is_undefined());
      }
    }
  }
}

TEST(Classify, FlagsCrossedThresholds) {
  IndicatorResult r;
  r.indicator = Indicator::AgainstGravity;
  r.values = {{"UCTR", MetricValue::finite(0.6)}};
  const auto flags = classify_risk(std::vector{r}, ClassifierConfig::defaults());
  ASSERT_EQ(flags.size(), 1u);
  EXPECT_TRUE(flags[0].flagged);
  EXPECT_EQ(flags[0].triggered_metrics, std::vector<std::string>{"UCTR"});
}

TEST(Classify, UndefinedAndSuppressedNeverFlag) {
  IndicatorResult r;
  r.indicator = Indicator::RiskPerceptionGap;
  r.values = {{"PLG", MetricValue::undefined()}, {"VDR", MetricValue::suppressed()}};
  const auto flags = classify_risk(std::vector{r}, ClassifierConfig::defaults());
  EXPECT_FALSE(flags[0].flagged);
  EXPECT_NE(flags[0].rationale.find("undefined"), std::string::npos);
}

TEST(Classify, InfiniteRatioTripsUpperThreshold) {
  IndicatorResult r;
  r.indicator = Indicator::RiskPerceptionGap;
  r.values = {{"VDR", MetricValue::infinite()}};
  EXPECT_TRUE(classify_risk(std::vector{r}, ClassifierConfig::defaults())[0].flagged);
}

TEST(Classify, ConfigParsing) {
  const auto c = ClassifierConfig::parse(
      "# tuned\nthreshold.IR = >= 0.4\nignore_marker = Benign \nignore_empty = false\n");
  EXPECT_EQ(c.thresholds.at("IR").op, Threshold::Op::GreaterEqual);
  EXPECT_DOUBLE_EQ(c.thresholds.at("IR").value, 0.4);
  EXPECT_EQ(c.thresholds.at("UCTR").value, 0.5);
  EXPECT_EQ(c.ignore.markers, (std::set<std::string, std::less<>>{"benign"}));
  EXPECT_FALSE(c.ignore.empty_is_ignored);
  EXPECT_THROW(ClassifierConfig::parse("threshold.XYZ = > 1"), ConfigError);
  EXPECT_THROW(ClassifierConfig::parse("threshold.IR = about 3"), ConfigError);
  EXPECT_THROW(ClassifierConfig::parse("colour = blue"), ConfigError);
}
