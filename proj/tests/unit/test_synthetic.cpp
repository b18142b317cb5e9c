#include <gtest/gtest.h>

#include "cpf/indicators.hpp"
#include "cpf/synthetic.hpp"
#include "fixtures.hpp"

using namespace cpf;
using namespace cpf::synthetic;

namespace {

ScenarioConfig week(std::uint64_t seed, std::vector<Injection> injections = {}) {
  ScenarioConfig c;
  c.seed = seed;
  c.duration = fixtures::range("2024-03-01T00:00:00Z", "2024-03-08T00:00:00Z");
  c.injections = std::move(injections);
  return c;
}

double value_of(const IndicatorResult& r, std::string_view name) {
  const auto& v = r.values.find(name)->second;
  return v.is_infinite() ? 1e9 : v.value();
}

}  // namespace

TEST(Synthetic, DeterministicInSeed) {
  const auto a = generate(week(7, {{Pattern::FatigueDrift, 0.5}}));
  const auto b = generate(week(7, {{Pattern::FatigueDrift, 0.5}}));
  EXPECT_EQ(a.bundle.alerts, b.bundle.alerts);
  EXPECT_EQ(a.bundle.vulns, b.bundle.vulns);
  EXPECT_EQ(a.bundle.comm, b.bundle.comm);
  EXPECT_EQ(a.labels, b.labels);
  const auto c = generate(week(8, {{Pattern::FatigueDrift, 0.5}}));
  EXPECT_NE(a.bundle.alerts, c.bundle.alerts);
}

TEST(Synthetic, RecordsAreValidAndInRange) {
  const auto cfg = week(3);
  const auto g = generate(cfg);
  ASSERT_FALSE(g.bundle.alerts.empty());
  ASSERT_FALSE(g.bundle.vulns.empty());
  ASSERT_FALSE(g.bundle.comm.empty());
  for (const auto& a : g.bundle.alerts) {
    EXPECT_TRUE(validate_record(a).empty()) << a.id;
    EXPECT_TRUE(cfg.duration.contains(a.created_at));
  }
  for (const auto& v : g.bundle.vulns) EXPECT_TRUE(validate_record(v).empty()) << v.id;
  for (const auto& c : g.bundle.comm) EXPECT_TRUE(validate_record(c).empty()) << c.id;
  // Alert volume tracks the configured rate (20/h over 168 h).
  EXPECT_NEAR(static_cast<double>(g.bundle.alerts.size()), 20.0 * 168, 0.1 * 20.0 * 168);
}

TEST(Synthetic, LabelsDescribeInjections) {
  const auto clean = generate(week(1));
  EXPECT_TRUE(clean.labels.at(Pattern::None).present);
  EXPECT_FALSE(clean.labels.at(Pattern::PatchGap).present);

  const auto g = generate(week(1, {{Pattern::PatchGap, 0.7}, {Pattern::ChannelLeakage, 0.4}}));
  EXPECT_EQ(g.labels.size(), kAllPatterns.size());
  EXPECT_FALSE(g.labels.at(Pattern::None).present);
  EXPECT_EQ(g.labels.at(Pattern::PatchGap), (PatternLabel{true, 0.7}));
  EXPECT_EQ(g.labels.at(Pattern::ChannelLeakage), (PatternLabel{true, 0.4}));
  EXPECT_FALSE(g.labels.at(Pattern::FatigueDrift).present);
  EXPECT_EQ(labels_to_json(g.labels)["patch_gap"]["strength"], 0.7);
}

TEST(Synthetic, InjectedPatternsMoveTheirIndicators) {
  const auto cfg = week(11);
  const auto clean = generate(cfg).bundle;
  auto run = [&](Pattern p) { return generate(week(11, {{p, 1.0}})).bundle; };
  const auto tax = indicators::TopicTaxonomy::builtin();

  const auto fat = run(Pattern::FatigueDrift);
  EXPECT_GT(value_of(indicators::compute_compliance_fatigue(fat.alerts, cfg.duration), "IR"),
            value_of(indicators::compute_compliance_fatigue(clean.alerts, cfg.duration), "IR") + 0.1);
  EXPECT_GT(value_of(indicators::compute_compliance_fatigue(fat.alerts, cfg.duration), "MTTA"),
            value_of(indicators::compute_compliance_fatigue(clean.alerts, cfg.duration), "MTTA"));

  const auto over = run(Pattern::OverloadCoupling);
  EXPECT_GT(value_of(indicators::compute_alert_overload(over.alerts, cfg.duration, Millis{3'600'000}), "PMR"),
            value_of(indicators::compute_alert_overload(clean.alerts, cfg.duration, Millis{3'600'000}), "PMR"));

  const auto gap = run(Pattern::PatchGap);
  const auto gap_r = indicators::compute_risk_perception_gap(gap.vulns, cfg.duration);
  const auto clean_r = indicators::compute_risk_perception_gap(clean.vulns, cfg.duration);
  EXPECT_GT(value_of(gap_r, "PLG"), value_of(clean_r, "PLG") + 24.0);

  const auto leak = run(Pattern::ChannelLeakage);
  EXPECT_GT(value_of(indicators::compute_uctr(leak.comm, tax, {}, cfg.duration), "UCTR"), 0.5);
  EXPECT_LE(value_of(indicators::compute_uctr(clean.comm, tax, {}, cfg.duration), "UCTR"), 0.5);
}

TEST(Synthetic, ParsesScenarioText) {
  const auto c = ScenarioConfig::parse(
      "# scenario\nseed = 9\nstart = 2024-01-01T00:00:00Z\nend = 2024-01-03T00:00:00Z\n"
      "teams = blue:12, red:4\ninject = fatigue_drift:0.8\ninject = patch_gap:0.3\n"
      "severity_mix = 0.25, 0.25, 0.25, 0.25\nid_prefix = p1-\n");
  EXPECT_EQ(c.seed, 9u);
  ASSERT_EQ(c.teams.size(), 2u);
  EXPECT_EQ(c.teams[1].name, "red");
  EXPECT_EQ(c.teams[1].size, 4u);
  EXPECT_DOUBLE_EQ(c.strength(Pattern::FatigueDrift), 0.8);
  EXPECT_DOUBLE_EQ(c.strength(Pattern::ChannelLeakage), 0.0);
  EXPECT_EQ(c.id_prefix, "p1-");
  EXPECT_EQ(generate(c).bundle.alerts.front().id.rfind("p1-", 0), 0u);
}

TEST(Synthetic, RejectsInfeasibleScenarios) {
  const std::string base = "start = 2024-01-01T00:00:00Z\nend = 2024-01-02T00:00:00Z\n";
  EXPECT_THROW(ScenarioConfig::parse("end = 2024-01-01T00:00:00Z\nstart = 2024-01-02T00:00:00Z\n"),
               ConfigError);
  EXPECT_THROW(ScenarioConfig::parse(base + "inject = fatigue_drift:1.5\n"), ConfigError);
  EXPECT_THROW(ScenarioConfig::parse(base + "inject = sleepiness:0.5\n"), ConfigError);
  EXPECT_THROW(ScenarioConfig::parse(base + "severity_mix = 0.5, 0.5, 0.5, 0.5\n"), ConfigError);
  EXPECT_THROW(ScenarioConfig::parse(base + "base_alert_rate = -3\n"), ConfigError);
  EXPECT_THROW(ScenarioConfig::parse(base + "teams = blue:0\n"), ConfigError);
  EXPECT_THROW(ScenarioConfig::parse(base + "flavour = mint\n"), ConfigError);
}

TEST(Synthetic, EmittedFilesIngestCleanly) {
  const auto g = generate(week(5, {{Pattern::OverloadCoupling, 0.6}}));
  const auto dir = fixtures::scratch_dir("synthetic_emit");
  const auto paths = emit(g, dir);
  EXPECT_EQ(paths.size(), 4u);
  DatasetBundle back;
  for (const char* kind : {"alerts", "vulns", "comm"}) {
    const auto report = load_dataset(dir / (std::string(kind) + ".jsonl"), kind, back);
    EXPECT_TRUE(report.rejected.empty()) << kind;
  }
  EXPECT_EQ(back.alerts, g.bundle.alerts);
  EXPECT_EQ(back.vulns, g.bundle.vulns);
  EXPECT_EQ(back.comm, g.bundle.comm);
}
