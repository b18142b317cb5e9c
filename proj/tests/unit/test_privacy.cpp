#include <gtest/gtest.h>

#include <random>
#include <set>

#include "cpf/errors.hpp"
#include "cpf/privacy.hpp"

using namespace cpf;
using namespace cpf::privacy;

namespace {

EntityDictionary people() {
  EntityDictionary d;
  d.entries = {{"Alice", EntityClass::Person},
               {"Bob", EntityClass::Person},
               {"Bob Stone", EntityClass::Person},
               {"Lisbon", EntityClass::Location},
               {"Acme Corp", EntityClass::Org}};
  d.role_map = {{"u-17", "TIER1"}, {"u-170", "LEAD"}};
  return d;
}

IndicatorResult group(std::string team, std::uint64_t members) {
  IndicatorResult r;
  r.scope = Scope::team(std::move(team));
  r.values = {{"MTTA", MetricValue::finite(12.0)}, {"IR", MetricValue::finite(0.25)}};
  r.sample_sizes = {{"closed", 40}};
  r.member_count = members;
  return r;
}

}  // namespace

TEST(Anonymize, NumbersEntitiesInOrderOfAppearance) {
  EXPECT_EQ(anonymize_text("Alice pinged Bob", people()), "[PERSON_1] pinged [PERSON_2]");
  EXPECT_EQ(anonymize_text("alice, then ALICE, then Bob in Lisbon", people()),
            "[PERSON_1], then [PERSON_1], then [PERSON_2] in [LOCATION_1]");
}

TEST(Anonymize, LongestMatchAndTokenBoundaries) {
  EXPECT_EQ(anonymize_text("Bob Stone met Bobby at Acme Corp.", people()),
            "[PERSON_1] met Bobby at [ORG_1].");
}

TEST(Anonymize, IsIdempotent) {
  const auto d = people();
  for (const char* s : {"Alice pinged Bob", "Bob Stone and Alice from Acme Corp in Lisbon",
                        "[PERSON_1] asked Bob", "nothing here"}) {
    const auto once = anonymize_text(s, d);
    EXPECT_EQ(anonymize_text(once, d), once) << s;
    EXPECT_EQ(count_entities(once, d), 0u) << s;
  }
}

TEST(Anonymize, ContinuesNumberingAfterExistingPlaceholders) {
  EXPECT_EQ(anonymize_text("[PERSON_1] asked Bob", people()), "[PERSON_1] asked [PERSON_2]");
}

TEST(Anonymize, CountsResidualEntities) {
  EXPECT_EQ(count_entities("Alice pinged Bob in Lisbon", people()), 3u);
  EXPECT_EQ(count_entities("Bobby", people()), 0u);
}

TEST(Dictionary, ParsesTabSeparatedFiles) {
  const auto e = EntityDictionary::parse_entities("# names\nAlice\tPERSON\n\nParis\tLOCATION\n");
  EXPECT_EQ(e.size(), 2u);
  EXPECT_EQ(e.at("Paris"), EntityClass::Location);
  EXPECT_THROW(EntityDictionary::parse_entities("Alice PERSON\n"), ConfigError);
  EXPECT_THROW(EntityDictionary::parse_entities("Alice\tPLANET\n"), ConfigError);
  const auto r = EntityDictionary::parse_roles("u-1\tTIER1\n");
  EXPECT_EQ(r.at("u-1"), "TIER1");
}

TEST(Roles, TagsAndSubstitution) {
  const auto d = people();
  EXPECT_EQ(role_tag("u-17", d), "[ROLE_TIER1]");
  EXPECT_EQ(role_tag("u-99", d), "[ROLE_UNKNOWN]");
  EXPECT_EQ(substitute_roles("u-170 paged u-17; U-17 ignored", d),
            "[ROLE_LEAD] paged [ROLE_TIER1]; U-17 ignored");
}

TEST(Pseudonymize, DeterministicPerSaltAndShaped) {
  const auto a = pseudonymize_actor("analyst-1", "salt-a");
  EXPECT_EQ(a, pseudonymize_actor("analyst-1", "salt-a"));
  EXPECT_NE(a, pseudonymize_actor("analyst-1", "salt-b"));
  EXPECT_EQ(a.rfind("anon-", 0), 0u);
  EXPECT_EQ(a.size(), 5u + 16u);
  EXPECT_THROW(pseudonymize_actor("analyst-1", ""), ConfigError);
}

TEST(Pseudonymize, DifferentSaltsRarelyCollide) {
  int same = 0;
  for (int i = 0; i < 10'000; ++i) {
    const auto id = "user-" + std::to_string(i);
    if (pseudonymize_actor(id, "salt-one") == pseudonymize_actor(id, "salt-two")) ++same;
  }
  EXPECT_EQ(same, 0);
}

TEST(Pseudonymize, NoCollisionsAcrossManyIds) {
  std::set<std::string> seen;
  for (int i = 0; i < 100'000; ++i) seen.insert(pseudonymize_actor("id-" + std::to_string(i), "k"));
  EXPECT_EQ(seen.size(), 100'000u);
}

TEST(KAnonymity, SmallGroupsAreSuppressed) {
  SuppressionPolicy policy;
  policy.k = 10;
  const auto out = enforce_k_anonymity(std::vector{group("big", 12), group("small", 9)}, policy);
  EXPECT_EQ(out[0].suppression, Suppression::None);
  EXPECT_TRUE(out[0].values.at("MTTA").is_finite());
  EXPECT_EQ(out[1].suppression, Suppression::Suppressed);
  for (const auto& [name, v] : out[1].values) EXPECT_TRUE(v.is_suppressed()) << name;
  EXPECT_TRUE(out[1].sample_sizes.empty());
}

TEST(KAnonymity, BoundaryAndEmptyGroups) {
  SuppressionPolicy policy;
  policy.k = 2;
  EXPECT_TRUE(requires_suppression(1, policy));
  EXPECT_FALSE(requires_suppression(2, policy));
  EXPECT_FALSE(requires_suppression(0, policy));
  policy.k = 10;
  EXPECT_FALSE(requires_suppression(10, policy));
  EXPECT_TRUE(requires_suppression(9, policy));
}

TEST(KAnonymity, MergeActionFlagsForParentFold) {
  SuppressionPolicy policy;
  policy.action = SuppressionPolicy::Action::MergeIntoParent;
  std::map<std::string, IndicatorResult> groups = {{"a", group("a", 3)}, {"b", group("b", 30)}};
  const auto out = enforce_k_anonymity(groups, policy);
  EXPECT_EQ(out.at("a").suppression, Suppression::MergeIntoParent);
  EXPECT_TRUE(out.at("a").values.at("IR").is_suppressed());
  EXPECT_EQ(out.at("b").suppression, Suppression::None);
}

TEST(KAnonymity, MissingMemberCountIsPolicyError) {
  auto g = group("x", 0);
  g.member_count.reset();
  EXPECT_THROW(enforce_k_anonymity(std::vector{g}, SuppressionPolicy{}), PolicyError);
}

TEST(KAnonymity, InvalidK) {
  SuppressionPolicy p;
  p.k = 1;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(KAnonymity, NoSmallGroupEverLeaksAValue) {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<std::uint64_t> size(0, 30);
  std::uniform_int_distribution<std::uint64_t> kdist(2, 15);
  for (int trial = 0; trial < 200; ++trial) {
    SuppressionPolicy policy;
    policy.k = kdist(rng);
    std::vector<IndicatorResult> groups;
    for (int g = 0; g < 8; ++g) groups.push_back(group("t" + std::to_string(g), size(rng)));
    for (const auto& r : enforce_k_anonymity(groups, policy)) {
      const bool small = *r.member_count > 0 && *r.member_count < policy.k;
      for (const auto& [name, v] : r.values) EXPECT_EQ(v.is_suppressed(), small);
    }
  }
}
