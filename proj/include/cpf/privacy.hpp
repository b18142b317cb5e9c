#pragma once

// Text anonymization, actor pseudonymization, role tagging and k-anonymity
// suppression for every report path.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cpf/domain.hpp"

namespace cpf::privacy {

enum class EntityClass { Person, Location, Org };
std::string_view to_string(EntityClass c);
std::optional<EntityClass> parse_entity_class(std::string_view s);

struct EntityDictionary {
  /// Raw entity string -> placeholder class. Matching is case-insensitive.
  std::map<std::string, EntityClass, std::less<>> entries;
  /// Actor id -> role tag.
  std::map<std::string, std::string, std::less<>> role_map;

  /// "raw<TAB>CLASS" per line; blank lines and '#' comments skipped. Throws ConfigError.
  static std::map<std::string, EntityClass, std::less<>> parse_entities(std::string_view text);
  /// "actor_id<TAB>role" per line. Throws ConfigError.
  static std::map<std::string, std::string, std::less<>> parse_roles(std::string_view text);
};

/// Replaces dictionary entities found at token boundaries with "[CLASS_n]",
/// longest match first. Numbering is per class, in order of first occurrence,
/// and continues after any placeholders already present, so the function is
/// idempotent.
std::string anonymize_text(std::string_view text, const EntityDictionary& dictionary);

/// Dictionary entities still present at token boundaries outside placeholders.
std::size_t count_entities(std::string_view text, const EntityDictionary& dictionary);

/// Keyed one-way digest (HMAC-SHA256) rendered as "anon-" + 16 hex digits.
/// Throws ConfigError for an empty salt.
std::string pseudonymize_actor(std::string_view actor_id, std::string_view salt);

/// Role tag for an actor, "[ROLE_UNKNOWN]" when unmapped.
std::string role_tag(std::string_view actor_id, const EntityDictionary& dictionary);

/// Replaces role-mapped actor ids found at token boundaries (exact case,
/// longest first) with their role tags.
std::string substitute_roles(std::string_view text, const EntityDictionary& dictionary);

struct SuppressionPolicy {
  enum class Action { SuppressValue, MergeIntoParent };
  std::uint64_t k = 10;
  Action action = Action::SuppressValue;

  /// Throws ConfigError when k < 2.
  void validate() const;
};

/// True when the policy requires hiding a group of this size. Groups with no
/// attributable members carry no personal data and pass through.
bool requires_suppression(std::uint64_t member_count, const SuppressionPolicy& policy);

/// Marks every group whose member count is below k. With SuppressValue, all
/// metric values become the suppressed marker and sample sizes are dropped.
/// With MergeIntoParent the same masking applies and the entry is flagged for
/// the caller to fold into its parent scope and recompute. Throws PolicyError
/// when a group lacks a member count.
std::map<std::string, IndicatorResult> enforce_k_anonymity(
    std::map<std::string, IndicatorResult> groups, const SuppressionPolicy& policy);

/// Vector form used by report paths; same semantics per entry.
std::vector<IndicatorResult> enforce_k_anonymity(std::vector<IndicatorResult> results,
                                                 const SuppressionPolicy& policy);

}  // namespace cpf::privacy
