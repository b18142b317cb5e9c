#include "cpf/privacy.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <sstream>

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include "cpf/errors.hpp"

namespace cpf::privacy {
namespace {

constexpr std::array<std::pair<std::string_view, EntityClass>, 3> kClasses{{
    {"PERSON", EntityClass::Person},
    {"LOCATION", EntityClass::Location},
    {"ORG", EntityClass::Org},
}};

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), lower);
  return out;
}

// Length of a "[CLASS_n]" placeholder starting at pos, 0 if there is none.
// Sets class_index and number when found.
std::size_t placeholder_at(std::string_view text, std::size_t pos, std::size_t& class_index,
                           long& number) {
  if (pos >= text.size() || text[pos] != '[') return 0;
  for (std::size_t c = 0; c < kClasses.size(); ++c) {
    const auto name = kClasses[c].first;
    std::size_t p = pos + 1;
    if (text.substr(p, name.size()) != name) continue;
    p += name.size();
    if (p >= text.size() || text[p] != '_') continue;
    ++p;
    const std::size_t digits = p;
    long n = 0;
    while (p < text.size() && std::isdigit(static_cast<unsigned char>(text[p]))) {
      n = n * 10 + (text[p] - '0');
      ++p;
    }
    if (p == digits || p >= text.size() || text[p] != ']') continue;
    class_index = c;
    number = n;
    return p + 1 - pos;
  }
  return 0;
}

struct Entry {
  std::string lowered;
  EntityClass cls;
};

std::vector<Entry> sorted_entries(const EntityDictionary& dict) {
  std::vector<Entry> out;
  out.reserve(dict.entries.size());
  for (const auto& [raw, cls] : dict.entries) out.push_back({to_lower(raw), cls});
  std::stable_sort(out.begin(), out.end(), [](const Entry& a, const Entry& b) {
    return a.lowered.size() > b.lowered.size();
  });
  return out;
}

// Longest entry matching at pos with token boundaries on both sides.
const Entry* match_at(std::string_view lowered_text, std::size_t pos,
                      const std::vector<Entry>& entries) {
  if (pos > 0 && is_word_char(lowered_text[pos - 1])) return nullptr;
  for (const auto& e : entries) {
    if (e.lowered.empty()) continue;
    if (lowered_text.compare(pos, e.lowered.size(), e.lowered) != 0) continue;
    const std::size_t end = pos + e.lowered.size();
    if (end < lowered_text.size() && is_word_char(lowered_text[end]) &&
        is_word_char(e.lowered.back())) {
      continue;
    }
    return &e;
  }
  return nullptr;
}

std::size_t class_slot(EntityClass c) { return static_cast<std::size_t>(c); }

template <typename Fn>
void for_each_line(std::string_view text, Fn fn) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    fn(line, line_no);
  }
}

}  // namespace

std::string_view to_string(EntityClass c) {
  for (const auto& [name, value] : kClasses) {
    if (value == c) return name;
  }
  return "?";
}

std::optional<EntityClass> parse_entity_class(std::string_view s) {
  for (const auto& [name, value] : kClasses) {
    if (name == s) return value;
  }
  return std::nullopt;
}

std::map<std::string, EntityClass, std::less<>> EntityDictionary::parse_entities(
    std::string_view text) {
  std::map<std::string, EntityClass, std::less<>> out;
  for_each_line(text, [&](const std::string& line, int line_no) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ConfigError("entity dictionary line " + std::to_string(line_no) +
                        ": expected raw<TAB>CLASS");
    }
    auto cls = parse_entity_class(std::string_view(line).substr(tab + 1));
    if (!cls) {
      throw ConfigError("entity dictionary line " + std::to_string(line_no) +
                        ": class must be PERSON, LOCATION or ORG");
    }
    out.insert_or_assign(line.substr(0, tab), *cls);
  });
  return out;
}

std::map<std::string, std::string, std::less<>> EntityDictionary::parse_roles(
    std::string_view text) {
  std::map<std::string, std::string, std::less<>> out;
  for_each_line(text, [&](const std::string& line, int line_no) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw ConfigError("role map line " + std::to_string(line_no) + ": expected actor<TAB>role");
    }
    out.insert_or_assign(line.substr(0, tab), line.substr(tab + 1));
  });
  return out;
}

std::string anonymize_text(std::string_view text, const EntityDictionary& dictionary) {
  const auto entries = sorted_entries(dictionary);
  const std::string lowered = to_lower(text);

  std::array<long, kClasses.size()> counters{};
  for (std::size_t i = 0; i < text.size(); ++i) {
    std::size_t c = 0;
    long n = 0;
    if (placeholder_at(text, i, c, n) > 0) counters[c] = std::max(counters[c], n);
  }

  std::map<std::string, std::string, std::less<>> assigned;
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t c = 0;
    long n = 0;
    if (const auto len = placeholder_at(text, i, c, n); len > 0) {
      out.append(text.substr(i, len));
      i += len;
      continue;
    }
    if (const Entry* e = match_at(lowered, i, entries)) {
      auto it = assigned.find(e->lowered);
      if (it == assigned.end()) {
        const auto slot = class_slot(e->cls);
        const std::string ph =
            "[" + std::string(to_string(e->cls)) + "_" + std::to_string(++counters[slot]) + "]";
        it = assigned.emplace(e->lowered, ph).first;
      }
      out += it->second;
      i += e->lowered.size();
      continue;
    }
    out.push_back(text[i]);
    ++i;
  }
  return out;
}

std::size_t count_entities(std::string_view text, const EntityDictionary& dictionary) {
  const auto entries = sorted_entries(dictionary);
  const std::string lowered = to_lower(text);
  std::size_t count = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t c = 0;
    long n = 0;
    if (const auto len = placeholder_at(text, i, c, n); len > 0) {
      i += len;
      continue;
    }
    if (const Entry* e = match_at(lowered, i, entries)) {
      ++count;
      i += e->lowered.size();
      continue;
    }
    ++i;
  }
  return count;
}

std::string pseudonymize_actor(std::string_view actor_id, std::string_view salt) {
  if (salt.empty()) throw ConfigError("pseudonymization salt must be nonempty");
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!HMAC(EVP_sha256(), salt.data(), static_cast<int>(salt.size()),
            reinterpret_cast<const unsigned char*>(actor_id.data()), actor_id.size(), digest,
            &len)) {
    throw Error("HMAC-SHA256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out = "anon-";
  for (unsigned int i = 0; i < 8; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string role_tag(std::string_view actor_id, const EntityDictionary& dictionary) {
  auto it = dictionary.role_map.find(actor_id);
  return it == dictionary.role_map.end() ? "[ROLE_UNKNOWN]" : "[ROLE_" + it->second + "]";
}

std::string substitute_roles(std::string_view text, const EntityDictionary& dictionary) {
  std::vector<std::string_view> actors;
  for (const auto& [actor, role] : dictionary.role_map) {
    if (!actor.empty()) actors.push_back(actor);
  }
  std::stable_sort(actors.begin(), actors.end(),
                   [](std::string_view a, std::string_view b) { return a.size() > b.size(); });
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const bool at_boundary = i == 0 || !is_word_char(text[i - 1]);
    const std::string_view* hit = nullptr;
    if (at_boundary) {
      for (const auto& a : actors) {
        if (text.compare(i, a.size(), a) != 0) continue;
        const std::size_t end = i + a.size();
        if (end < text.size() && is_word_char(text[end]) && is_word_char(a.back())) continue;
        hit = &a;
        break;
      }
    }
    if (hit != nullptr) {
      out += role_tag(*hit, dictionary);
      i += hit->size();
    } else {
      out.push_back(text[i]);
      ++i;
    }
  }
  return out;
}

void SuppressionPolicy::validate() const {
  if (k < 2) throw ConfigError("k-anonymity minimum must be at least 2");
}

bool requires_suppression(std::uint64_t member_count, const SuppressionPolicy& policy) {
  return member_count > 0 && member_count < policy.k;
}

namespace {

void mask(IndicatorResult& r, const SuppressionPolicy& policy) {
  if (!r.member_count) {
    throw PolicyError("group " + r.scope.to_string() + " has no member count");
  }
  if (!requires_suppression(*r.member_count, policy)) return;
  for (auto& [name, value] : r.values) value = MetricValue::suppressed();
  r.sample_sizes.clear();
  r.suppression = policy.action == SuppressionPolicy::Action::SuppressValue
                      ? Suppression::Suppressed
                      : Suppression::MergeIntoParent;
}

}  // namespace

std::map<std::string, IndicatorResult> enforce_k_anonymity(
    std::map<std::string, IndicatorResult> groups, const SuppressionPolicy& policy) {
  policy.validate();
  for (auto& [group, result] : groups) {
    if (!result.member_count) throw PolicyError("group '" + group + "' has no member count");
    mask(result, policy);
  }
  return groups;
}

std::vector<IndicatorResult> enforce_k_anonymity(std::vector<IndicatorResult> results,
                                                 const SuppressionPolicy& policy) {
  policy.validate();
  for (auto& r : results) mask(r, policy);
  return results;
}

}  // namespace cpf::privacy
