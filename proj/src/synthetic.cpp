#include "cpf/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/discrete_distribution.hpp>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/lognormal_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "cpf/codec.hpp"
#include "cpf/errors.hpp"
#include "cpf/indicators.hpp"
#include "cpf/io.hpp"

namespace cpf::synthetic {
namespace {

using Engine = boost::random::mt19937_64;

constexpr std::array<std::pair<std::string_view, Pattern>, 5> kPatternNames{{
    {"fatigue_drift", Pattern::FatigueDrift},
    {"overload_coupling", Pattern::OverloadCoupling},
    {"patch_gap", Pattern::PatchGap},
    {"channel_leakage", Pattern::ChannelLeakage},
    {"none", Pattern::None},
}};

constexpr std::array<std::string_view, 6> kRemediationNotes = {
    "patched host",         "blocked source ip", "escalated to incident response",
    "isolated endpoint",    "reset credentials", "updated detection rule"};

constexpr std::array<std::string_view, 3> kOfficialTemplates = {
    "Ticket: {p} reported on {a}; security review requested.",
    "Investigating {p} affecting {a} per incident process.",
    "Change request: remediate {p} on {a} before next audit."};

constexpr std::array<std::string_view, 3> kPrivateTemplates = {
    "hey [PERSON_1], seeing {p} again on {a}, can we keep this off the ticket?",
    "dm: {p} on {a}, I'll fix it quietly tonight",
    "between us, {p} hit {a} again, no need to log it"};

constexpr std::array<std::string_view, 5> kChatNoise = {
    "lunch at noon?", "standup moved to 10", "who has the projector today",
    "[PERSON_2] is out on friday", "coffee machine is fixed"};

constexpr std::array<std::string_view, 3> kOfficialNoise = {
    "Routine access review completed.", "Quarterly maintenance window scheduled.",
    "Onboarding checklist updated for new hires."};

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    auto part = trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
    if (!part.empty()) out.push_back(std::move(part));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(const std::string& s, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("scenario key '" + key + "': '" + s + "' is not a number");
  }
}

std::size_t parse_count(const std::string& s, const std::string& key) {
  const double v = parse_number(s, key);
  if (v < 0 || v != std::floor(v)) throw ConfigError("scenario key '" + key + "' must be a count");
  return static_cast<std::size_t>(v);
}

std::string fill(std::string_view tmpl, std::string_view phrase, std::string_view asset) {
  std::string out(tmpl);
  if (auto p = out.find("{p}"); p != std::string::npos) out.replace(p, 3, phrase);
  if (auto a = out.find("{a}"); a != std::string::npos) out.replace(a, 3, asset);
  return out;
}

std::string padded(std::size_t n, int width) {
  std::string s = std::to_string(n);
  if (static_cast<int>(s.size()) < width) s.insert(0, static_cast<std::size_t>(width) - s.size(), '0');
  return s;
}

template <typename Seq>
const auto& pick(Engine& rng, const Seq& seq) {
  boost::random::uniform_int_distribution<std::size_t> d(0, seq.size() - 1);
  return seq[d(rng)];
}

Timestamp uniform_time(Engine& rng, const TimeRange& range) {
  boost::random::uniform_int_distribution<long long> d(0, range.length().count() - 1);
  return range.start + Millis{d(rng)};
}

struct Analyst {
  std::string id;
  std::string team;
};

void generate_alerts(const ScenarioConfig& cfg, Engine& rng, std::vector<AlertRecord>& out) {
  const TimeRange& range = cfg.duration;
  const double span_ms = static_cast<double>(range.length().count());

  std::vector<Analyst> analysts;
  for (const auto& t : cfg.teams) {
    for (std::size_t i = 1; i <= t.size; ++i) {
      analysts.push_back({"analyst-" + t.name + "-" + padded(i, 2), t.name});
    }
  }

  // Poisson arrivals.
  std::vector<Timestamp> arrivals;
  boost::random::exponential_distribution<double> gap(cfg.base_alert_rate);
  double hours = 0;
  while (true) {
    hours += gap(rng);
    const Timestamp t = range.start + Millis{std::llround(hours * 3'600'000.0)};
    if (t >= range.end) break;
    arrivals.push_back(t);
  }

  // Volume percentile rank of each epoch-aligned hour (midrank, in (0, 1)).
  constexpr long long kHour = 3'600'000;
  auto hour_of = [&](Timestamp t) {
    return t.time_since_epoch().count() / kHour - range.start.time_since_epoch().count() / kHour;
  };
  const std::size_t n_hours = static_cast<std::size_t>(hour_of(range.end - Millis{1}) + 1);
  std::vector<std::size_t> volume(n_hours, 0);
  for (auto t : arrivals) ++volume[static_cast<std::size_t>(hour_of(t))];
  std::vector<std::size_t> sorted = volume;
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> rank(n_hours);
  for (std::size_t h = 0; h < n_hours; ++h) {
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), volume[h]);
    const auto hi = std::upper_bound(sorted.begin(), sorted.end(), volume[h]);
    rank[h] = (static_cast<double>(lo - sorted.begin()) + 0.5 * static_cast<double>(hi - lo)) /
              static_cast<double>(n_hours);
  }

  const double s_fatigue = cfg.strength(Pattern::FatigueDrift);
  const double s_overload = cfg.strength(Pattern::OverloadCoupling);
  boost::random::discrete_distribution<int> severity(cfg.severity_mix.begin(),
                                                     cfg.severity_mix.end());
  boost::random::lognormal_distribution<double> closure(std::log(curves::kClosureMedianMinutes),
                                                        curves::kClosureLogSigma);
  boost::random::uniform_real_distribution<double> unit(0.0, 1.0);
  const Timestamp export_cutoff = range.end + curves::kExportLag;

  out.reserve(out.size() + arrivals.size());
  std::size_t serial = 0;
  for (auto t : arrivals) {
    AlertRecord a;
    a.id = cfg.id_prefix + "a-" + padded(++serial, 6);
    a.created_at = t;
    a.severity = static_cast<Severity>(severity(rng));
    const auto& who = pick(rng, analysts);
    a.assigned_to = who.id;
    a.team = who.team;

    double p_miss = curves::kBaseMissProbability;
    if (a.severity == Severity::Critical) {
      p_miss += curves::kOverloadMissGain * s_overload * rank[static_cast<std::size_t>(hour_of(t))];
    }
    const bool missed = unit(rng) < p_miss;
    const double progress = static_cast<double>((t - range.start).count()) / span_ms;
    const double delay_min =
        closure(rng) * (1.0 + curves::kFatigueDelayGain * s_fatigue * progress);
    const double p_ignore =
        curves::kBaseIgnoreProbability + curves::kFatigueIgnoreGain * s_fatigue * progress;
    const bool ignored = unit(rng) < p_ignore;
    const bool as_false_positive = unit(rng) < 0.7;
    const auto& note = pick(rng, kRemediationNotes);

    if (missed) {
      a.status = AlertStatus::Missed;
    } else {
      const Timestamp closed = t + Millis{std::max<long long>(1000, std::llround(delay_min * 60'000.0))};
      if (closed <= export_cutoff) {
        a.status = AlertStatus::Closed;
        a.closed_at = closed;
        a.resolution_notes =
            ignored ? std::string(as_false_positive ? "false positive" : "") : std::string(note);
      } else {
        a.status = AlertStatus::InProgress;
      }
    }
    out.push_back(std::move(a));
  }
}

void generate_vulns(const ScenarioConfig& cfg, Engine& rng, std::vector<VulnRecord>& out) {
  const double s_gap = cfg.strength(Pattern::PatchGap);
  boost::random::poisson_distribution<int> per_asset(cfg.vulns_per_asset);
  boost::random::discrete_distribution<int> severity(cfg.severity_mix.begin(),
                                                     cfg.severity_mix.end());
  boost::random::lognormal_distribution<double> delay(std::log(curves::kPatchMedianHours),
                                                      curves::kPatchLogSigma);
  const Timestamp export_cutoff = cfg.duration.end + curves::kExportLag;

  const std::array<std::pair<Environment, std::size_t>, 3> groups{{
      {Environment::Prod, cfg.prod_assets},
      {Environment::Dev, cfg.dev_assets},
      {Environment::Staging, cfg.staging_assets},
  }};
  std::size_t serial = 0;
  for (const auto& [env, count] : groups) {
    const double factor = env == Environment::Prod ? 1.0 : 1.0 + curves::kPatchGapGain * s_gap;
    for (std::size_t i = 1; i <= count; ++i) {
      const std::string asset = std::string(to_string(env)) + "-host-" + padded(i, 3);
      const int n = cfg.vulns_per_asset > 0 ? per_asset(rng) : 0;
      for (int k = 0; k < n; ++k) {
        VulnRecord v;
        v.id = cfg.id_prefix + "v-" + padded(++serial, 6);
        v.asset_id = asset;
        v.environment = env;
        v.severity = static_cast<Severity>(severity(rng));
        v.detected_at = uniform_time(rng, cfg.duration);
        const Timestamp fixed =
            v.detected_at + Millis{std::llround(delay(rng) * factor * 3'600'000.0)};
        if (fixed <= export_cutoff) v.remediated_at = fixed;
        out.push_back(std::move(v));
      }
    }
  }
}

void generate_comm(const ScenarioConfig& cfg, Engine& rng, std::vector<CommItem>& out) {
  const auto taxonomy = indicators::TopicTaxonomy::builtin();
  std::vector<std::string> keys;
  for (const auto& [k, v] : taxonomy.entries()) keys.push_back(k);
  // Fisher-Yates with a portable distribution.
  for (std::size_t i = keys.size(); i > 1; --i) {
    boost::random::uniform_int_distribution<std::size_t> d(0, i - 1);
    std::swap(keys[i - 1], keys[d(rng)]);
  }
  keys.resize(std::min(cfg.seeded_topics, keys.size()));
  const auto n_leak = static_cast<std::size_t>(
      std::llround(cfg.strength(Pattern::ChannelLeakage) * static_cast<double>(keys.size())));

  std::size_t serial = 0;
  auto add = [&](Visibility vis, std::string text) {
    CommItem c;
    c.id = cfg.id_prefix + "c-" + padded(++serial, 6);
    c.timestamp = uniform_time(rng, cfg.duration);
    c.visibility = vis;
    c.source = vis == Visibility::Official ? CommSource::Ticketing : CommSource::Chat;
    c.text = std::move(text);
    out.push_back(std::move(c));
  };

  boost::random::uniform_int_distribution<int> mentions(1, 3);
  boost::random::uniform_real_distribution<double> unit(0.0, 1.0);
  boost::random::uniform_int_distribution<std::size_t> host(1, std::max<std::size_t>(1, cfg.prod_assets));
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto& triggers = taxonomy.entries().find(keys[i])->second;
    const bool leaked = i < n_leak;
    const int n = mentions(rng);
    for (int m = 0; m < n; ++m) {
      const auto& phrase = pick(rng, triggers);
      const std::string asset = "prod-host-" + padded(host(rng), 3);
      if (leaked) {
        add(Visibility::Private, fill(pick(rng, kPrivateTemplates), phrase, asset));
      } else {
        add(Visibility::Official, fill(pick(rng, kOfficialTemplates), phrase, asset));
      }
    }
    if (!leaked && unit(rng) < curves::kPrivateMentionProbability) {
      const auto& phrase = pick(rng, triggers);
      add(Visibility::Private, fill(pick(rng, kPrivateTemplates), phrase,
                                    "prod-host-" + padded(host(rng), 3)));
    }
  }

  const double days = static_cast<double>(cfg.duration.length().count()) / 86'400'000.0;
  if (cfg.chat_noise_per_day > 0) {
    boost::random::poisson_distribution<int> chat(cfg.chat_noise_per_day * days);
    boost::random::poisson_distribution<int> official(cfg.chat_noise_per_day * days / 2.0);
    const int n_chat = chat(rng);
    for (int i = 0; i < n_chat; ++i) add(Visibility::Private, std::string(pick(rng, kChatNoise)));
    const int n_official = official(rng);
    for (int i = 0; i < n_official; ++i) {
      add(Visibility::Official, std::string(pick(rng, kOfficialNoise)));
    }
  }
}

template <typename Record>
std::string lines_of(const std::vector<Record>& records) {
  std::string out;
  for (const auto& r : records) {
    out += codec::encode(r).dump();
    out += '\n';
  }
  return out;
}

}  // namespace

std::string_view to_string(Pattern p) {
  for (const auto& [name, value] : kPatternNames) {
    if (value == p) return name;
  }
  return "?";
}

std::optional<Pattern> parse_pattern(std::string_view s) {
  for (const auto& [name, value] : kPatternNames) {
    if (name == s) return value;
  }
  return std::nullopt;
}

double ScenarioConfig::strength(Pattern p) const {
  double s = 0.0;
  for (const auto& inj : injections) {
    if (inj.pattern == p) s = std::max(s, inj.strength);
  }
  return s;
}

void ScenarioConfig::validate() const {
  if (!(duration.start < duration.end)) throw ConfigError("scenario duration must be positive");
  if (!(base_alert_rate > 0) || !std::isfinite(base_alert_rate)) {
    throw ConfigError("base_alert_rate must be positive");
  }
  double sum = 0;
  for (double p : severity_mix) {
    if (!(p >= 0)) throw ConfigError("severity_mix entries must be nonnegative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("severity_mix must sum to 1");
  for (const auto& inj : injections) {
    if (!(inj.strength >= 0.0 && inj.strength <= 1.0)) {
      throw ConfigError("injection strength must lie in [0, 1]");
    }
  }
  if (teams.empty()) throw ConfigError("scenario needs at least one team");
  for (const auto& t : teams) {
    if (t.name.empty() || t.size == 0) throw ConfigError("teams need a name and a positive size");
  }
  if (!(vulns_per_asset >= 0) || !(chat_noise_per_day >= 0)) {
    throw ConfigError("rates must be nonnegative");
  }
  if (seeded_topics > indicators::TopicTaxonomy::builtin().entries().size()) {
    throw ConfigError("seeded_topics exceeds the taxonomy size");
  }
}

ScenarioConfig ScenarioConfig::parse(std::string_view text) {
  ScenarioConfig c;
  bool have_start = false, have_end = false;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("scenario line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key == "seed") {
      try {
        std::size_t used = 0;
        c.seed = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
      } catch (const std::exception&) {
        throw ConfigError("scenario seed must be an unsigned integer");
      }
    } else if (key == "start" || key == "end") {
      auto t = parse_rfc3339(value);
      if (!t) throw ConfigError("scenario " + key + " is not an RFC3339 timestamp");
      (key == "start" ? c.duration.start : c.duration.end) = *t;
      (key == "start" ? have_start : have_end) = true;
    } else if (key == "teams") {
      c.teams.clear();
      for (const auto& item : split(value, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ConfigError("teams entries look like name:size");
        c.teams.push_back({trim(item.substr(0, colon)), parse_count(item.substr(colon + 1), key)});
      }
    } else if (key == "base_alert_rate") {
      c.base_alert_rate = parse_number(value, key);
    } else if (key == "severity_mix") {
      const auto parts = split(value, ',');
      if (parts.size() != 4) throw ConfigError("severity_mix needs four probabilities");
      for (std::size_t i = 0; i < 4; ++i) c.severity_mix[i] = parse_number(parts[i], key);
    } else if (key == "inject") {
      for (const auto& item : split(value, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ConfigError("inject entries look like pattern:strength");
        auto p = parse_pattern(trim(item.substr(0, colon)));
        if (!p) throw ConfigError("unknown injection pattern '" + item.substr(0, colon) + "'");
        c.injections.push_back({*p, parse_number(trim(item.substr(colon + 1)), key)});
      }
    } else if (key == "prod_assets") {
      c.prod_assets = parse_count(value, key);
    } else if (key == "dev_assets") {
      c.dev_assets = parse_count(value, key);
    } else if (key == "staging_assets") {
      c.staging_assets = parse_count(value, key);
    } else if (key == "vulns_per_asset") {
      c.vulns_per_asset = parse_number(value, key);
    } else if (key == "seeded_topics") {
      c.seeded_topics = parse_count(value, key);
    } else if (key == "chat_noise_per_day") {
      c.chat_noise_per_day = parse_number(value, key);
    } else if (key == "id_prefix") {
      c.id_prefix = value;
    } else {
      throw ConfigError("scenario line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (!have_start || !have_end) throw ConfigError("scenario needs start and end");
  c.validate();
  return c;
}

LabeledBundle generate(const ScenarioConfig& config) {
  config.validate();
  Engine rng(config.seed);
  LabeledBundle out;
  generate_alerts(config, rng, out.bundle.alerts);
  generate_vulns(config, rng, out.bundle.vulns);
  generate_comm(config, rng, out.bundle.comm);
  out.bundle.provenance.sources.push_back("synthetic:seed=" + std::to_string(config.seed));

  bool any = false;
  for (Pattern p : kAllPatterns) {
    if (p == Pattern::None) continue;
    const double s = config.strength(p);
    out.labels[p] = {s > 0.0, s};
    any = any || s > 0.0;
  }
  out.labels[Pattern::None] = {!any, 0.0};
  return out;
}

nlohmann::json labels_to_json(const std::map<Pattern, PatternLabel>& labels) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [p, l] : labels) {
    j[std::string(to_string(p))] = {{"present", l.present}, {"strength", l.strength}};
  }
  return j;
}

std::string to_jsonl(const std::vector<AlertRecord>& records) { return lines_of(records); }
std::string to_jsonl(const std::vector<VulnRecord>& records) { return lines_of(records); }
std::string to_jsonl(const std::vector<CommItem>& records) { return lines_of(records); }

std::vector<std::filesystem::path> emit(const LabeledBundle& bundle,
                                        const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());
  const std::vector<std::pair<std::string, std::string>> files = {
      {"alerts.jsonl", to_jsonl(bundle.bundle.alerts)},
      {"vulns.jsonl", to_jsonl(bundle.bundle.vulns)},
      {"comm.jsonl", to_jsonl(bundle.bundle.comm)},
      {"labels.json", labels_to_json(bundle.labels).dump(2) + "\n"},
  };
  std::vector<std::filesystem::path> written;
  for (const auto& [name, content] : files) {
    io::write_file_atomic(dir / name, content);
    written.push_back(dir / name);
  }
  return written;
}

}  // namespace cpf::synthetic
