#pragma once

// Seeded, labeled synthetic telemetry with injectable human-factor patterns.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cpf/ingestion.hpp"

namespace cpf::synthetic {

enum class Pattern { FatigueDrift, OverloadCoupling, PatchGap, ChannelLeakage, None };
inline constexpr std::array<Pattern, 5> kAllPatterns = {
    Pattern::FatigueDrift, Pattern::OverloadCoupling, Pattern::PatchGap,
    Pattern::ChannelLeakage, Pattern::None};

std::string_view to_string(Pattern p);
std::optional<Pattern> parse_pattern(std::string_view s);

/// Response curves of the generator. Every injection effect is defined here.
namespace curves {
/// Log-normal alert closure delay (median, log-sd).
inline constexpr double kClosureMedianMinutes = 45.0;
inline constexpr double kClosureLogSigma = 0.6;
/// fatigue_drift: delay factor ramps linearly from 1 to 1 + gain*s over the run.
inline constexpr double kFatigueDelayGain = 2.0;
/// fatigue_drift: ignore probability ramps from base to base + gain*s.
inline constexpr double kBaseIgnoreProbability = 0.1;
inline constexpr double kFatigueIgnoreGain = 0.6;
/// Miss probability for every alert, and the overload_coupling increment for
/// critical alerts: + gain * s * (volume percentile rank of the alert's hour).
inline constexpr double kBaseMissProbability = 0.03;
inline constexpr double kOverloadMissGain = 0.6;
/// Log-normal remediation delay (median hours, log-sd); patch_gap multiplies
/// non-prod delays by 1 + gain*s.
inline constexpr double kPatchMedianHours = 72.0;
inline constexpr double kPatchLogSigma = 0.5;
inline constexpr double kPatchGapGain = 4.0;
/// Chance that a tracked topic is also mentioned once in a private channel.
inline constexpr double kPrivateMentionProbability = 0.05;
/// Closures and remediations later than end + lag are not in the export.
inline constexpr Millis kExportLag = std::chrono::hours(24 * 30);
}  // namespace curves

struct TeamSpec {
  std::string name;
  std::size_t size = 0;
};

struct Injection {
  Pattern pattern = Pattern::None;
  double strength = 0.0;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  TimeRange duration;
  std::vector<TeamSpec> teams{{"blue", 12}};
  /// Mean alerts per hour.
  double base_alert_rate = 20.0;
  /// Probabilities for low, medium, high, critical.
  std::array<double, 4> severity_mix{0.4, 0.3, 0.2, 0.1};
  std::vector<Injection> injections;

  std::size_t prod_assets = 40;
  std::size_t dev_assets = 20;
  std::size_t staging_assets = 20;
  /// Expected vulns per asset over the whole run.
  double vulns_per_asset = 1.5;
  /// Taxonomy topics discussed during the run.
  std::size_t seeded_topics = 8;
  double chat_noise_per_day = 20.0;
  /// Prepended to every record id so scenarios can be merged.
  std::string id_prefix;

  /// Strength of a pattern (max over injections), 0 when absent.
  double strength(Pattern p) const;
  /// Throws ConfigError for infeasible settings.
  void validate() const;

  /// Key-value text ("key = value", '#' comments). Keys: seed, start, end,
  /// teams ("name:size, ..."), base_alert_rate, severity_mix ("l, m, h, c"),
  /// inject ("pattern:strength", repeatable), prod_assets, dev_assets,
  /// staging_assets, vulns_per_asset, seeded_topics, chat_noise_per_day,
  /// id_prefix. Throws ConfigError.
  static ScenarioConfig parse(std::string_view text);
};

struct PatternLabel {
  bool present = false;
  double strength = 0.0;
  friend bool operator==(const PatternLabel&, const PatternLabel&) = default;
};

struct LabeledBundle {
  DatasetBundle bundle;
  /// Covers every Pattern value; "none" is present iff no other pattern is.
  std::map<Pattern, PatternLabel> labels;
};

/// Deterministic in the config (including the seed).
LabeledBundle generate(const ScenarioConfig& config);

nlohmann::json labels_to_json(const std::map<Pattern, PatternLabel>& labels);

/// Writes alerts.jsonl, vulns.jsonl, comm.jsonl and labels.json into `dir`
/// (created if missing). Returns the written paths. Throws IoError.
std::vector<std::filesystem::path> emit(const LabeledBundle& bundle,
                                        const std::filesystem::path& dir);

/// Line-delimited serialization shared by emit and the CLI.
std::string to_jsonl(const std::vector<AlertRecord>& records);
std::string to_jsonl(const std::vector<VulnRecord>& records);
std::string to_jsonl(const std::vector<CommItem>& records);

}  // namespace cpf::synthetic
