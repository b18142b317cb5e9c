#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "cpf/codec.hpp"
#include "cpf/errors.hpp"
#include "cpf/indicators.hpp"
#include "cpf/ingestion.hpp"
#include "cpf/io.hpp"
#include "cpf/privacy.hpp"
#include "cpf/retrieval.hpp"
#include "cpf/synthetic.hpp"
#include "cpf/validation.hpp"
#include "manifest.hpp"

namespace cpf::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// State shared by every subcommand run.
struct Context {
  std::ostream& out;
  const RunEnv& env;
  Clock clock;
  RunManifest manifest;
  InputReader reader{manifest};
  OutputSet outputs;
  std::optional<fs::path> out_dir;
  bool accepted = false;

  Context(std::ostream& o, const RunEnv& e) : out(o), env(e) {}

  // Called once the flags are valid: from here on a failure still leaves a
  // manifest behind.
  void accept(const json& config) {
    manifest.config_hash = io::sha256_hex(config.dump());
    manifest.started_at = clock.now();
    accepted = true;
  }

  void finish() {
    if (out_dir) {
      auto names = outputs.write(*out_dir);
      names.insert(names.end(), manifest.outputs.begin(), manifest.outputs.end());
      names.push_back("manifest.json");
      manifest.outputs = std::move(names);
      manifest.finished_at = clock.now();
      OutputSet m;
      m.add("manifest.json", manifest.to_json().dump(2) + "\n");
      m.write(*out_dir);
    }
  }
};

// ---- flag helpers --------------------------------------------------------

Timestamp require_time(const std::string& text, const char* flag) {
  auto t = parse_rfc3339(text);
  if (!t) throw UsageError(std::string(flag) + ": '" + text + "' is not an RFC3339 timestamp");
  return *t;
}

TimeRange require_range(const std::string& from, const std::string& to) {
  if (from.empty() || to.empty()) throw UsageError("--from and --to are required");
  TimeRange r{require_time(from, "--from"), require_time(to, "--to")};
  if (!(r.start < r.end)) throw UsageError("--to must be later than --from");
  return r;
}

Millis require_window(const std::string& text) {
  auto d = parse_duration(text);
  if (!d || d->count() <= 0) {
    throw UsageError("--window: '" + text + "' is not a positive duration such as 15m or 1h");
  }
  return *d;
}

fs::path require_out(const std::string& out) {
  if (out.empty()) throw UsageError("--out is required");
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

privacy::SuppressionPolicy require_policy(std::uint64_t k, const std::string& action) {
  privacy::SuppressionPolicy p;
  p.k = k;
  if (action == "suppress") {
    p.action = privacy::SuppressionPolicy::Action::SuppressValue;
  } else if (action == "merge") {
    p.action = privacy::SuppressionPolicy::Action::MergeIntoParent;
  } else {
    throw UsageError("--suppression must be 'suppress' or 'merge'");
  }
  p.validate();
  return p;
}

// ---- input helpers ---------------------------------------------------------

struct DataFlags {
  std::string alerts, vulns, comm;
};

IngestReport load_records(Context& ctx, const std::string& flag, const fs::path& path,
                          RecordKind kind, DatasetBundle& bundle) {
  std::istringstream in(ctx.reader.read(flag, path));
  auto report = parse_records(in, kind, bundle);
  bundle.provenance.sources.push_back(path.string());
  return report;
}

IngestReport load_bundle(Context& ctx, const DataFlags& f, DatasetBundle& bundle) {
  IngestReport total;
  if (!f.alerts.empty()) total.merge(load_records(ctx, "--alerts", f.alerts, RecordKind::Alerts, bundle));
  if (!f.vulns.empty()) total.merge(load_records(ctx, "--vulns", f.vulns, RecordKind::Vulns, bundle));
  if (!f.comm.empty()) total.merge(load_records(ctx, "--comm", f.comm, RecordKind::Comm, bundle));
  bundle.provenance.ingested_at = ctx.clock.now();
  return total;
}

indicators::AssetInventory load_assets(Context& ctx, const std::string& path) {
  indicators::AssetInventory inv;
  std::istringstream in(ctx.reader.read("--assets", path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = json::parse(line, nullptr, false);
    std::optional<Environment> env;
    if (!j.is_discarded() && j.is_object() && j.contains("asset_id") && j["asset_id"].is_string() &&
        j.contains("environment") && j["environment"].is_string()) {
      env = parse_environment(j["environment"].get<std::string>());
    }
    if (!env) {
      throw DataError("--assets line " + std::to_string(n) +
                      ": expected {\"asset_id\": str, \"environment\": \"prod\"|\"dev\"|\"staging\"}");
    }
    inv.insert_or_assign(j["asset_id"].get<std::string>(), *env);
  }
  return inv;
}

indicators::TopicTaxonomy load_taxonomy(Context& ctx, const std::string& path) {
  if (path.empty()) return indicators::TopicTaxonomy::builtin();
  const json j = json::parse(ctx.reader.read("--taxonomy", path), nullptr, false);
  if (j.is_discarded()) throw ConfigError("--taxonomy: malformed JSON");
  try {
    return indicators::TopicTaxonomy::from_json(j);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("--taxonomy: ") + e.what());
  }
}

indicators::ClassifierConfig load_thresholds(Context& ctx, const std::string& path) {
  if (path.empty()) return indicators::ClassifierConfig::defaults();
  return indicators::ClassifierConfig::parse(ctx.reader.read("--thresholds", path));
}

std::string jsonl(const std::vector<json>& lines) {
  std::string out;
  for (const auto& j : lines) {
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string sample_text(const IndicatorResult& r) {
  std::string s;
  for (const auto& [k, v] : r.sample_sizes) {
    if (!s.empty()) s += ", ";
    s += k + "=" + std::to_string(v);
  }
  return s.empty() ? "-" : s;
}

std::uint64_t count_members(std::span<const AlertRecord> alerts,
                            const std::function<bool(const AlertRecord&)>& in_group) {
  std::set<std::string> ids;
  for (const auto& a : alerts) {
    if (a.assigned_to && !a.assigned_to->empty() && in_group(a)) ids.insert(*a.assigned_to);
  }
  return ids.size();
}

bool alert_based(Indicator i) {
  return i == Indicator::ComplianceFatigue || i == Indicator::AlertOverload;
}

void save_index(const retrieval::DocumentIndex& index, const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory for " + path.string());
  index.save(path);
}

// ---- compute ---------------------------------------------------------------

struct ComputeFlags {
  DataFlags data;
  std::string from, to, window = "1h", scope = "org", indicator = "all";
  std::uint64_t k_min = 10;
  bool consent = false;
  bool open_only = false;
  std::string assets, taxonomy, keywords, thresholds, suppression = "suppress";
  std::string out, index_out;
};

struct ComputeSettings {
  TimeRange range;
  Millis window;
  std::vector<Indicator> indicators;
  indicators::IgnoreMarkers ignore;
  indicators::TopicTaxonomy taxonomy = indicators::TopicTaxonomy::builtin();
  std::vector<std::string> keywords;
  indicators::RiskGapOptions risk;
};

IndicatorResult compute_one(Indicator ind, const DatasetBundle& b, std::span<const AlertRecord> alerts,
                            const Scope& filter, const ComputeSettings& s) {
  switch (ind) {
    case Indicator::ComplianceFatigue:
      return indicators::compute_compliance_fatigue(alerts, s.range, filter, s.ignore);
    case Indicator::AlertOverload:
      return indicators::compute_alert_overload(alerts, s.range, s.window, filter);
    case Indicator::RiskPerceptionGap:
      return indicators::compute_risk_perception_gap(b.vulns, s.range, s.risk);
    case Indicator::AgainstGravity:
      return indicators::compute_uctr(b.comm, s.taxonomy, s.keywords, s.range);
  }
  throw Error("unhandled indicator");
}

std::vector<IndicatorResult> compute_group(const DatasetBundle& b, std::span<const AlertRecord> alerts,
                                           const Scope& filter, const Scope& reported,
                                           std::uint64_t members, bool alerts_only,
                                           const ComputeSettings& s) {
  std::vector<IndicatorResult> out;
  for (Indicator ind : s.indicators) {
    if (alerts_only && !alert_based(ind)) continue;
    IndicatorResult r = compute_one(ind, b, alerts, filter, s);
    r.scope = reported;
    r.member_count = members;
    out.push_back(std::move(r));
  }
  return out;
}

std::string compute_summary(const std::vector<IndicatorResult>& results, const ComputeSettings& s,
                            const privacy::SuppressionPolicy& policy, std::size_t rejected) {
  std::ostringstream o;
  o << "indicator summary\n";
  o << "range    " << format_rfc3339(s.range.start) << " .. " << format_rfc3339(s.range.end) << "\n";
  o << "window   " << format_duration(s.window) << "\n";
  o << "k-min    " << policy.k << "\n";
  if (rejected > 0) o << "rejected input lines: " << rejected << "\n";
  o << "confidence: shown as the sample sizes behind each value plus suppression status\n\n";
  o << pad("indicator", 21) << pad("scope", 18) << pad("members", 9) << pad("metric", 7)
    << pad("value", 14) << pad("suppression", 19) << "samples\n";
  std::size_t suppressed = 0;
  for (const auto& r : results) {
    if (r.suppression != Suppression::None) ++suppressed;
    for (const auto& [name, value] : r.values) {
      o << pad(std::string(to_string(r.indicator)), 21) << pad(r.scope.to_string(), 18)
        << pad(r.member_count ? std::to_string(*r.member_count) : "-", 9) << pad(name, 7)
        << pad(value.to_string(), 14) << pad(std::string(to_string(r.suppression)), 19)
        << sample_text(r) << "\n";
    }
  }
  if (suppressed > 0) {
    o << "\n" << suppressed << " result(s) withheld: group smaller than " << policy.k
      << " individuals\n";
  }
  return o.str();
}

std::string snapshot_text(const IndicatorResult& r) {
  std::string name(to_string(r.indicator));
  std::replace(name.begin(), name.end(), '_', ' ');
  std::string text = name + " " + r.scope.to_string();
  for (const auto& [metric, value] : r.values) text += " " + metric + " " + value.to_string();
  return text;
}

void cmd_compute(Context& ctx, const ComputeFlags& f) {
  ComputeSettings s;
  s.range = require_range(f.from, f.to);
  s.window = require_window(f.window);
  std::optional<Scope> scope;
  const bool all_teams = f.scope == "teams";
  if (!all_teams) {
    scope = Scope::parse(f.scope);
    if (!scope) throw UsageError("--scope must be org, teams, team:<id> or analyst:<id>");
  }
  if (scope && scope->kind == Scope::Kind::Analyst && !f.consent) {
    throw UsageError("analyst scope requires --individual-consent");
  }
  const bool alerts_only = all_teams || scope->kind != Scope::Kind::Org;
  if (f.indicator == "all") {
    s.indicators.assign(kAllIndicators.begin(), kAllIndicators.end());
  } else {
    auto ind = parse_indicator(f.indicator);
    if (!ind) throw UsageError("unknown indicator '" + f.indicator + "'");
    if (alerts_only && !alert_based(*ind)) {
      throw UsageError("indicator " + f.indicator + " is only available at org scope");
    }
    s.indicators = {*ind};
  }
  const auto policy = require_policy(f.k_min, f.suppression);
  s.keywords = split_list(f.keywords);
  s.risk.open_only = f.open_only;
  ctx.out_dir = require_out(f.out);
  ctx.accept({{"command", "compute"},
              {"from", f.from},
              {"to", f.to},
              {"window", f.window},
              {"scope", f.scope},
              {"indicator", f.indicator},
              {"k_min", f.k_min},
              {"individual_consent", f.consent},
              {"open_only", f.open_only},
              {"keywords", s.keywords},
              {"suppression", f.suppression}});

  DatasetBundle bundle;
  const auto ingest = load_bundle(ctx, f.data, bundle);
  indicators::AssetInventory inventory;
  if (!f.assets.empty()) {
    inventory = load_assets(ctx, f.assets);
    s.risk.inventory = &inventory;
  }
  s.taxonomy = load_taxonomy(ctx, f.taxonomy);
  s.ignore = load_thresholds(ctx, f.thresholds).ignore;

  const std::span<const AlertRecord> alerts = bundle.alerts;
  const auto org_members = count_members(alerts, [](const AlertRecord&) { return true; });
  std::vector<IndicatorResult> results;
  bool bypass_k = false;
  std::vector<std::string> teams;
  if (all_teams) {
    std::set<std::string> names;
    for (const auto& a : alerts) {
      if (a.team && !a.team->empty()) names.insert(*a.team);
    }
    teams.assign(names.begin(), names.end());
  } else if (scope->kind == Scope::Kind::Team) {
    teams = {scope->id};
  }

  if (scope && scope->kind == Scope::Kind::Org) {
    results = compute_group(bundle, alerts, *scope, *scope, org_members, false, s);
  } else if (scope && scope->kind == Scope::Kind::Analyst) {
    results = compute_group(bundle, alerts, *scope, *scope, 1, true, s);
    bypass_k = true;
  } else {
    for (const auto& t : teams) {
      const auto members =
          count_members(alerts, [&](const AlertRecord& a) { return a.team && *a.team == t; });
      auto group = compute_group(bundle, alerts, Scope::team(t), Scope::team(t), members, true, s);
      results.insert(results.end(), group.begin(), group.end());
    }
  }

  if (!bypass_k) results = privacy::enforce_k_anonymity(std::move(results), policy);

  // Merge-into-parent: fold the flagged teams into one pooled group (several
  // teams) or into the organization (a single team) and recompute there.
  if (policy.action == privacy::SuppressionPolicy::Action::MergeIntoParent && !bypass_k) {
    std::set<std::string> merged;
    for (const auto& r : results) {
      if (r.suppression == Suppression::MergeIntoParent) merged.insert(r.scope.id);
    }
    if (!merged.empty()) {
      std::vector<IndicatorResult> parent;
      if (all_teams) {
        std::vector<AlertRecord> pooled;
        for (const auto& a : bundle.alerts) {
          if (a.team && merged.count(*a.team) != 0) pooled.push_back(a);
        }
        const auto members = count_members(pooled, [](const AlertRecord&) { return true; });
        parent = compute_group(bundle, pooled, Scope::org(), Scope::team("_merged"), members, true, s);
      } else {
        parent = compute_group(bundle, alerts, Scope::org(), Scope::org(), org_members, true, s);
      }
      privacy::SuppressionPolicy strict = policy;
      strict.action = privacy::SuppressionPolicy::Action::SuppressValue;
      parent = privacy::enforce_k_anonymity(std::move(parent), strict);
      results.insert(results.end(), parent.begin(), parent.end());
    }
  }

  std::vector<json> lines;
  for (const auto& r : results) lines.push_back(codec::encode(r));
  ctx.outputs.add("results.jsonl", jsonl(lines));
  ctx.outputs.add("summary.txt", compute_summary(results, s, policy, ingest.rejected.size()));

  if (!f.index_out.empty()) {
    retrieval::DocumentIndex index;
    for (const auto& r : results) {
      const std::string id = std::string(to_string(r.indicator)) + "@" + r.scope.to_string() + "@" +
                             format_rfc3339(r.range.start);
      index.add({id, snapshot_text(r), r.range.end,
                 {std::string(to_string(r.indicator)), r.scope.to_string(), "metric"}});
    }
    save_index(index, f.index_out);
    ctx.manifest.outputs.push_back(f.index_out);
  }
  ctx.finish();
}

// ---- report ----------------------------------------------------------------

struct ReportFlags {
  std::string results, thresholds, out, suppression = "suppress";
  std::uint64_t k_min = 10;
  bool consent = false;
};

void cmd_report(Context& ctx, const ReportFlags& f) {
  if (f.results.empty()) throw UsageError("--results is required");
  const auto policy = require_policy(f.k_min, f.suppression);
  ctx.out_dir = require_out(f.out);
  ctx.accept({{"command", "report"},
              {"k_min", f.k_min},
              {"individual_consent", f.consent},
              {"suppression", f.suppression}});

  const std::string text = ctx.reader.read("--results", f.results);
  const auto config = load_thresholds(ctx, f.thresholds);
  std::vector<IndicatorResult> results;
  std::size_t withheld_individual = 0;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw DataError("--results line " + std::to_string(n) + ": malformed JSON");
    auto r = codec::decode_indicator_result(j);
    if (r.scope.kind == Scope::Kind::Analyst && !f.consent) {
      ++withheld_individual;
      continue;
    }
    results.push_back(std::move(r));
  }
  // Analyst-scoped results were emitted under consent; everything else is
  // re-checked against the policy.
  std::vector<IndicatorResult> checked;
  for (auto& r : results) {
    if (r.scope.kind == Scope::Kind::Analyst) {
      checked.push_back(std::move(r));
    } else {
      auto one = privacy::enforce_k_anonymity(std::vector<IndicatorResult>{std::move(r)}, policy);
      checked.push_back(std::move(one.front()));
    }
  }
  const auto flags = indicators::classify_risk(checked, config);

  std::vector<json> lines;
  std::ostringstream o;
  o << "risk report\n";
  o << "k-min    " << policy.k << "\n";
  if (withheld_individual > 0) {
    o << withheld_individual << " analyst-scoped result(s) omitted (no --individual-consent)\n";
  }
  o << "\n" << pad("indicator", 21) << pad("scope", 18) << pad("members", 9) << pad("flagged", 9)
    << "rationale\n";
  for (std::size_t k = 0; k < flags.size(); ++k) {
    const auto& fl = flags[k];
    const auto members = checked[k].member_count;
    lines.push_back({{"indicator", to_string(fl.indicator)},
                     {"scope", fl.scope.to_string()},
                     {"member_count", members ? json(*members) : json(nullptr)},
                     {"flagged", fl.flagged},
                     {"triggered_metrics", fl.triggered_metrics},
                     {"rationale", fl.rationale}});
    o << pad(std::string(to_string(fl.indicator)), 21) << pad(fl.scope.to_string(), 18)
      << pad(members ? std::to_string(*members) : "-", 9) << pad(fl.flagged ? "yes" : "no", 9)
      << fl.rationale << "\n";
  }
  ctx.outputs.add("flags.jsonl", jsonl(lines));
  ctx.outputs.add("report.txt", o.str());
  ctx.finish();
}

// ---- synth -----------------------------------------------------------------

struct SynthFlags {
  std::string scenario, out;
  std::optional<std::uint64_t> seed;
};

void cmd_synth(Context& ctx, const SynthFlags& f) {
  if (f.scenario.empty()) throw UsageError("--scenario is required");
  ctx.out_dir = require_out(f.out);
  json config = {{"command", "synth"}};
  if (f.seed) config["seed"] = *f.seed;
  ctx.accept(config);

  auto cfg = synthetic::ScenarioConfig::parse(ctx.reader.read("--scenario", f.scenario));
  if (f.seed) cfg.seed = *f.seed;
  const auto labeled = synthetic::generate(cfg);
  ctx.outputs.add("alerts.jsonl", synthetic::to_jsonl(labeled.bundle.alerts));
  ctx.outputs.add("vulns.jsonl", synthetic::to_jsonl(labeled.bundle.vulns));
  ctx.outputs.add("comm.jsonl", synthetic::to_jsonl(labeled.bundle.comm));
  ctx.outputs.add("labels.json", synthetic::labels_to_json(labeled.labels).dump(2) + "\n");
  ctx.finish();
}

// ---- ingest ----------------------------------------------------------------

struct IngestFlags {
  DataFlags data;
  std::string entities, roles, out, index_out;
};

void cmd_ingest(Context& ctx, const IngestFlags& f) {
  if (f.data.alerts.empty() && f.data.vulns.empty() && f.data.comm.empty()) {
    throw UsageError("ingest needs at least one of --alerts, --vulns, --comm");
  }
  ctx.out_dir = require_out(f.out);
  const bool pseudonymize = ctx.env.salt.has_value();
  if (pseudonymize && ctx.env.salt->empty()) throw ConfigError("CPF_SALT is set but empty");
  ctx.accept({{"command", "ingest"},
              {"pseudonymize", pseudonymize},
              {"entities", !f.entities.empty()},
              {"roles", !f.roles.empty()}});

  privacy::EntityDictionary dict;
  if (!f.entities.empty()) {
    dict.entries = privacy::EntityDictionary::parse_entities(ctx.reader.read("--entities", f.entities));
  }
  if (!f.roles.empty()) {
    dict.role_map = privacy::EntityDictionary::parse_roles(ctx.reader.read("--roles", f.roles));
  }

  json files = json::object();
  auto ingest_one = [&](const std::string& flag, const std::string& path, RecordKind kind,
                        DatasetBundle& bundle) {
    if (path.empty()) return;
    const auto report = load_records(ctx, flag, path, kind, bundle);
    json rejected = json::array();
    for (const auto& r : report.rejected) rejected.push_back({{"line", r.line}, {"reason", r.reason}});
    files[std::string(to_string(kind))] = {{"path", path},
                                           {"total_lines", report.total_lines},
                                           {"accepted", report.accepted_total()},
                                           {"rejected", rejected}};
  };
  DatasetBundle bundle;
  ingest_one("--alerts", f.data.alerts, RecordKind::Alerts, bundle);
  ingest_one("--vulns", f.data.vulns, RecordKind::Vulns, bundle);
  ingest_one("--comm", f.data.comm, RecordKind::Comm, bundle);

  if (pseudonymize) {
    for (auto& a : bundle.alerts) {
      if (a.assigned_to) a.assigned_to = privacy::pseudonymize_actor(*a.assigned_to, *ctx.env.salt);
    }
  }
  for (auto& c : bundle.comm) {
    if (!dict.role_map.empty()) c.text = privacy::substitute_roles(c.text, dict);
    if (!dict.entries.empty()) c.text = privacy::anonymize_text(c.text, dict);
  }

  if (!f.data.alerts.empty()) ctx.outputs.add("alerts.jsonl", synthetic::to_jsonl(bundle.alerts));
  if (!f.data.vulns.empty()) ctx.outputs.add("vulns.jsonl", synthetic::to_jsonl(bundle.vulns));
  if (!f.data.comm.empty()) ctx.outputs.add("comm.jsonl", synthetic::to_jsonl(bundle.comm));
  const json report = {{"files", files},
                       {"pseudonymized", pseudonymize},
                       {"anonymized_text", !dict.entries.empty()},
                       {"role_tags", !dict.role_map.empty()}};
  ctx.outputs.add("ingest_report.json", report.dump(2) + "\n");

  if (!f.index_out.empty()) {
    retrieval::DocumentIndex index;
    for (const auto& c : bundle.comm) {
      index.add({c.id, c.text, c.timestamp,
                 {std::string(to_string(c.visibility)), std::string(to_string(c.source))}});
    }
    save_index(index, f.index_out);
    ctx.manifest.outputs.push_back(f.index_out);
  }
  ctx.finish();
}

// ---- validate --------------------------------------------------------------

struct ValidateFlags {
  DataFlags data;
  std::string data_dir, periods, window = "1h", taxonomy, keywords, assets, out;
  bool open_only = false;
  std::uint64_t k_min = 10;
};

void cmd_validate(Context& ctx, ValidateFlags f) {
  if (f.periods.empty()) throw UsageError("--periods is required");
  const Millis window = require_window(f.window);
  privacy::SuppressionPolicy policy = require_policy(f.k_min, "suppress");
  if (!f.data_dir.empty()) {
    const fs::path dir = f.data_dir;
    if (!fs::is_directory(dir)) throw UsageError("--data: " + f.data_dir + " is not a directory");
    auto pick = [&](std::string& slot, const char* name) {
      if (slot.empty() && fs::exists(dir / name)) slot = (dir / name).string();
    };
    pick(f.data.alerts, "alerts.jsonl");
    pick(f.data.vulns, "vulns.jsonl");
    pick(f.data.comm, "comm.jsonl");
  }
  if (f.data.alerts.empty() && f.data.vulns.empty() && f.data.comm.empty()) {
    throw UsageError("validate needs --data or at least one of --alerts, --vulns, --comm");
  }
  ctx.out_dir = require_out(f.out);
  validation::FeatureParams params;
  params.window = window;
  params.keywords = split_list(f.keywords);
  params.risk.open_only = f.open_only;
  ctx.accept({{"command", "validate"},
              {"window", f.window},
              {"keywords", params.keywords},
              {"open_only", f.open_only},
              {"k_min", f.k_min}});

  const auto periods = validation::parse_periods(ctx.reader.read("--periods", f.periods));
  DatasetBundle bundle;
  load_bundle(ctx, f.data, bundle);
  indicators::AssetInventory inventory;
  if (!f.assets.empty()) {
    inventory = load_assets(ctx, f.assets);
    params.risk.inventory = &inventory;
  }
  params.taxonomy = load_taxonomy(ctx, f.taxonomy);

  const auto table = validation::build_feature_table(bundle, periods, params);
  const auto report = validation::run_retrospective(table.rows);

  json doc = validation::to_json(report);
  json dropped = json::array();
  for (const auto& d : table.dropped) {
    dropped.push_back({{"period", codec::encode(d.period)}, {"scope", d.scope}, {"reason", d.reason}});
  }
  doc["dropped_periods"] = dropped;
  ctx.outputs.add("retro_report.json", doc.dump(2) + "\n");

  // Per-period features are group metrics too: small groups are masked.
  std::vector<json> lines;
  for (const auto& row : table.rows) {
    const auto scope = Scope::parse(row.scope);
    const auto members = count_members(bundle.alerts, [&](const AlertRecord& a) {
      return scope->kind == Scope::Kind::Org || (a.team && *a.team == scope->id);
    });
    json j = codec::encode(row);
    j["member_count"] = members;
    if (privacy::requires_suppression(members, policy)) {
      for (auto& [name, value] : j["features"].items()) value = "suppressed";
      j["suppression"] = "suppressed";
    } else {
      j["suppression"] = "none";
    }
    lines.push_back(std::move(j));
  }
  ctx.outputs.add("feature_table.jsonl", jsonl(lines));
  ctx.finish();
}

// ---- query -----------------------------------------------------------------

struct QueryFlags {
  std::vector<std::string> index;
  std::vector<std::string> tags;
  std::string text, from, to, out;
  std::size_t top_k = 5;
  std::size_t budget = 4000;
};

void cmd_query(Context& ctx, const QueryFlags& f) {
  if (f.index.empty()) throw UsageError("--index is required");
  if (f.text.empty()) throw UsageError("--text is required");
  if (f.top_k == 0) throw UsageError("--top-k must be at least 1");
  if (f.budget < f.text.size()) throw UsageError("--budget is smaller than the query text");
  retrieval::QueryOptions opts;
  opts.top_k = f.top_k;
  opts.filter.required_tags.insert(f.tags.begin(), f.tags.end());
  if (!f.from.empty()) opts.filter.from = require_time(f.from, "--from");
  if (!f.to.empty()) opts.filter.to = require_time(f.to, "--to");
  if (!f.out.empty()) ctx.out_dir = fs::path(f.out);
  ctx.accept({{"command", "query"},
              {"text", f.text},
              {"top_k", f.top_k},
              {"budget", f.budget},
              {"tags", f.tags},
              {"from", f.from},
              {"to", f.to}});

  retrieval::DocumentIndex index;
  for (const auto& path : f.index) {
    index.merge(retrieval::DocumentIndex::deserialize(ctx.reader.read("--index", path)));
  }
  auto hits = index.query(f.text, opts);
  const auto bundle = retrieval::assemble_context(f.text, std::move(hits), f.budget);
  json doc = retrieval::to_json(bundle);
  doc["top_k"] = f.top_k;
  doc["budget"] = f.budget;
  const std::string rendered = doc.dump(2) + "\n";
  ctx.out << rendered;
  if (ctx.out_dir) ctx.outputs.add("query_results.json", rendered);
  ctx.finish();
}

// ---- dispatch --------------------------------------------------------------

int error_record(std::ostream& err, const char* kind, const std::string& message, int code) {
  err << json{{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}}.dump() << "\n";
  return code;
}

void add_data_flags(CLI::App* sub, DataFlags& d) {
  sub->add_option("--alerts", d.alerts, "Alert export (JSON lines)");
  sub->add_option("--vulns", d.vulns, "Vulnerability export (JSON lines)");
  sub->add_option("--comm", d.comm, "Communication export (JSON lines)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const RunEnv& env) {
  CLI::App app{"Human-factor security risk metrics from SOC telemetry", "cpf"};
  app.require_subcommand(1);
  bool frozen = false;
  app.add_flag("--frozen-clock", frozen, "Use the Unix epoch for manifest timestamps");

  ComputeFlags compute;
  auto* c = app.add_subcommand("compute", "Compute indicators for a time range and scope");
  add_data_flags(c, compute.data);
  c->add_option("--from", compute.from, "Range start (RFC3339, inclusive)");
  c->add_option("--to", compute.to, "Range end (RFC3339, exclusive)");
  c->add_option("--window", compute.window, "Bin width for alert overload")->capture_default_str();
  c->add_option("--scope", compute.scope, "org | teams | team:<id> | analyst:<id>")->capture_default_str();
  c->add_option("--indicator", compute.indicator, "all or one indicator name")->capture_default_str();
  c->add_option("--k-min", compute.k_min, "Minimum group size for reporting")->capture_default_str();
  c->add_flag("--individual-consent", compute.consent, "Allow analyst-scoped output");
  c->add_flag("--open-only", compute.open_only, "Density counts only vulns open at range end");
  c->add_option("--assets", compute.assets, "Asset inventory (JSON lines)");
  c->add_option("--taxonomy", compute.taxonomy, "Topic taxonomy (JSON)");
  c->add_option("--keywords", compute.keywords, "Comma-separated security keywords");
  c->add_option("--thresholds", compute.thresholds, "Classifier configuration (ignore markers)");
  c->add_option("--suppression", compute.suppression, "suppress | merge")->capture_default_str();
  c->add_option("--out", compute.out, "Output directory");
  c->add_option("--index-out", compute.index_out, "Write metric snapshots to an index file");
  c->add_flag("--frozen-clock", frozen, "Use the Unix epoch for manifest timestamps");

  ReportFlags report;
  auto* r = app.add_subcommand("report", "Classify computed results against thresholds");
  r->add_option("--results", report.results, "results.jsonl from compute");
  r->add_option("--thresholds", report.thresholds, "Classifier configuration");
  r->add_option("--k-min", report.k_min, "Minimum group size for reporting")->capture_default_str();
  r->add_flag("--individual-consent", report.consent, "Include analyst-scoped results");
  r->add_option("--suppression", report.suppression, "suppress | merge")->capture_default_str();
  r->add_option("--out", report.out, "Output directory");
  r->add_flag("--frozen-clock", frozen, "Use the Unix epoch for manifest timestamps");

  SynthFlags synth;
  std::uint64_t seed = 0;
  auto* s = app.add_subcommand("synth", "Generate labeled synthetic telemetry");
  auto* seed_opt = s->add_option("--seed", seed, "Override the scenario seed");
  s->add_option("--scenario", synth.scenario, "Scenario file");
  s->add_option("--out", synth.out, "Output directory");
  s->add_flag("--frozen-clock", frozen, "Use the Unix epoch for manifest timestamps");

  IngestFlags ingest;
  auto* i = app.add_subcommand("ingest", "Validate, normalize and anonymize exports");
  add_data_flags(i, ingest.data);
  i->add_option("--entities", ingest.entities, "Entity dictionary (raw<TAB>CLASS)");
  i->add_option("--roles", ingest.roles, "Role map (actor_id<TAB>role)");
  i->add_option("--out", ingest.out, "Output directory");
  i->add_option("--index-out", ingest.index_out, "Index communication snippets into a file");
  i->add_flag("--frozen-clock", frozen, "Use the Unix epoch for manifest timestamps");

  ValidateFlags validate;
  auto* v = app.add_subcommand("validate", "Retrospective case-control validation");
  add_data_flags(v, validate.data);
  v->add_option("--data", validate.data_dir, "Directory holding alerts/vulns/comm.jsonl");
  v->add_option("--periods", validate.periods, "Labeled periods (JSON lines)");
  v->add_option("--window", validate.window, "Bin width for alert overload")->capture_default_str();
  v->add_option("--taxonomy", validate.taxonomy, "Topic taxonomy (JSON)");
  v->add_option("--keywords", validate.keywords, "Comma-separated security keywords");
  v->add_option("--assets", validate.assets, "Asset inventory (JSON lines)");
  v->add_flag("--open-only", validate.open_only, "Density counts only vulns open at range end");
  v->add_option("--k-min", validate.k_min, "Minimum group size for reporting")->capture_default_str();
  v->add_option("--out", validate.out, "Output directory");
  v->add_flag("--frozen-clock", frozen, "Use the Unix epoch for manifest timestamps");

  QueryFlags query;
  auto* q = app.add_subcommand("query", "Hybrid retrieval over index files");
  q->add_option("--index", query.index, "Index file (repeatable)");
  q->add_option("--text", query.text, "Query text");
  q->add_option("--top-k", query.top_k, "Number of hits")->capture_default_str();
  q->add_option("--budget", query.budget, "Context length budget in characters")->capture_default_str();
  q->add_option("--tag", query.tags, "Required tag (repeatable)");
  q->add_option("--from", query.from, "Only documents at or after this time");
  q->add_option("--to", query.to, "Only documents before this time");
  q->add_option("--out", query.out, "Also write results and a manifest here");
  q->add_flag("--frozen-clock", frozen, "Use the Unix epoch for manifest timestamps");

  std::vector<std::string> argv_store = {"cpf"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    return error_record(err, "usage", e.what(), 1);
  }

  Context ctx(out, env);
  ctx.clock.frozen = frozen;
  ctx.manifest.command_line = argv_store;
  try {
    if (c->parsed()) {
      cmd_compute(ctx, compute);
    } else if (r->parsed()) {
      cmd_report(ctx, report);
    } else if (s->parsed()) {
      if (seed_opt->count() > 0) synth.seed = seed;
      cmd_synth(ctx, synth);
    } else if (i->parsed()) {
      cmd_ingest(ctx, ingest);
    } else if (v->parsed()) {
      cmd_validate(ctx, validate);
    } else if (q->parsed()) {
      cmd_query(ctx, query);
    }
    return 0;
  } catch (const std::exception& e) {
    const char* kind = "internal";
    int code = 3;
    if (const auto* ce = dynamic_cast<const Error*>(&e)) {
      kind = ce->kind();
      if (dynamic_cast<const UsageError*>(&e)) {
        code = 1;
      } else if (dynamic_cast<const DataError*>(&e)) {
        code = 2;
      }
    }
    if (ctx.accepted && ctx.out_dir) {
      ctx.manifest.finished_at = ctx.clock.now();
      ctx.manifest.error = json{{"kind", kind}, {"message", e.what()}, {"exit_code", code}};
      try {
        OutputSet m;
        m.add("manifest.json", ctx.manifest.to_json().dump(2) + "\n");
        m.write(*ctx.out_dir);
      } catch (const std::exception&) {
        // The error record below still reports the original failure.
      }
    }
    return error_record(err, kind, e.what(), code);
  }
}

}  // namespace cpf::cli
