#include "fixtures.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cpf/indicators.hpp"

namespace fixtures {

cpf::Timestamp at(const std::string& rfc3339) {
  auto t = cpf::parse_rfc3339(rfc3339);
  if (!t) throw std::invalid_argument("bad fixture timestamp " + rfc3339);
  return *t;
}

cpf::TimeRange range(const std::string& from, const std::string& to) { return {at(from), at(to)}; }

cpf::DatasetBundle random_bundle(std::mt19937_64& rng, const cpf::TimeRange& r, std::size_t n_alerts,
                                 std::size_t n_vulns, std::size_t n_comm) {
  using cpf::Millis;
  const long long span = r.length().count();
  std::uniform_int_distribution<long long> when(-span / 10, span + span / 10);
  std::uniform_int_distribution<int> pick4(0, 3);
  std::uniform_int_distribution<int> pick5(0, 4);
  std::uniform_int_distribution<long long> close_delay(1'000, 5LL * 3'600'000);
  std::uniform_int_distribution<long long> patch_delay(3'600'000, 500LL * 3'600'000);
  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution mostly(0.7);

  cpf::DatasetBundle b;
  const std::vector<std::string> notes = {"false positive", "", "patched host", "escalated", "-"};
  for (std::size_t i = 0; i < n_alerts; ++i) {
    cpf::AlertRecord a;
    a.id = "a" + std::to_string(i);
    a.created_at = r.start + Millis{when(rng)};
    a.severity = static_cast<cpf::Severity>(pick4(rng));
    a.status = static_cast<cpf::AlertStatus>(pick4(rng));
    a.assigned_to = "analyst-" + std::to_string(pick5(rng));
    a.team = coin(rng) ? "blue" : "red";
    if (a.status == cpf::AlertStatus::Closed) {
      a.closed_at = a.created_at + Millis{close_delay(rng)};
      const auto& n = notes[static_cast<std::size_t>(pick5(rng))];
      if (n != "-") a.resolution_notes = n;
    }
    b.alerts.push_back(std::move(a));
  }
  for (std::size_t i = 0; i < n_vulns; ++i) {
    cpf::VulnRecord v;
    v.id = "v" + std::to_string(i);
    v.environment = static_cast<cpf::Environment>(pick4(rng) % 3);
    v.asset_id = std::string(cpf::to_string(v.environment)) + "-" + std::to_string(pick5(rng));
    v.severity = static_cast<cpf::Severity>(pick4(rng));
    v.detected_at = r.start + Millis{when(rng)};
    if (mostly(rng)) v.remediated_at = v.detected_at + Millis{patch_delay(rng)};
    b.vulns.push_back(std::move(v));
  }
  const auto taxonomy = cpf::indicators::TopicTaxonomy::builtin();
  std::vector<std::string> phrases;
  for (const auto& [k, triggers] : taxonomy.entries()) {
    phrases.insert(phrases.end(), triggers.begin(), triggers.end());
  }
  std::uniform_int_distribution<std::size_t> phrase(0, phrases.size() - 1);
  const std::vector<std::string> filler = {"please check", "Security review:", "FYI",
                                           "concerted effort on", "  again   today"};
  for (std::size_t i = 0; i < n_comm; ++i) {
    cpf::CommItem c;
    c.id = "c" + std::to_string(i);
    c.timestamp = r.start + Millis{when(rng)};
    c.visibility = coin(rng) ? cpf::Visibility::Official : cpf::Visibility::Private;
    c.source = c.visibility == cpf::Visibility::Official ? cpf::CommSource::Ticketing
                                                         : cpf::CommSource::Chat;
    c.text = filler[static_cast<std::size_t>(pick5(rng))];
    if (mostly(rng)) {
      std::string p = phrases[phrase(rng)];
      if (coin(rng)) p[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(p[0])));
      c.text += " " + p + (coin(rng) ? "." : " on host");
    }
    b.comm.push_back(std::move(c));
  }
  return b;
}

std::vector<StudyPeriod> period_study(std::uint64_t seed, std::size_t periods) {
  using cpf::synthetic::Pattern;
  constexpr std::array<Pattern, 4> kPatterns = {Pattern::FatigueDrift, Pattern::OverloadCoupling,
                                                Pattern::PatchGap, Pattern::ChannelLeakage};
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution present(0.5);
  std::uniform_real_distribution<double> strength(0.8, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const cpf::Timestamp origin = at("2024-01-01T00:00:00Z");
  const cpf::Millis day{86'400'000};

  std::vector<StudyPeriod> out;
  for (std::size_t i = 0; i < periods; ++i) {
    cpf::synthetic::ScenarioConfig cfg;
    cfg.seed = seed * 100'003 + i;
    cfg.duration = {origin + static_cast<long long>(i) * day, origin + static_cast<long long>(i + 1) * day};
    cfg.id_prefix = "s" + std::to_string(seed) + "p" + std::to_string(i) + "-";
    int k = 0;
    for (auto p : kPatterns) {
      if (!present(rng)) continue;
      cfg.injections.push_back({p, strength(rng)});
      ++k;
    }
    const double p_case = 1.0 / (1.0 + std::exp(-(-6.0 + 3.0 * k)));
    StudyPeriod sp;
    sp.spec = {cfg.duration, u(rng) < p_case ? cpf::PeriodLabel::Case : cpf::PeriodLabel::Control,
               cpf::Scope::org()};
    sp.data = cpf::synthetic::generate(cfg);
    sp.patterns = k;
    out.push_back(std::move(sp));
  }
  return out;
}

cpf::DatasetBundle combined(const std::vector<StudyPeriod>& study) {
  cpf::DatasetBundle b;
  for (const auto& p : study) {
    const auto& d = p.data.bundle;
    b.alerts.insert(b.alerts.end(), d.alerts.begin(), d.alerts.end());
    b.vulns.insert(b.vulns.end(), d.vulns.begin(), d.vulns.end());
    b.comm.insert(b.comm.end(), d.comm.begin(), d.comm.end());
  }
  return b;
}

std::filesystem::path scratch_dir(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::path(CPF_ARTIFACT_DIR) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::filesystem::path artifact_dir() { return CPF_ARTIFACT_DIR; }

std::filesystem::path fixture_dir() { return CPF_FIXTURE_DIR; }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace fixtures
