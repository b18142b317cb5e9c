#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cpf/ingestion.hpp"
#include "cpf/synthetic.hpp"
#include "cpf/validation.hpp"

namespace fixtures {

cpf::Timestamp at(const std::string& rfc3339);
cpf::TimeRange range(const std::string& from, const std::string& to);

/// Small randomized bundle: records scattered over the range and a margin
/// around it, every status/severity/environment/visibility represented, and
/// comm text that sometimes carries builtin taxonomy triggers.
cpf::DatasetBundle random_bundle(std::mt19937_64& rng, const cpf::TimeRange& range,
                                 std::size_t alerts, std::size_t vulns, std::size_t comm);

/// One-day synthetic period for case-control studies. Each of the four
/// patterns is present with probability 1/2 at strength U(0.8, 1.0); the label
/// is drawn from a logistic link on the number of present patterns, so cases
/// and controls overlap and the model is fit on data that is not separable.
struct StudyPeriod {
  cpf::validation::PeriodSpec spec;
  cpf::synthetic::LabeledBundle data;
  int patterns = 0;
};

std::vector<StudyPeriod> period_study(std::uint64_t seed, std::size_t periods);

/// Every period's records in one bundle.
cpf::DatasetBundle combined(const std::vector<StudyPeriod>& study);

/// Fresh empty directory under the build tree's test-artifacts folder.
std::filesystem::path scratch_dir(const std::string& name);

/// The build tree's test-artifacts folder.
std::filesystem::path artifact_dir();

/// Root of the checked-in fixtures.
std::filesystem::path fixture_dir();

std::string slurp(const std::filesystem::path& p);

}  // namespace fixtures
