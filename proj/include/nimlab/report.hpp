// SPDX-License-Identifier: Apache-2.0

#ifndef NIMLAB_REPORT_HPP
#define NIMLAB_REPORT_HPP

#include <filesystem>
#include <string>
#include <vector>

namespace nimlab
{

// Shortest round-trippable decimal representation (locale independent).
std::string format_double(double x);

// One acceptance criterion outcome; `comparison` describes how `measured` relates to
// `threshold` for a pass (e.g. "<=", ">=", "in [a, b]").
struct CriterionResult
{
  std::string criterion;
  double measured = 0.0;
  double threshold = 0.0;
  std::string comparison;
  bool pass = false;
  std::string detail;
};

inline constexpr int kSummarySchemaVersion = 1;

void write_summary_json(const std::filesystem::path &path, const std::string &subcommand,
                        const std::vector<CriterionResult> &results);

std::string describe(const CriterionResult &result);

}  // namespace nimlab

#endif  // NIMLAB_REPORT_HPP
