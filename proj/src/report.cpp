// SPDX-License-Identifier: Apache-2.0

#include "nimlab/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include "nimlab/errors.hpp"

namespace nimlab
{

std::string format_double(double x)
{
  if (std::isnan(x))
  {
    return "nan";
  }
  if (std::isinf(x))
  {
    return x > 0 ? "inf" : "-inf";
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

void write_summary_json(const std::filesystem::path &path, const std::string &subcommand,
                        const std::vector<CriterionResult> &results)
{
  nlohmann::ordered_json doc;
  doc["schema_version"] = kSummarySchemaVersion;
  doc["subcommand"] = subcommand;
  bool all = true;
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  for (const auto &r : results)
  {
    nlohmann::ordered_json item;
    item["criterion"] = r.criterion;
    item["measured"] = std::isfinite(r.measured) ? nlohmann::ordered_json(r.measured)
                                                 : nlohmann::ordered_json(nullptr);
    item["threshold"] = r.threshold;
    item["comparison"] = r.comparison;
    item["pass"] = r.pass;
    if (!r.detail.empty())
    {
      item["detail"] = r.detail;
    }
    list.push_back(item);
    all = all && r.pass;
  }
  doc["results"] = list;
  doc["pass"] = all;
  std::ofstream os(path);
  if (!os)
  {
    throw InvalidInput("cannot write " + path.string());
  }
  os << doc.dump(2) << '\n';
}

std::string describe(const CriterionResult &r)
{
  // Interval comparisons carry their bounds in the comparison text.
  const bool op = r.comparison.size() <= 2;
  std::string s = (r.pass ? "PASS " : "FAIL ") + r.criterion + ": measured " +
                  format_double(r.measured) + " (" + r.comparison +
                  (op ? " " + format_double(r.threshold) : std::string()) + ")";
  if (!r.detail.empty())
  {
    s += " " + r.detail;
  }
  return s;
}

}  // namespace nimlab
