// Copyright 2026 The cfaudit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cfaudit/bias_report.hpp"

#include <algorithm>
#include <cmath>

#include "cfaudit/error.hpp"
#include "cfaudit/parallel.hpp"

namespace cfaudit {

double self_similarity(const EmbeddingMatrix& group, bool include_diagonal, int jobs) {
  const std::size_t n = group.rows();
  if (n < 2) {
    throw Error("self-similarity needs at least 2 rows (got " + std::to_string(n) + ")");
  }
  const std::size_t d = group.dim();
  std::vector<double> sq_norm(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (float v : group.row(i)) s += static_cast<double>(v) * v;
    if (!(s > 0.0)) {
      throw EmbeddingError("zero-norm row " + std::to_string(i) + " in group", i);
    }
    sq_norm[i] = s;
  }
  // cos = dot / sqrt(|a|^2 |b|^2) is exactly 1 for identical rows.
  auto cosine = [&](std::size_t i, std::size_t j) {
    const auto a = group.row(i);
    const auto b = group.row(j);
    double dot = 0.0;
    for (std::size_t k = 0; k < d; ++k) dot += static_cast<double>(a[k]) * b[k];
    return std::clamp(dot / std::sqrt(sq_norm[i] * sq_norm[j]), -1.0, 1.0);
  };

  std::vector<double> upper(n, 0.0);
  std::vector<double> diag(n, 0.0);
  parallel_for(n, jobs, [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) s += cosine(i, j);
    upper[i] = s;
    if (include_diagonal) diag[i] = cosine(i, i);
  });
  const double off = pairwise_sum(upper);
  const double nd = static_cast<double>(n);
  if (include_diagonal) return (2.0 * off + pairwise_sum(diag)) / (nd * nd);
  return off / (nd * (nd - 1.0) / 2.0);
}

double disparity(double a, double b) { return std::abs(a - b); }

OpportunityTable equality_of_opportunity_table(
    const std::vector<OccupationSamples>& per_occupation) {
  OpportunityTable table;
  std::vector<double> disparities;
  for (const auto& occ : per_occupation) {
    const auto& samples = occ.result.samples;
    if (occ.truth.size() != samples.size() || occ.groups.size() != samples.size()) {
      throw Error("occupation '" + occ.occupation +
                  "': truth/group labels do not match the sample count");
    }
    std::optional<double> recall[2];
    std::size_t support[2] = {0, 0};
    const char* genders[2] = {"man", "woman"};
    for (int g = 0; g < 2; ++g) {
      ClassificationResult part;
      part.labels = occ.result.labels;
      std::vector<std::string> truth;
      for (std::size_t i = 0; i < samples.size(); ++i) {
        if (occ.groups[i] == genders[g]) {
          part.samples.push_back(samples[i]);
          truth.push_back(occ.truth[i]);
        }
      }
      const auto tally = per_class_tally(part, truth);
      auto it = tally.find(occ.occupation);
      if (it != tally.end()) {
        support[g] = it->second.support;
        recall[g] = 100.0 * static_cast<double>(it->second.correct) /
                    static_cast<double>(it->second.support);
      }
    }
    if (!recall[0] || !recall[1]) {
      table.warnings.push_back("occupation '" + occ.occupation + "' has no " +
                               (recall[0] ? "woman" : "man") +
                               " samples; excluded from the table");
      continue;
    }
    OccupationRow row;
    row.name = occ.occupation;
    row.recall_men = *recall[0];
    row.recall_women = *recall[1];
    row.disparity = disparity(row.recall_men, row.recall_women);
    row.support_men = support[0];
    row.support_women = support[1];
    disparities.push_back(row.disparity);
    table.rows.push_back(std::move(row));
  }
  table.total_disparity = pairwise_sum(disparities);
  return table;
}

BiasReport assemble_report(std::string dataset, std::vector<GroupMetric> metrics,
                           const std::optional<OpportunityTable>& opportunity,
                           std::optional<RealismMetrics> realism,
                           ReportProvenance provenance) {
  BiasReport report;
  report.dataset = std::move(dataset);

  std::vector<std::string> order;
  for (const auto& m : metrics) {
    if (m.support == 0) {
      throw Error("metric '" + m.metric + "' for group '" + m.group + "' has no support");
    }
    if (std::find(order.begin(), order.end(), m.metric) == order.end()) {
      order.push_back(m.metric);
    }
  }
  for (const auto& name : order) {
    std::vector<const GroupMetric*> groups;
    for (const auto& m : metrics) {
      if (m.metric == name) groups.push_back(&m);
    }
    if (groups.size() != 2) {
      throw Error("metric '" + name + "' needs exactly two groups for a disparity (got " +
                  std::to_string(groups.size()) + "); missing counterpart group");
    }
    if (groups[0]->group == groups[1]->group) {
      throw Error("metric '" + name + "' lists group '" + groups[0]->group + "' twice");
    }
    report.disparities.emplace_back(name, disparity(groups[0]->value, groups[1]->value));
  }
  report.metrics = std::move(metrics);

  if (opportunity) {
    report.occupations = opportunity->rows;
    report.disparities.emplace_back("equality_of_opportunity_total",
                                    opportunity->total_disparity);
  }
  report.realism = realism;
  report.provenance = std::move(provenance);
  return report;
}

nlohmann::ordered_json report_to_json(const BiasReport& report) {
  using J = nlohmann::ordered_json;
  J doc = J::object();
  doc["dataset"] = report.dataset;

  J metrics = J::array();
  for (const auto& m : report.metrics) {
    J row = J::object();
    row["group"] = m.group;
    row["metric"] = m.metric;
    row["value"] = m.value;
    row["support"] = m.support;
    metrics.push_back(std::move(row));
  }
  doc["metrics"] = std::move(metrics);

  J disparities = J::object();
  for (const auto& [name, value] : report.disparities) disparities[name] = value;
  doc["disparities"] = std::move(disparities);

  J occupations = J::array();
  for (const auto& o : report.occupations) {
    J row = J::object();
    row["name"] = o.name;
    row["recall_men"] = o.recall_men;
    row["recall_women"] = o.recall_women;
    row["disparity"] = o.disparity;
    row["support_men"] = o.support_men;
    row["support_women"] = o.support_women;
    occupations.push_back(std::move(row));
  }
  doc["occupations"] = std::move(occupations);

  if (report.realism) {
    J realism = J::object();
    realism["fid"] = report.realism->fid;
    realism["kid_mean"] = report.realism->kid_mean;
    realism["kid_std"] = report.realism->kid_std;
    realism["cmmd"] = report.realism->cmmd;
    doc["realism"] = std::move(realism);
  }

  J prov = J::object();
  J inputs = J::array();
  for (const auto& in : report.provenance.inputs) {
    inputs.push_back(J{{"role", in.role}, {"path", in.path}, {"sha256", in.sha256}});
  }
  prov["inputs"] = std::move(inputs);
  prov["parameters"] = report.provenance.parameters;
  prov["seed"] = report.provenance.seed;
  doc["provenance"] = std::move(prov);
  return doc;
}

std::string serialize_report(const BiasReport& report) {
  return report_to_json(report).dump(2) + "\n";
}

}  // namespace cfaudit
