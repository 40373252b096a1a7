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

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cfaudit/embedding_store.hpp"
#include "cfaudit/zeroshot.hpp"

namespace cfaudit {

/// Mean cosine similarity over distinct pairs i < j of the group's rows.
/// With `include_diagonal` the mean runs over all n^2 ordered pairs instead.
double self_similarity(const EmbeddingMatrix& group, bool include_diagonal = false,
                       int jobs = 1);

/// |a - b|
double disparity(double a, double b);

struct GroupMetric {
  std::string group;
  std::string metric;
  double value = 0.0;
  std::size_t support = 0;
};

/// Classification of one occupation's images against the occupation
/// prompts. `truth` is the occupation label and `groups` the gender label
/// ("man" / "woman") of each sample.
struct OccupationSamples {
  std::string occupation;
  ClassificationResult result;
  std::vector<std::string> truth;
  std::vector<std::string> groups;
};

struct OccupationRow {
  std::string name;
  double recall_men = 0.0;    // percent
  double recall_women = 0.0;  // percent
  double disparity = 0.0;
  std::size_t support_men = 0;
  std::size_t support_women = 0;
};

struct OpportunityTable {
  std::vector<OccupationRow> rows;
  double total_disparity = 0.0;
  std::vector<std::string> warnings;
};

/// Per-gender recall (in percent) for each occupation and its disparity.
/// Occupations lacking samples of either gender are skipped with a warning.
OpportunityTable equality_of_opportunity_table(
    const std::vector<OccupationSamples>& per_occupation);

struct RealismMetrics {
  double fid = 0.0;
  double kid_mean = 0.0;
  double kid_std = 0.0;
  double cmmd = 0.0;
};

struct InputDigest {
  std::string role;
  std::string path;
  std::string sha256;
};

struct ReportProvenance {
  std::vector<InputDigest> inputs;
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
};

struct BiasReport {
  std::string dataset;
  std::vector<GroupMetric> metrics;
  std::vector<std::pair<std::string, double>> disparities;
  std::vector<OccupationRow> occupations;
  std::optional<RealismMetrics> realism;
  ReportProvenance provenance;
};

/// Builds the report. Every metric must appear for exactly two groups; its
/// disparity is |first - second| in input order. An opportunity table adds
/// its rows and `equality_of_opportunity_total` to the disparities.
BiasReport assemble_report(std::string dataset, std::vector<GroupMetric> metrics,
                           const std::optional<OpportunityTable>& opportunity,
                           std::optional<RealismMetrics> realism,
                           ReportProvenance provenance);

nlohmann::ordered_json report_to_json(const BiasReport& report);

/// Pretty-printed JSON with a trailing newline; a pure function of `report`.
std::string serialize_report(const BiasReport& report);

}  // namespace cfaudit
