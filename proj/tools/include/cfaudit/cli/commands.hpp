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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cfaudit/mask_ops.hpp"

namespace cfaudit::cli {

/// Exit statuses shared by every subcommand.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  // module error or at least one record-level error
  kExitUsage = 2,    // bad flags or a missing input file
};

/// Parsed flags for one invocation. Defaults are the documented module
/// defaults, so a run without flags uses the reference configuration.
struct RunConfig {
  std::string subcommand;

  std::filesystem::path manifest;
  std::filesystem::path out;
  std::filesystem::path lexicon;
  std::filesystem::path person_dir;
  std::filesystem::path skin_dir;
  std::filesystem::path prompts;
  std::filesystem::path occupations;
  std::filesystem::path real;
  std::filesystem::path synthetic;
  std::filesystem::path queries;
  std::filesystem::path gallery;
  std::filesystem::path truth;
  std::filesystem::path groups;
  std::string dataset;

  std::uint64_t seed = 0;
  int jobs = 1;
  bool normalize = false;

  // realism
  std::size_t kid_subset = 0;  // 0: min(1000, n)
  std::size_t kid_subsets = 100;
  double cmmd_bandwidth = 10.0;
  double cmmd_scale = 1000.0;

  // masks
  CombineMode combine = CombineMode::kIntersect;
  int dilate_iters = 1;

  // partitions
  std::vector<std::string> codes;

  // dataset-version
  double fraction = 0.0;

  // profile
  bool include_diagonal = false;
  std::uint64_t min_per_gender = 50;

  // retrieval
  std::size_t k = 1;
};

int cmd_edit_captions(const RunConfig& config, std::ostream& log);
int cmd_compose_masks(const RunConfig& config, std::ostream& log);
int cmd_partitions(const RunConfig& config, std::ostream& log);
int cmd_dataset_version(const RunConfig& config, std::ostream& log);
int cmd_profile(const RunConfig& config, std::ostream& log);
int cmd_realism(const RunConfig& config, std::ostream& log);
int cmd_retrieval(const RunConfig& config, std::ostream& log);

/// Parses `args` (args[0] is the program name) and dispatches. Diagnostics
/// and the run summary go to `log`; data goes only to declared outputs.
int run(const std::vector<std::string>& args, std::ostream& log);

}  // namespace cfaudit::cli
