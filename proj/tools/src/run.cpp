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

#include <map>
#include <ostream>

#include <CLI11.hpp>

#include "cfaudit/cli/commands.hpp"

namespace cfaudit::cli {
namespace {

void add_common(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  cmd->add_option("--jobs", c.jobs, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& log) {
  RunConfig c;
  CLI::App app{"Counterfactual dataset and gender-bias audit toolkit", "cfaudit"};
  app.require_subcommand(1);

  auto* edit = app.add_subcommand("edit-captions", "Produce masculine/feminine caption pairs");
  edit->add_option("--manifest", c.manifest, "Input manifest (JSONL)")->required();
  edit->add_option("--lexicon", c.lexicon, "Gender lexicon (JSON)")->required();
  edit->add_option("--out", c.out, "Output manifest (JSONL)")->required();
  add_common(edit, c);

  auto* masks = app.add_subcommand("compose-masks", "Combine person and skin masks and dilate");
  masks->add_option("--manifest", c.manifest, "Input manifest (JSONL)")->required();
  masks->add_option("--person-dir", c.person_dir, "Directory of <id>.png person masks")
      ->required();
  masks->add_option("--skin-dir", c.skin_dir, "Directory of <id>.png skin masks")->required();
  masks->add_option("--out", c.out, "Output directory")->required();
  const std::map<std::string, CombineMode> modes = {{"intersect", CombineMode::kIntersect},
                                                    {"union", CombineMode::kUnion}};
  masks->add_option("--combine", c.combine, "Mask combination")
      ->transform(CLI::CheckedTransformer(modes, CLI::ignore_case))
      ->default_str("intersect");
  masks->add_option("--dilate-iters", c.dilate_iters, "3x3 dilation passes")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  add_common(masks, c);

  auto* parts = app.add_subcommand("partitions", "Write the c1..c10 fine-tuning partitions");
  parts->add_option("--manifest", c.manifest, "Input manifest (JSONL)")->required();
  parts->add_option("--out", c.out, "Output directory")->required();
  parts->add_option("--codes", c.codes, "Subset of codes (default: all)");
  add_common(parts, c);

  auto* version = app.add_subcommand("dataset-version",
                                     "Replace a fraction of person images by counterfactual pairs");
  version->add_option("--manifest", c.manifest, "Input manifest (JSONL)")->required();
  version->add_option("--fraction", c.fraction, "Share of person records replaced")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  version->add_option("--out", c.out, "Output manifest (JSONL)")->required();
  add_common(version, c);

  auto* profile = app.add_subcommand("profile", "Zero-shot gender bias profile");
  profile->add_option("--manifest", c.manifest, "Input manifest (JSONL)")->required();
  profile->add_option("--prompts", c.prompts, "Prompt embeddings (ids: person, man, woman, ...)")
      ->required();
  profile->add_option("--out", c.out, "Report JSON")->required();
  profile->add_option("--occupations", c.occupations, "Occupation table (CSV)");
  profile->add_option("--min-per-gender", c.min_per_gender,
                      "Occupations need more than this many examples per gender")
      ->capture_default_str();
  profile->add_flag("--include-diagonal", c.include_diagonal,
                    "Count self-pairs in self-similarity");
  profile->add_option("--dataset", c.dataset, "Dataset name in the report");
  profile->add_flag("--normalize", c.normalize, "Accepted for symmetry; cosine metrics always normalize");
  add_common(profile, c);

  auto* realism = app.add_subcommand("realism", "FID, KID and CMMD between two embedding sets");
  realism->add_option("--real", c.real, "Real embeddings (EMB1)")->required();
  realism->add_option("--synthetic", c.synthetic, "Synthetic embeddings (EMB1)")->required();
  realism->add_option("--out", c.out, "Report JSON")->required();
  realism->add_option("--kid-subset", c.kid_subset, "KID subset size (0: min(1000, n))")
      ->capture_default_str();
  realism->add_option("--kid-subsets", c.kid_subsets, "Number of KID subsets")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  realism->add_option("--cmmd-bandwidth", c.cmmd_bandwidth, "RBF kernel width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  realism->add_option("--cmmd-scale", c.cmmd_scale, "CMMD scale factor")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  realism->add_flag("--normalize", c.normalize, "L2-normalize rows before FID/KID");
  realism->add_option("--dataset", c.dataset, "Dataset name in the report");
  add_common(realism, c);

  auto* retrieval = app.add_subcommand("retrieval", "Recall@k of query embeddings over a gallery");
  retrieval->add_option("--queries", c.queries, "Query embeddings (EMB1)")->required();
  retrieval->add_option("--gallery", c.gallery, "Gallery embeddings (EMB1)")->required();
  retrieval->add_option("--truth", c.truth, "JSON object query id -> gallery id");
  retrieval->add_option("--groups", c.groups, "JSON object query id -> attribute group(s)");
  retrieval->add_option("--k", c.k, "Cut-off rank")->check(CLI::PositiveNumber)->capture_default_str();
  retrieval->add_option("--out", c.out, "Output JSON")->required();
  add_common(retrieval, c);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, log, log);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (edit->parsed()) return cmd_edit_captions(c, log);
  if (masks->parsed()) return cmd_compose_masks(c, log);
  if (parts->parsed()) return cmd_partitions(c, log);
  if (version->parsed()) return cmd_dataset_version(c, log);
  if (profile->parsed()) return cmd_profile(c, log);
  if (realism->parsed()) return cmd_realism(c, log);
  if (retrieval->parsed()) return cmd_retrieval(c, log);
  return kExitUsage;
}

}  // namespace cfaudit::cli
