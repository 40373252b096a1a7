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

#include "cfaudit/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cfaudit/bias_report.hpp"
#include "cfaudit/caption_editor.hpp"
#include "cfaudit/digest.hpp"
#include "cfaudit/dist_metrics.hpp"
#include "cfaudit/embedding_store.hpp"
#include "cfaudit/error.hpp"
#include "cfaudit/manifest.hpp"
#include "cfaudit/parallel.hpp"
#include "cfaudit/zeroshot.hpp"

namespace cfaudit::cli {
namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

/// A declared input does not exist; maps to kExitUsage.
class MissingInput : public Error {
 public:
  using Error::Error;
};

void require_input(const fs::path& path, const std::string& what) {
  if (path.empty()) throw MissingInput(what + " path not given");
  if (!fs::exists(path)) throw MissingInput(what + " not found: " + path.string());
}

void require_output(const fs::path& path, const std::string& what) {
  if (path.empty()) throw MissingInput(what + " path not given (--out)");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

InputDigest digest(const std::string& role, const fs::path& path) {
  return {role, path.generic_string(), sha256_file(path)};
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

/// Record ids become file names, so they must stay inside the output dir.
bool safe_file_stem(const std::string& id) {
  return !id.empty() && id != "." && id != ".." &&
         id.find('/') == std::string::npos && id.find('\\') == std::string::npos;
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInput("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

template <typename Fn>
int guarded(std::ostream& log, const char* name, Fn&& fn) {
  try {
    return fn();
  } catch (const MissingInput& e) {
    log << name << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    log << name << ": error: " << e.what() << '\n';
    return kExitFailure;
  }
}

/// Embedding rows of `records`, gathered from their embedding_ref files.
class EmbeddingResolver {
 public:
  explicit EmbeddingResolver(fs::path base) : base_(std::move(base)) {}

  EmbeddingMatrix gather(const std::vector<const ManifestRecord*>& records) {
    std::vector<float> values;
    std::vector<std::string> ids;
    std::size_t dim = 0;
    for (const auto* r : records) {
      if (!r->embedding_ref) {
        throw Error("record '" + r->id + "' has no embedding_ref");
      }
      const auto& m = file(r->embedding_ref->file, r->id);
      if (r->embedding_ref->row >= m.rows()) {
        throw Error("record '" + r->id + "': embedding row " +
                    std::to_string(r->embedding_ref->row) + " out of range (" +
                    std::to_string(m.rows()) + " rows)");
      }
      if (dim == 0) dim = m.dim();
      if (m.dim() != dim) {
        throw Error("record '" + r->id + "': embedding dimension " +
                    std::to_string(m.dim()) + " differs from " + std::to_string(dim));
      }
      const auto row = m.row(r->embedding_ref->row);
      values.insert(values.end(), row.begin(), row.end());
      ids.push_back(r->id);
    }
    if (ids.empty()) return {};
    return EmbeddingMatrix(dim, std::move(values), std::move(ids));
  }

  /// Every file touched so far, sorted by path.
  std::vector<InputDigest> digests() const {
    std::vector<InputDigest> out;
    for (const auto& [path, _] : files_) out.push_back(digest("embeddings", path));
    return out;
  }

 private:
  const EmbeddingMatrix& file(const std::string& ref, const std::string& record_id) {
    const fs::path path = resolve(base_, ref);
    auto it = files_.find(path);
    if (it != files_.end()) return it->second;
    if (!fs::exists(path)) {
      throw Error("record '" + record_id + "': embedding file not found: " +
                  path.string());
    }
    return files_.emplace(path, read_embeddings(path)).first->second;
  }

  fs::path base_;
  std::map<fs::path, EmbeddingMatrix> files_;
};

std::span<const float> prompt_row(const EmbeddingMatrix& prompts, const std::string& label) {
  auto idx = prompts.index_of(label);
  if (!idx) throw Error("prompt '" + label + "' not found in prompt file");
  return prompts.row(*idx);
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_edit_captions(const RunConfig& config, std::ostream& log) {
  return guarded(log, "edit-captions", [&] {
    require_input(config.manifest, "manifest");
    if (config.lexicon.empty() || !fs::exists(config.lexicon)) {
      throw MissingInput("lexicon not found: " + config.lexicon.string());
    }
    require_output(config.out, "output manifest");
    const auto lexicon = load_lexicon(config.lexicon);
    auto records = load_manifest(config.manifest);

    std::vector<std::size_t> counts(4, 0);
    std::vector<CaptionPair> pairs(records.size());
    parallel_for(records.size(), config.jobs, [&](std::size_t i) {
      pairs[i] = make_counterfactual_pair(records[i].caption, lexicon);
    });
    for (std::size_t i = 0; i < records.size(); ++i) {
      auto& extra = records[i].extra;
      extra["caption_masculine"] = pairs[i].masculine;
      extra["caption_feminine"] = pairs[i].feminine;
      extra["caption_gender"] = std::string(to_string(pairs[i].detected_gender));
      ++counts[static_cast<std::size_t>(pairs[i].detected_gender)];
    }
    if (config.out.has_parent_path()) fs::create_directories(config.out.parent_path());
    write_manifest(records, config.out);
    log << "edit-captions: " << records.size() << " records (masculine " << counts[0]
        << ", feminine " << counts[1] << ", neutral " << counts[2] << ", mixed "
        << counts[3] << ")\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_compose_masks(const RunConfig& config, std::ostream& log) {
  return guarded(log, "compose-masks", [&] {
    require_input(config.manifest, "manifest");
    require_input(config.person_dir, "person mask directory");
    require_input(config.skin_dir, "skin mask directory");
    require_output(config.out, "output directory");
    if (config.dilate_iters < 0) throw Error("--dilate-iters must be non-negative");
    const auto records = load_manifest(config.manifest);
    fs::create_directories(config.out);

    std::vector<const ManifestRecord*> todo;
    for (const auto& r : records) {
      if (r.provenance == Provenance::kReal && r.has_person) todo.push_back(&r);
    }
    enum class Outcome { kWritten, kSkipped, kFailed };
    std::vector<Outcome> outcome(todo.size(), Outcome::kFailed);
    std::vector<std::string> message(todo.size());
    parallel_for(todo.size(), config.jobs, [&](std::size_t i) {
      const auto& id = todo[i]->id;
      try {
        if (!safe_file_stem(id)) throw Error("id is not usable as a file name");
        const auto person_path = config.person_dir / (id + ".png");
        const auto skin_path = config.skin_dir / (id + ".png");
        if (!fs::exists(person_path)) throw Error("missing person mask " + person_path.string());
        const auto person = decode_mask(person_path);
        if (person.count() == 0) {
          outcome[i] = Outcome::kSkipped;
          message[i] = "empty person mask";
          return;
        }
        if (!fs::exists(skin_path)) throw Error("missing skin mask " + skin_path.string());
        const auto skin = decode_mask(skin_path);
        const auto combined =
            dilate_3x3(compose_inpaint_mask(person, skin, config.combine), config.dilate_iters);
        encode_mask(combined, config.out / (id + ".png"));
        outcome[i] = Outcome::kWritten;
      } catch (const std::exception& e) {
        outcome[i] = Outcome::kFailed;
        message[i] = e.what();
      }
    });

    std::size_t written = 0, skipped = 0, failed = 0;
    for (std::size_t i = 0; i < todo.size(); ++i) {
      switch (outcome[i]) {
        case Outcome::kWritten: ++written; break;
        case Outcome::kSkipped:
          ++skipped;
          log << "compose-masks: skipped " << todo[i]->id << ": " << message[i] << '\n';
          break;
        case Outcome::kFailed:
          ++failed;
          log << "compose-masks: failed " << todo[i]->id << ": " << message[i] << '\n';
          break;
      }
    }
    log << "compose-masks: processed " << todo.size() << ", written " << written
        << ", skipped " << skipped << ", failed " << failed << '\n';
    return static_cast<int>(failed == 0 ? kExitOk : kExitFailure);
  });
}

int cmd_partitions(const RunConfig& config, std::ostream& log) {
  return guarded(log, "partitions", [&] {
    require_input(config.manifest, "manifest");
    require_output(config.out, "output directory");
    std::vector<PartitionCode> codes;
    if (config.codes.empty()) {
      codes.assign(kAllPartitionCodes.begin(), kAllPartitionCodes.end());
    } else {
      for (const auto& c : config.codes) codes.push_back(parse_partition_code(c));
    }
    const auto records = load_manifest(config.manifest);
    fs::create_directories(config.out);
    for (auto code : codes) {
      const auto part = build_partition(records, code);
      write_manifest(part, config.out / (to_string(code) + ".jsonl"));
      log << "partitions: " << to_string(code) << " " << part.size() << " records\n";
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_dataset_version(const RunConfig& config, std::ostream& log) {
  return guarded(log, "dataset-version", [&] {
    require_input(config.manifest, "manifest");
    require_output(config.out, "output manifest");
    const auto records = load_manifest(config.manifest);
    const auto version = dataset_version(records, config.fraction, config.seed);
    if (config.out.has_parent_path()) fs::create_directories(config.out.parent_path());
    write_manifest(version, config.out);
    log << "dataset-version: " << records.size() << " input records, "
        << replaced_person_ids(records, config.fraction, config.seed).size()
        << " person records replaced, " << version.size() << " output records\n";
    return static_cast<int>(kExitOk);
  });
}

int cmd_profile(const RunConfig& config, std::ostream& log) {
  return guarded(log, "profile", [&] {
    require_input(config.manifest, "manifest");
    require_input(config.prompts, "prompt embeddings");
    if (!config.occupations.empty()) require_input(config.occupations, "occupation table");
    require_output(config.out, "report");

    const auto records = load_manifest(config.manifest);
    const auto prompts = read_embeddings(config.prompts);
    EmbeddingResolver resolver(config.manifest.parent_path());

    std::vector<const ManifestRecord*> men, women, people;
    for (const auto& r : records) {
      if (!r.has_person) continue;
      if (r.gender == Gender::kMan) men.push_back(&r);
      if (r.gender == Gender::kWoman) women.push_back(&r);
    }
    if (men.empty() || women.empty()) {
      throw Error("profiling needs person records of both genders (men " +
                  std::to_string(men.size()) + ", women " + std::to_string(women.size()) +
                  ")");
    }
    people = men;
    people.insert(people.end(), women.begin(), women.end());
    const EmbeddingMatrix men_emb = resolver.gather(men);
    const EmbeddingMatrix women_emb = resolver.gather(women);
    const EmbeddingMatrix people_emb = resolver.gather(people);

    const auto person = prompt_row(prompts, "person");
    std::vector<GroupMetric> metrics;
    const auto pref_m = person_preference(men_emb, person, prompt_row(prompts, "man"), config.jobs);
    const auto pref_w =
        person_preference(women_emb, person, prompt_row(prompts, "woman"), config.jobs);
    metrics.push_back({"man", "person_preference", pref_m.fraction, pref_m.total});
    metrics.push_back({"woman", "person_preference", pref_w.fraction, pref_w.total});
    metrics.push_back({"man", "person_preference_ties", static_cast<double>(pref_m.ties),
                       pref_m.total});
    metrics.push_back({"woman", "person_preference_ties", static_cast<double>(pref_w.ties),
                       pref_w.total});

    metrics.push_back({"man", "self_similarity",
                       self_similarity(men_emb, config.include_diagonal, config.jobs),
                       men_emb.rows()});
    metrics.push_back({"woman", "self_similarity",
                       self_similarity(women_emb, config.include_diagonal, config.jobs),
                       women_emb.rows()});

    const auto gender_prompts = PromptSet::from_ids(prompts, {"man", "woman"});
    const auto gender_result = classify_zero_shot(people_emb, gender_prompts, config.jobs);
    std::vector<std::string> gender_truth;
    for (const auto* r : people) gender_truth.emplace_back(to_string(r->gender));
    const auto tally = per_class_tally(gender_result, gender_truth);
    for (const char* g : {"man", "woman"}) {
      const auto& t = tally.at(g);
      metrics.push_back({g, "gender_classification",
                         100.0 * static_cast<double>(t.correct) / static_cast<double>(t.support),
                         t.support});
    }

    ReportProvenance prov;
    prov.inputs.push_back(digest("manifest", config.manifest));
    prov.inputs.push_back(digest("prompts", config.prompts));
    prov.parameters["prompt_template"] = prompt_text("{value}");
    prov.parameters["self_similarity_include_diagonal"] = config.include_diagonal;

    std::optional<OpportunityTable> opportunity;
    if (!config.occupations.empty()) {
      prov.inputs.push_back(digest("occupations", config.occupations));
      prov.parameters["min_per_gender"] = config.min_per_gender;
      const auto all = load_occupations(config.occupations);
      const auto selected = select_occupations(all, config.min_per_gender);
      std::vector<std::string> labels;
      for (const auto& o : selected) labels.push_back(o.name);
      ojson names = ojson::array();
      for (const auto& l : labels) names.push_back(l);
      prov.parameters["occupations_selected"] = names;

      std::vector<OccupationSamples> per_occupation;
      if (!labels.empty()) {
        const auto occ_prompts = PromptSet::from_ids(prompts, labels);
        for (const auto& label : labels) {
          std::vector<const ManifestRecord*> subset;
          for (const auto* r : people) {
            if (r->occupation && *r->occupation == label) subset.push_back(r);
          }
          OccupationSamples s;
          s.occupation = label;
          s.result = subset.empty()
                         ? ClassificationResult{occ_prompts.labels(), {}}
                         : classify_zero_shot(resolver.gather(subset), occ_prompts, config.jobs);
          for (const auto* r : subset) {
            s.truth.push_back(label);
            s.groups.emplace_back(to_string(r->gender));
          }
          per_occupation.push_back(std::move(s));
        }
      }
      opportunity = equality_of_opportunity_table(per_occupation);
      for (const auto& w : opportunity->warnings) log << "profile: warning: " << w << '\n';
    }
    for (auto& d : resolver.digests()) prov.inputs.push_back(std::move(d));
    prov.seed = config.seed;

    const std::string dataset =
        config.dataset.empty() ? config.manifest.stem().string() : config.dataset;
    const auto report = assemble_report(dataset, std::move(metrics), opportunity,
                                        std::nullopt, std::move(prov));
    write_text(config.out, serialize_report(report));
    log << "profile: " << men.size() << " men, " << women.size() << " women";
    if (opportunity) log << ", " << opportunity->rows.size() << " occupations";
    log << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_realism(const RunConfig& config, std::ostream& log) {
  return guarded(log, "realism", [&] {
    require_input(config.real, "real embeddings");
    require_input(config.synthetic, "synthetic embeddings");
    require_output(config.out, "report");

    EmbeddingMatrix real = read_embeddings(config.real);
    EmbeddingMatrix synthetic = read_embeddings(config.synthetic);
    if (real.dim() != synthetic.dim()) {
      throw Error("embedding dimension mismatch: real " + std::to_string(real.dim()) +
                  ", synthetic " + std::to_string(synthetic.dim()));
    }
    if (real.rows() < 2 || synthetic.rows() < 2) {
      throw Error("need ≥2 samples in each embedding file (real " +
                  std::to_string(real.rows()) + ", synthetic " +
                  std::to_string(synthetic.rows()) + ")");
    }
    if (config.normalize) {
      real = l2_normalize(real);
      synthetic = l2_normalize(synthetic);
    }

    RealismMetrics realism;
    realism.fid = frechet_distance(fit_gaussian(real), fit_gaussian(synthetic));
    KidOptions kid_options{config.kid_subset, config.kid_subsets, config.seed};
    const auto kid = kid_unbiased(real, synthetic, kid_options, config.jobs);
    realism.kid_mean = kid.mean;
    realism.kid_std = kid.std;
    realism.cmmd =
        cmmd(real, synthetic, config.cmmd_bandwidth, config.cmmd_scale, config.jobs);

    ReportProvenance prov;
    prov.inputs.push_back(digest("real", config.real));
    prov.inputs.push_back(digest("synthetic", config.synthetic));
    prov.parameters["normalize"] = config.normalize;
    prov.parameters["kid_subset"] = kid.subset_size;
    prov.parameters["kid_subsets"] = config.kid_subsets;
    prov.parameters["cmmd_bandwidth"] = config.cmmd_bandwidth;
    prov.parameters["cmmd_scale"] = config.cmmd_scale;
    prov.seed = config.seed;

    const std::string dataset =
        config.dataset.empty() ? config.synthetic.stem().string() : config.dataset;
    const auto report =
        assemble_report(dataset, {}, std::nullopt, realism, std::move(prov));
    write_text(config.out, serialize_report(report));
    log << "realism: real " << real.rows() << ", synthetic " << synthetic.rows()
        << " rows; fid " << realism.fid << ", kid " << realism.kid_mean << " +- "
        << realism.kid_std << ", cmmd " << realism.cmmd << '\n';
    return static_cast<int>(kExitOk);
  });
}

int cmd_retrieval(const RunConfig& config, std::ostream& log) {
  return guarded(log, "retrieval", [&] {
    require_input(config.queries, "query embeddings");
    require_input(config.gallery, "gallery embeddings");
    if (!config.truth.empty()) require_input(config.truth, "truth map");
    if (!config.groups.empty()) require_input(config.groups, "group map");
    require_output(config.out, "output");

    const auto queries = read_embeddings(config.queries);
    const auto gallery = read_embeddings(config.gallery);
    if (config.k == 0 || config.k > gallery.rows()) {
      throw Error("k = " + std::to_string(config.k) + " must lie in [1, " +
                  std::to_string(gallery.rows()) + "]");
    }

    nlohmann::json truth_map = nlohmann::json::object();
    if (!config.truth.empty()) truth_map = read_json_file(config.truth);
    std::vector<std::size_t> truth(queries.rows());
    for (std::size_t q = 0; q < queries.rows(); ++q) {
      const auto& qid = queries.ids()[q];
      std::string gid = qid;
      if (truth_map.contains(qid)) gid = truth_map.at(qid).get<std::string>();
      auto idx = gallery.index_of(gid);
      if (!idx) throw Error("query '" + qid + "': gallery id '" + gid + "' not found");
      truth[q] = *idx;
    }
    const auto ranks = truth_ranks(queries, gallery, truth, config.jobs);

    nlohmann::json group_map = nlohmann::json::object();
    if (!config.groups.empty()) group_map = read_json_file(config.groups);
    std::map<std::string, std::pair<std::size_t, std::size_t>> by_group;  // hits, support
    std::size_t hits = 0;
    for (std::size_t q = 0; q < ranks.size(); ++q) {
      const bool hit = ranks[q] < config.k;
      hits += hit ? 1 : 0;
      const auto& qid = queries.ids()[q];
      if (!group_map.contains(qid)) continue;
      const auto& g = group_map.at(qid);
      std::vector<std::string> names;
      if (g.is_string()) {
        names.push_back(g.get<std::string>());
      } else if (g.is_array()) {
        for (const auto& v : g) names.push_back(v.get<std::string>());
      } else {
        throw Error("group entry for '" + qid + "' must be a string or array");
      }
      for (const auto& name : names) {
        auto& slot = by_group[name];
        slot.first += hit ? 1 : 0;
        ++slot.second;
      }
    }

    auto recall = [](std::size_t h, std::size_t n) {
      return n == 0 ? 0.0 : static_cast<double>(h) / static_cast<double>(n);
    };
    ojson doc = ojson::object();
    doc["k"] = config.k;
    doc["all"] = ojson{{"recall", recall(hits, ranks.size())}, {"support", ranks.size()}};
    ojson groups = ojson::object();
    for (const auto& [name, hs] : by_group) {
      groups[name] = ojson{{"recall", recall(hs.first, hs.second)}, {"support", hs.second}};
    }
    doc["groups"] = std::move(groups);
    ojson inputs = ojson::array();
    std::vector<InputDigest> digests = {digest("queries", config.queries),
                                        digest("gallery", config.gallery)};
    if (!config.truth.empty()) digests.push_back(digest("truth", config.truth));
    if (!config.groups.empty()) digests.push_back(digest("groups", config.groups));
    for (const auto& d : digests) {
      inputs.push_back(ojson{{"role", d.role}, {"path", d.path}, {"sha256", d.sha256}});
    }
    doc["provenance"] = ojson{{"inputs", inputs}, {"parameters", ojson{{"k", config.k}}}};
    write_text(config.out, doc.dump(2) + "\n");
    log << "retrieval: " << ranks.size() << " queries, recall@" << config.k << " "
        << recall(hits, ranks.size()) << '\n';
    return static_cast<int>(kExitOk);
  });
}

}  // namespace cfaudit::cli
