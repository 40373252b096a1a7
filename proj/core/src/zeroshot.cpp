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

#include "cfaudit/zeroshot.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "cfaudit/error.hpp"
#include "cfaudit/parallel.hpp"

namespace cfaudit {
namespace {

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw Error("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i];
    const double y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw Error("cosine similarity of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw Error(std::string(what) + " dimension " + std::to_string(got) +
                " does not match " + std::to_string(want));
  }
}

}  // namespace

std::string prompt_text(std::string_view value) {
  return "A photo of a " + std::string(value);
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  return cosine_impl(a, b);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  return cosine_impl(a, b);
}

PromptSet::PromptSet(std::vector<std::string> labels, const EmbeddingMatrix& embeddings)
    : labels_(std::move(labels)) {
  if (labels_.size() != embeddings.rows()) {
    throw Error("prompt set has " + std::to_string(labels_.size()) + " labels but " +
                std::to_string(embeddings.rows()) + " embeddings");
  }
  std::unordered_set<std::string> seen;
  for (const auto& l : labels_) {
    if (!seen.insert(l).second) throw Error("duplicate prompt label '" + l + "'");
  }
  embeddings_ = l2_normalize(embeddings);
}

PromptSet PromptSet::from_ids(const EmbeddingMatrix& prompts,
                              std::vector<std::string> labels) {
  for (const auto& l : labels) {
    if (!prompts.index_of(l)) throw Error("prompt '" + l + "' not found in prompt file");
  }
  auto rows = slice_by_ids(prompts, labels);
  return PromptSet(std::move(labels), rows);
}

std::size_t PromptSet::index_of(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw Error("unknown label '" + std::string(label) + "'");
  return static_cast<std::size_t>(it - labels_.begin());
}

ClassificationResult classify_zero_shot(const EmbeddingMatrix& images,
                                        const PromptSet& prompts, int jobs) {
  if (prompts.size() == 0) throw Error("prompt set is empty");
  if (!images.empty()) require_dim(images.dim(), prompts.embeddings().dim(), "image");
  ClassificationResult result;
  result.labels = prompts.labels();
  result.samples.resize(images.rows());
  parallel_for(images.rows(), jobs, [&](std::size_t i) {
    auto& s = result.samples[i];
    s.similarities.resize(prompts.size());
    for (std::size_t k = 0; k < prompts.size(); ++k) {
      s.similarities[k] = cosine_similarity(images.row(i), prompts.embeddings().row(k));
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < prompts.size(); ++k) {
      if (s.similarities[k] > s.similarities[best]) best = k;
    }
    s.label_index = best;
    s.tie = std::count(s.similarities.begin(), s.similarities.end(),
                       s.similarities[best]) > 1;
  });
  return result;
}

PreferenceResult person_preference(const EmbeddingMatrix& images,
                                   std::span<const float> person_prompt,
                                   std::span<const float> attribute_prompt,
                                   int jobs) {
  require_dim(attribute_prompt.size(), person_prompt.size(), "attribute prompt");
  if (!images.empty()) require_dim(images.dim(), person_prompt.size(), "image");
  std::vector<int> outcome(images.rows(), 0);  // 1 preferred, 2 tie
  parallel_for(images.rows(), jobs, [&](std::size_t i) {
    const double p = cosine_similarity(images.row(i), person_prompt);
    const double a = cosine_similarity(images.row(i), attribute_prompt);
    outcome[i] = p > a ? 1 : (p == a ? 2 : 0);
  });
  PreferenceResult r;
  r.total = images.rows();
  r.preferred = static_cast<std::size_t>(std::count(outcome.begin(), outcome.end(), 1));
  r.ties = static_cast<std::size_t>(std::count(outcome.begin(), outcome.end(), 2));
  r.fraction = r.total == 0 ? 0.0 : static_cast<double>(r.preferred) / static_cast<double>(r.total);
  return r;
}

std::map<std::string, ClassTally> per_class_tally(const ClassificationResult& result,
                                                  std::span<const std::string> truth) {
  if (truth.size() != result.samples.size()) {
    throw Error("truth has " + std::to_string(truth.size()) + " labels for " +
                std::to_string(result.samples.size()) + " samples");
  }
  std::map<std::string, ClassTally> tally;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (std::find(result.labels.begin(), result.labels.end(), truth[i]) ==
        result.labels.end()) {
      throw Error("unknown truth label '" + truth[i] + "'");
    }
    auto& t = tally[truth[i]];
    ++t.support;
    if (result.predicted(i) == truth[i]) ++t.correct;
  }
  return tally;
}

std::map<std::string, double> per_class_recall(const ClassificationResult& result,
                                                std::span<const std::string> truth) {
  std::map<std::string, double> recall;
  for (const auto& [label, t] : per_class_tally(result, truth)) {
    recall[label] = static_cast<double>(t.correct) / static_cast<double>(t.support);
  }
  return recall;
}

std::vector<std::size_t> truth_ranks(const EmbeddingMatrix& queries,
                                     const EmbeddingMatrix& gallery,
                                     std::span<const std::size_t> truth, int jobs) {
  if (truth.size() != queries.rows()) {
    throw Error("truth has " + std::to_string(truth.size()) + " entries for " +
                std::to_string(queries.rows()) + " queries");
  }
  if (!queries.empty()) require_dim(queries.dim(), gallery.dim(), "query");
  for (std::size_t q = 0; q < truth.size(); ++q) {
    if (truth[q] >= gallery.rows()) {
      throw Error("truth index " + std::to_string(truth[q]) + " of query " +
                  std::to_string(q) + " is outside the gallery");
    }
  }
  std::vector<std::size_t> ranks(queries.rows());
  parallel_for(queries.rows(), jobs, [&](std::size_t q) {
    std::vector<double> sims(gallery.rows());
    for (std::size_t g = 0; g < gallery.rows(); ++g) {
      sims[g] = cosine_similarity(queries.row(q), gallery.row(g));
    }
    const std::size_t t = truth[q];
    std::size_t rank = 0;
    for (std::size_t g = 0; g < sims.size(); ++g) {
      if (sims[g] > sims[t] || (sims[g] == sims[t] && g < t)) ++rank;
    }
    ranks[q] = rank;
  });
  return ranks;
}

double recall_at_k(const EmbeddingMatrix& queries, const EmbeddingMatrix& gallery,
                   std::span<const std::size_t> truth, std::size_t k, int jobs) {
  if (k == 0) throw Error("k must be positive");
  if (k > gallery.rows()) {
    throw Error("k = " + std::to_string(k) + " exceeds gallery size " +
                std::to_string(gallery.rows()));
  }
  const auto ranks = truth_ranks(queries, gallery, truth, jobs);
  if (ranks.empty()) return 0.0;
  const auto hits = std::count_if(ranks.begin(), ranks.end(),
                                  [k](std::size_t r) { return r < k; });
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

}  // namespace cfaudit
