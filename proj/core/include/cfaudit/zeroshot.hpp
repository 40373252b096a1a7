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
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfaudit/embedding_store.hpp"

namespace cfaudit {

/// "A photo of a {value}".
std::string prompt_text(std::string_view value);

/// Class labels with one unit-normalized prompt embedding per label.
class PromptSet {
 public:
  /// Rows of `embeddings` are normalized here; labels must be unique and
  /// match the row count.
  PromptSet(std::vector<std::string> labels, const EmbeddingMatrix& embeddings);

  /// Picks the rows whose ids equal `labels` from a prompt embedding file.
  static PromptSet from_ids(const EmbeddingMatrix& prompts,
                            std::vector<std::string> labels);

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const EmbeddingMatrix& embeddings() const noexcept { return embeddings_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t index_of(std::string_view label) const;

 private:
  std::vector<std::string> labels_;
  EmbeddingMatrix embeddings_;
};

struct SamplePrediction {
  std::size_t label_index = 0;
  bool tie = false;  // another label reached the same maximum similarity
  std::vector<double> similarities;
};

struct ClassificationResult {
  std::vector<std::string> labels;
  std::vector<SamplePrediction> samples;

  const std::string& predicted(std::size_t i) const {
    return labels[samples[i].label_index];
  }
};

double cosine_similarity(std::span<const float> a, std::span<const float> b);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Argmax of the cosine similarity to each prompt; ties go to the lowest
/// label index and are flagged.
ClassificationResult classify_zero_shot(const EmbeddingMatrix& images,
                                        const PromptSet& prompts, int jobs = 1);

struct PreferenceResult {
  double fraction = 0.0;   // share of images strictly closer to the person prompt
  std::size_t preferred = 0;
  std::size_t ties = 0;    // equal similarities, counted as non-preference
  std::size_t total = 0;
};

/// Fraction of images with cos(image, person) > cos(image, attribute).
/// An empty image set yields fraction 0.
PreferenceResult person_preference(const EmbeddingMatrix& images,
                                   std::span<const float> person_prompt,
                                   std::span<const float> attribute_prompt,
                                   int jobs = 1);

/// Recall per truth class; classes without samples are omitted.
std::map<std::string, double> per_class_recall(const ClassificationResult& result,
                                                std::span<const std::string> truth);

/// Per-class support and hit counts behind per_class_recall.
struct ClassTally {
  std::size_t support = 0;
  std::size_t correct = 0;
};
std::map<std::string, ClassTally> per_class_tally(const ClassificationResult& result,
                                                  std::span<const std::string> truth);

/// Gallery rank of the truth row for each query: number of gallery rows
/// that outrank it (higher cosine, or equal cosine and lower index).
std::vector<std::size_t> truth_ranks(const EmbeddingMatrix& queries,
                                     const EmbeddingMatrix& gallery,
                                     std::span<const std::size_t> truth, int jobs = 1);

/// Fraction of queries whose truth row is among the k most similar gallery
/// rows. Requires 1 <= k <= gallery size; 0 for an empty query set.
double recall_at_k(const EmbeddingMatrix& queries, const EmbeddingMatrix& gallery,
                   std::span<const std::size_t> truth, std::size_t k, int jobs = 1);

}  // namespace cfaudit
