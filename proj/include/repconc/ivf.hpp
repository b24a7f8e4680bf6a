// Copyright 2026 The RepCONC Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Inverted-file acceleration over PQ codes: coarse k-means on the quantized
// document embeddings, one inverted list per coarse centroid, and
// nprobe-limited ADC search.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "repconc/numerics.hpp"
#include "repconc/opq.hpp"
#include "repconc/pq.hpp"

namespace repconc {

struct SearchHit {
  std::uint32_t doc_id = 0;
  double score = 0.0;

  bool operator==(const SearchHit&) const = default;
};

// Descending score, then ascending doc id.
inline bool ranks_before(const SearchHit& a, const SearchHit& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id < b.doc_id;
}

struct InvertedList {
  std::vector<std::uint32_t> ids;
  // ids.size() * M bytes.
  std::vector<std::uint8_t> codes;

  std::size_t size() const noexcept { return ids.size(); }
  bool operator==(const InvertedList&) const = default;
};

class IvfIndex {
 public:
  IvfIndex() = default;
  // Validates shapes and that every doc id in [0, doc_count) appears once.
  IvfIndex(Codebook codebook, Rotation rotation, Matrix coarse_centroids,
           std::vector<InvertedList> lists, std::size_t doc_count);

  const Codebook& codebook() const noexcept { return codebook_; }
  const Rotation& rotation() const noexcept { return rotation_; }
  const Matrix& coarse_centroids() const noexcept { return coarse_; }
  const std::vector<InvertedList>& lists() const noexcept { return lists_; }
  std::size_t num_lists() const noexcept { return lists_.size(); }
  std::size_t doc_count() const noexcept { return doc_count_; }
  std::size_t dim() const noexcept { return codebook_.dim(); }

  // Codes ordered by document id.
  CodeTable codes_by_doc() const;

  // Code entries: doc_count * (4-byte id + M code bytes).
  std::size_t code_bytes() const noexcept;
  // Coarse centroids plus one u32 length per list.
  std::size_t overhead_bytes() const noexcept;

  bool operator==(const IvfIndex&) const = default;

 private:
  Codebook codebook_;
  Rotation rotation_;
  Matrix coarse_;
  std::vector<InvertedList> lists_;
  std::size_t doc_count_ = 0;
};

// max(1, round(doc_count / 1600)); 5000 lists for 8M documents.
std::size_t default_num_lists(std::size_t doc_count);

inline constexpr std::size_t kCoarseKMeansIters = 20;

// `docs` are encoder outputs in the unrotated space. They are rotated,
// quantized with the nearest-centroid rule, and the coarse k-means runs on
// the reconstructions.
IvfIndex build_ivf(const Matrix& docs, Codebook codebook, Rotation rotation,
                   std::size_t num_lists, std::uint64_t seed);

// Same, for documents whose codes are already fixed.
IvfIndex build_ivf_from_codes(const CodeTable& codes, Codebook codebook,
                              Rotation rotation, std::size_t num_lists,
                              std::uint64_t seed);

struct SearchStats {
  std::size_t lists_probed = 0;
  std::size_t docs_scored = 0;
};

// q is in the unrotated space.
std::vector<SearchHit> search(const IvfIndex& index, std::span<const float> q,
                              std::size_t nprobe, std::size_t topk,
                              SearchStats* stats = nullptr);

// Scores every document; equivalent to nprobe = n.
std::vector<SearchHit> exhaustive_search(const IvfIndex& index,
                                         std::span<const float> q,
                                         std::size_t topk);

// Keeps the best `topk` hits in rank order.
void select_top(std::vector<SearchHit>& hits, std::size_t topk);

}  // namespace repconc
