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

#include "repconc/ivf.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace repconc {
namespace {

IvfIndex assemble(const CodeTable& codes, Codebook codebook, Rotation rotation,
                  std::size_t num_lists, std::uint64_t seed) {
  const std::size_t doc_count = codes.rows();
  if (doc_count == 0) throw ConfigError("build_ivf: empty corpus");
  if (num_lists == 0 || num_lists > doc_count) {
    throw ConfigError("build_ivf: n=" + std::to_string(num_lists) +
                      " must be in [1, doc_count=" + std::to_string(doc_count) + "]");
  }
  if (codes.num_blocks() != codebook.num_blocks()) {
    throw DimensionError("build_ivf: codes have M=" + std::to_string(codes.num_blocks()) +
                         ", codebook has M=" + std::to_string(codebook.num_blocks()));
  }
  Matrix recon(doc_count, codebook.dim());
  parallel_for(doc_count, [&](std::size_t r) {
    reconstruct_into(codes.row(r), codebook, recon.row(r));
  });
  KMeansResult km = kmeans(recon, num_lists, kCoarseKMeansIters, seed);
  std::vector<InvertedList> lists(num_lists);
  for (std::size_t r = 0; r < doc_count; ++r) {
    InvertedList& list = lists[km.assignment[r]];
    list.ids.push_back(static_cast<std::uint32_t>(r));
    auto code = codes.row(r);
    list.codes.insert(list.codes.end(), code.begin(), code.end());
  }
  return IvfIndex(std::move(codebook), std::move(rotation), std::move(km.centroids),
                  std::move(lists), doc_count);
}

}  // namespace

IvfIndex::IvfIndex(Codebook codebook, Rotation rotation, Matrix coarse_centroids,
                   std::vector<InvertedList> lists, std::size_t doc_count)
    : codebook_(std::move(codebook)),
      rotation_(std::move(rotation)),
      coarse_(std::move(coarse_centroids)),
      lists_(std::move(lists)),
      doc_count_(doc_count) {
  if (doc_count_ == 0) throw ConfigError("ivf index: doc_count must be positive");
  if (lists_.empty() || coarse_.rows() != lists_.size()) {
    throw DimensionError("ivf index: " + std::to_string(coarse_.rows()) +
                         " coarse centroids for " + std::to_string(lists_.size()) +
                         " lists");
  }
  if (coarse_.cols() != codebook_.dim()) {
    throw DimensionError("ivf index: coarse centroid dim " +
                         std::to_string(coarse_.cols()) + " != D " +
                         std::to_string(codebook_.dim()));
  }
  if (rotation_.dim() != codebook_.dim()) {
    throw DimensionError("ivf index: rotation dim " + std::to_string(rotation_.dim()) +
                         " != D " + std::to_string(codebook_.dim()));
  }
  const std::size_t m = codebook_.num_blocks();
  std::vector<bool> seen(doc_count_, false);
  std::size_t total = 0;
  for (const InvertedList& list : lists_) {
    if (list.codes.size() != list.ids.size() * m) {
      throw DimensionError("ivf index: list code bytes do not match its length");
    }
    for (std::uint32_t id : list.ids) {
      if (id >= doc_count_ || seen[id]) {
        throw CorruptIndexError("lists", "doc id " + std::to_string(id) +
                                             " is out of range or repeated");
      }
      seen[id] = true;
    }
    for (std::uint8_t c : list.codes) {
      if (c >= codebook_.num_centroids()) {
        throw CorruptIndexError("lists", "code " + std::to_string(c) + " >= K");
      }
    }
    total += list.size();
  }
  if (total != doc_count_) {
    throw CorruptIndexError("lists", "list lengths sum to " + std::to_string(total) +
                                         ", doc_count is " + std::to_string(doc_count_));
  }
}

CodeTable IvfIndex::codes_by_doc() const {
  const std::size_t m = codebook_.num_blocks();
  CodeTable out(doc_count_, m);
  for (const InvertedList& list : lists_) {
    for (std::size_t e = 0; e < list.size(); ++e) {
      std::copy_n(list.codes.begin() + static_cast<std::ptrdiff_t>(e * m), m,
                  out.row(list.ids[e]).begin());
    }
  }
  return out;
}

std::size_t IvfIndex::code_bytes() const noexcept {
  return doc_count_ * (sizeof(std::uint32_t) + codebook_.num_blocks());
}

std::size_t IvfIndex::overhead_bytes() const noexcept {
  return coarse_.rows() * coarse_.cols() * sizeof(float) +
         lists_.size() * sizeof(std::uint32_t);
}

std::size_t default_num_lists(std::size_t doc_count) {
  const auto n = static_cast<std::size_t>(std::llround(static_cast<double>(doc_count) / 1600.0));
  return std::max<std::size_t>(1, n);
}

IvfIndex build_ivf(const Matrix& docs, Codebook codebook, Rotation rotation,
                   std::size_t num_lists, std::uint64_t seed) {
  if (docs.rows() == 0) throw ConfigError("build_ivf: empty corpus");
  if (docs.cols() != codebook.dim()) {
    throw DimensionError("build_ivf: embedding dim " + std::to_string(docs.cols()) +
                         " != codebook dim " + std::to_string(codebook.dim()));
  }
  const CodeTable codes = quantize_all(rotation.apply_rows(docs), codebook);
  return assemble(codes, std::move(codebook), std::move(rotation), num_lists, seed);
}

IvfIndex build_ivf_from_codes(const CodeTable& codes, Codebook codebook,
                              Rotation rotation, std::size_t num_lists,
                              std::uint64_t seed) {
  return assemble(codes, std::move(codebook), std::move(rotation), num_lists, seed);
}

void select_top(std::vector<SearchHit>& hits, std::size_t topk) {
  if (hits.size() > topk) {
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(topk),
                      hits.end(), ranks_before);
    hits.resize(topk);
  } else {
    std::sort(hits.begin(), hits.end(), ranks_before);
  }
}

std::vector<SearchHit> search(const IvfIndex& index, std::span<const float> q,
                              std::size_t nprobe, std::size_t topk,
                              SearchStats* stats) {
  if (nprobe == 0 || nprobe > index.num_lists()) {
    throw ConfigError("search: nprobe=" + std::to_string(nprobe) + " must be in [1, " +
                      std::to_string(index.num_lists()) + "]");
  }
  if (topk == 0) throw ConfigError("search: topk must be positive");
  if (q.size() != index.dim()) {
    throw DimensionError("search: query dim " + std::to_string(q.size()) + " != D " +
                         std::to_string(index.dim()));
  }
  const std::vector<float> rotated = index.rotation().apply(q);

  std::vector<std::pair<double, std::size_t>> coarse(index.num_lists());
  for (std::size_t c = 0; c < index.num_lists(); ++c) {
    coarse[c] = {squared_l2(rotated, index.coarse_centroids().row(c)), c};
  }
  std::partial_sort(coarse.begin(), coarse.begin() + static_cast<std::ptrdiff_t>(nprobe),
                    coarse.end());

  const AdcTable table = adc_table(rotated, index.codebook());
  std::vector<SearchHit> hits;
  std::vector<double> scores;
  std::size_t scored = 0;
  for (std::size_t p = 0; p < nprobe; ++p) {
    const InvertedList& list = index.lists()[coarse[p].second];
    scores.resize(list.size());
    adc_scan(table, list.codes, scores);
    for (std::size_t e = 0; e < list.size(); ++e) hits.push_back({list.ids[e], scores[e]});
    scored += list.size();
  }
  select_top(hits, topk);
  if (stats != nullptr) {
    stats->lists_probed = nprobe;
    stats->docs_scored = scored;
  }
  return hits;
}

std::vector<SearchHit> exhaustive_search(const IvfIndex& index,
                                         std::span<const float> q,
                                         std::size_t topk) {
  return search(index, q, index.num_lists(), topk);
}

}  // namespace repconc
