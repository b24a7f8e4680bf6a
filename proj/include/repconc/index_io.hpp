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

// On-disk formats. Binary files are little-endian with no padding:
//
//   RCEM  embeddings   "RCEM" u32 version=1, u32 rows, u32 dim, rows*dim f32
//   RCIX  IVF index    "RCIX" u32 version=1, u32 D, M, K, n, doc_count,
//                      u8 rotation_flag, [D*D f32 rotation], M*K*(D/M) f32
//                      codebook, n*D f32 coarse centroids, n lists of
//                      (u32 len, len * (u32 doc id, M code bytes)),
//                      u32 CRC-32 of every preceding byte
//   RCCD  code table   "RCCD" u32 version=1, u32 rows, u32 M, rows*M bytes
//
// Text formats are tab-separated: queries "qid\tv1 v2 ... vD", qrels
// "qid\tdocid\tgrade", runs "qid docid rank score" (space-separated).

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "repconc/ivf.hpp"
#include "repconc/numerics.hpp"
#include "repconc/pq.hpp"

namespace repconc {

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kIndexHeaderBytes = 4 + 4 + 5 * 4 + 1;

void write_embeddings(const std::string& path, const Matrix& rows);
Matrix read_embeddings(const std::string& path);

std::vector<std::uint8_t> serialize_index(const IvfIndex& index);
IvfIndex deserialize_index(const std::vector<std::uint8_t>& bytes);
void write_index(const IvfIndex& index, const std::string& path);
IvfIndex read_index(const std::string& path);

struct IndexHeader {
  std::uint32_t version = 0;
  std::uint32_t dim = 0;
  std::uint32_t num_blocks = 0;
  std::uint32_t num_centroids = 0;
  std::uint32_t num_lists = 0;
  std::uint32_t doc_count = 0;
  bool rotation = false;
};
IndexHeader read_index_header(const std::string& path);

void write_codes(const std::string& path, const CodeTable& codes);
CodeTable read_codes(const std::string& path);

struct QuerySet {
  std::vector<std::string> ids;
  Matrix vectors;

  std::size_t size() const noexcept { return ids.size(); }
};

// qid -> (docid -> grade)
using Qrels = std::map<std::string, std::map<std::uint32_t, int>>;
// qid -> doc ids in rank order
using Rankings = std::map<std::string, std::vector<std::uint32_t>>;

QuerySet read_queries(const std::string& path);
void write_queries(const std::string& path, const QuerySet& queries);
QuerySet parse_queries(const std::string& text, const std::string& source = "<queries>");

Qrels read_qrels(const std::string& path);
void write_qrels(const std::string& path, const Qrels& qrels);
Qrels parse_qrels(const std::string& text, const std::string& source = "<qrels>");

Rankings read_run(const std::string& path);
Rankings parse_run(const std::string& text, const std::string& source = "<run>");

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t size);

}  // namespace repconc
