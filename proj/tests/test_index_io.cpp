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

#include <gtest/gtest.h>

#include <filesystem>

#include "repconc/checkpoint.hpp"
#include "repconc/error.hpp"
#include "repconc/index_io.hpp"
#include "repconc/ivf.hpp"
#include "test_util.hpp"

namespace repconc {
namespace {

using testing::random_codebook;
using testing::random_matrix;
using testing::random_rotation;
using testing::TempDir;

IvfIndex small_index(bool rotate, std::uint64_t seed = 1) {
  const Matrix docs = random_matrix(60, 8, seed);
  Rotation r = rotate ? Rotation::from_matrix(random_rotation(8, seed + 1)) : Rotation::none(8);
  return build_ivf(docs, random_codebook(8, 4, 8, seed + 2), r, 3, seed + 3);
}

TEST(IndexIo, RoundTripGivesIdenticalSearchOutput) {
  TempDir dir("io");
  for (bool rotate : {false, true}) {
    const IvfIndex index = small_index(rotate);
    write_index(index, dir.file("x.rcix"));
    const IvfIndex back = read_index(dir.file("x.rcix"));
    EXPECT_EQ(back, index);
    const Matrix queries = random_matrix(100, 8, 77);
    for (std::size_t q = 0; q < queries.rows(); ++q) {
      EXPECT_EQ(search(back, queries.row(q), 2, 10), search(index, queries.row(q), 2, 10));
    }
  }
}

TEST(IndexIo, LayoutAndCodeSectionSize) {
  const IvfIndex index = small_index(true);
  const auto bytes = serialize_index(index);
  const std::size_t d = 8, m = 4, k = 8, n = 3, docs = 60;
  const std::size_t expected = kIndexHeaderBytes + d * d * 4 + m * k * (d / m) * 4 +
                               n * d * 4 + n * 4 + docs * (4 + m) + 4;
  EXPECT_EQ(bytes.size(), expected);
  EXPECT_EQ(index.code_bytes(), docs * (4 + m));
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "RCIX");
  EXPECT_EQ(bytes[4], kFormatVersion);
  EXPECT_EQ(bytes[kIndexHeaderBytes - 1], 1);
}

TEST(IndexIo, EverySingleByteCorruptionIsDetected) {
  const auto bytes = serialize_index(small_index(true, 5));
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    for (std::uint8_t mask : {0x01, 0x80, 0xFF}) {
      auto bad = bytes;
      bad[i] ^= mask;
      EXPECT_THROW(deserialize_index(bad), CorruptIndexError) << "byte " << i;
    }
  }
}

TEST(IndexIo, TruncationNamesTheSection) {
  const IvfIndex index = small_index(true, 6);
  const auto bytes = serialize_index(index);
  auto section_of = [&](std::size_t keep) {
    std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<long>(keep));
    try {
      deserialize_index(cut);
    } catch (const CorruptIndexError& e) {
      return e.section();
    }
    return std::string("none");
  };
  const std::size_t rot_end = kIndexHeaderBytes + 8 * 8 * 4;
  const std::size_t cb_end = rot_end + 4 * 8 * 2 * 4;
  const std::size_t coarse_end = cb_end + 3 * 8 * 4;
  EXPECT_EQ(section_of(10), "header");
  EXPECT_EQ(section_of(kIndexHeaderBytes + 5), "rotation");
  EXPECT_EQ(section_of(rot_end + 5), "codebook");
  EXPECT_EQ(section_of(cb_end + 5), "coarse_centroids");
  EXPECT_EQ(section_of(coarse_end + 6), "lists");
  EXPECT_EQ(section_of(bytes.size() - 2), "checksum");
  auto longer = bytes;
  longer.push_back(0);
  EXPECT_THROW(deserialize_index(longer), CorruptIndexError);
}

TEST(IndexIo, BadMagicAndVersion) {
  auto bytes = serialize_index(small_index(false));
  auto bad = bytes;
  bad[0] = 'X';
  try {
    deserialize_index(bad);
    FAIL();
  } catch (const CorruptIndexError& e) {
    EXPECT_EQ(e.section(), "header");
    EXPECT_NE(std::string(e.what()).find("magic"), std::string::npos);
  }
  bad = bytes;
  bad[4] = 2;
  try {
    deserialize_index(bad);
    FAIL();
  } catch (const CorruptIndexError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}

TEST(IndexIo, HeaderOnlyRead) {
  TempDir dir("hdr");
  write_index(small_index(true), dir.file("a.rcix"));
  const IndexHeader h = read_index_header(dir.file("a.rcix"));
  EXPECT_EQ(h.dim, 8U);
  EXPECT_EQ(h.num_blocks, 4U);
  EXPECT_EQ(h.num_centroids, 8U);
  EXPECT_EQ(h.num_lists, 3U);
  EXPECT_EQ(h.doc_count, 60U);
  EXPECT_TRUE(h.rotation);
}

TEST(IndexIo, MissingFileIsAnInputError) {
  EXPECT_THROW(read_index("/nonexistent/repconc.rcix"), InputError);
  EXPECT_THROW(read_embeddings("/nonexistent/x.rcem"), InputError);
}

TEST(Embeddings, RoundTripAndCorruption) {
  TempDir dir("emb");
  const Matrix m = random_matrix(7, 5, 3);
  write_embeddings(dir.file("e.rcem"), m);
  EXPECT_EQ(read_embeddings(dir.file("e.rcem")), m);
  EXPECT_EQ(std::filesystem::file_size(dir.file("e.rcem")), 16U + 7 * 5 * 4);
  auto bytes = read_file_bytes(dir.file("e.rcem"));
  bytes.pop_back();
  write_file_bytes(dir.file("t.rcem"), bytes);
  EXPECT_THROW(read_embeddings(dir.file("t.rcem")), InputError);
  bytes = read_file_bytes(dir.file("e.rcem"));
  bytes[1] = 'x';
  write_file_bytes(dir.file("m.rcem"), bytes);
  EXPECT_THROW(read_embeddings(dir.file("m.rcem")), InputError);
}

TEST(Codes, RoundTrip) {
  TempDir dir("codes");
  CodeTable t(3, 2, {1, 2, 3, 4, 5, 255});
  write_codes(dir.file("c.rccd"), t);
  EXPECT_EQ(read_codes(dir.file("c.rccd")), t);
}

TEST(Crc, KnownValue) {
  const std::string s = "123456789";
  EXPECT_EQ(crc32_of(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()), 0xCBF43926U);
}

TEST(TextFormats, QueriesParse) {
  const QuerySet q = parse_queries("a\t1 2 3\nb\t4 5 6\n\nc\t-1 0.5 1e-3\n");
  ASSERT_EQ(q.size(), 3U);
  EXPECT_EQ(q.ids, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(q.vectors.cols(), 3U);
  EXPECT_FLOAT_EQ(q.vectors(2, 2), 1e-3F);
  EXPECT_EQ(parse_queries("").size(), 0U);
}

TEST(TextFormats, QueryErrorsCarryLineNumbers) {
  try {
    parse_queries("a\t1 2\nb\t1 2 3\n", "q.tsv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2U);
    EXPECT_NE(std::string(e.what()).find("q.tsv:2"), std::string::npos);
  }
  EXPECT_THROW(parse_queries("a 1 2\n"), ParseError);
  EXPECT_THROW(parse_queries("a\t1 x\n"), ParseError);
  EXPECT_THROW(parse_queries("a\t1 nan\n"), ParseError);
}

TEST(TextFormats, QrelsParseAndKeepMaxGrade) {
  const Qrels r = parse_qrels("q1\t3\t1\nq1\t3\t2\nq1\t7\t0\nq2\t1\t1\n");
  ASSERT_EQ(r.size(), 2U);
  EXPECT_EQ(r.at("q1").at(3), 2);
  EXPECT_EQ(r.at("q1").at(7), 0);
  EXPECT_EQ(r.at("q2").at(1), 1);
  EXPECT_EQ(parse_qrels("q\t3\t2\nq\t3\t1\n").at("q").at(3), 2);
  EXPECT_TRUE(parse_qrels("").empty());
}

TEST(TextFormats, QrelsErrors) {
  try {
    parse_qrels("q\t1\t1\nq\tone\t1\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2U);
  }
  EXPECT_THROW(parse_qrels("q\t1\n"), ParseError);
  EXPECT_THROW(parse_qrels("q\t1\tx\n"), ParseError);
  EXPECT_THROW(parse_qrels("q\t-1\t1\n"), ParseError);
}

TEST(TextFormats, RunOrderedByRank) {
  const Rankings r = parse_run("q 5 2 0.1\nq 9 1 0.9\np 1 1 3\n");
  EXPECT_EQ(r.at("q"), (std::vector<std::uint32_t>{9, 5}));
  EXPECT_EQ(r.at("p"), (std::vector<std::uint32_t>{1}));
  EXPECT_THROW(parse_run("q 5 0 0.1\n"), ParseError);
  EXPECT_THROW(parse_run("q 5 1\n"), ParseError);
}

TEST(TextFormats, WriteReadRoundTrip) {
  TempDir dir("text");
  QuerySet q;
  q.ids = {"x", "y"};
  q.vectors = random_matrix(2, 4, 9);
  write_queries(dir.file("q.tsv"), q);
  const QuerySet back = read_queries(dir.file("q.tsv"));
  EXPECT_EQ(back.ids, q.ids);
  EXPECT_EQ(back.vectors, q.vectors);
  const Qrels r{{"x", {{1, 1}, {4, 2}}}};
  write_qrels(dir.file("r.tsv"), r);
  EXPECT_EQ(read_qrels(dir.file("r.tsv")), r);
}

TEST(Checkpoint, RoundTrip) {
  TempDir dir("ckpt");
  Checkpoint c;
  c.model = Model::from_warmup(Encoder::linear(testing::random_matrix_d(8, 6, 1)),
                               Encoder::table(testing::random_matrix_d(5, 8, 2)),
                               random_codebook(8, 2, 4, 3),
                               Rotation::from_matrix(random_rotation(8, 4)));
  c.doc_codes = CodeTable(5, 2, {0, 1, 2, 3, 3, 2, 1, 0, 0, 0});
  c.info["seed"] = "4";
  save_checkpoint(dir.path().string(), c);
  const Checkpoint back = load_checkpoint(dir.path().string());
  EXPECT_EQ(back.model.codebook, c.model.codebook);
  EXPECT_EQ(back.model.rotation, c.model.rotation);
  EXPECT_EQ(back.model.doc_encoder.kind(), EncoderKind::kEmbeddingTable);
  EXPECT_EQ(back.model.query_encoder.kind(), EncoderKind::kLinear);
  // Parameters are stored as 32-bit floats.
  const auto& a = back.model.query_encoder.parameters();
  const auto& b = c.model.query_encoder.parameters();
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    EXPECT_EQ(a.data()[i], static_cast<double>(static_cast<float>(b.data()[i])));
  }
  ASSERT_TRUE(back.doc_codes.has_value());
  EXPECT_EQ(*back.doc_codes, *c.doc_codes);
  EXPECT_EQ(back.info.at("seed"), "4");
}

TEST(Checkpoint, MissingDirectoryIsAnInputError) {
  EXPECT_THROW(load_checkpoint("/nonexistent/ckpt"), InputError);
}

}  // namespace
}  // namespace repconc
