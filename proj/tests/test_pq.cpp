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

#include <cmath>

#include "repconc/pq.hpp"
#include "test_util.hpp"

namespace repconc {
namespace {

using testing::random_codebook;
using testing::random_matrix;

// Exhaustive per-block argmin, ties to the first index seen.
std::vector<std::uint8_t> brute_force_codes(std::span<const float> v, const Codebook& cb) {
  std::vector<std::uint8_t> out;
  const std::size_t s = cb.sub_dim();
  for (std::size_t i = 0; i < cb.num_blocks(); ++i) {
    double best = INFINITY;
    std::size_t arg = 0;
    for (std::size_t j = 0; j < cb.num_centroids(); ++j) {
      double d = 0.0;
      for (std::size_t t = 0; t < s; ++t) {
        const double diff = static_cast<double>(v[i * s + t]) - cb.centroid(i, j)[t];
        d += diff * diff;
      }
      if (d < best) {
        best = d;
        arg = j;
      }
    }
    out.push_back(static_cast<std::uint8_t>(arg));
  }
  return out;
}

TEST(Split, Examples) {
  const std::vector<float> v{1, 2, 3, 4};
  const auto two = split(v, 2);
  ASSERT_EQ(two.size(), 2U);
  EXPECT_EQ(std::vector<float>(two[0].begin(), two[0].end()), (std::vector<float>{1, 2}));
  EXPECT_EQ(std::vector<float>(two[1].begin(), two[1].end()), (std::vector<float>{3, 4}));
  EXPECT_EQ(split(v, 1)[0].size(), 4U);
  const auto four = split(v, 4);
  ASSERT_EQ(four.size(), 4U);
  EXPECT_EQ(four[3][0], 4.0F);
  EXPECT_THROW(split(v, 3), DimensionError);
}

TEST(Codebook, ShapeChecksNameBothValues) {
  try {
    check_pq_shape(10, 4, 16);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("10"), std::string::npos);
    EXPECT_NE(what.find('4'), std::string::npos);
  }
  EXPECT_THROW(check_pq_shape(8, 2, 257), ConfigError);
  EXPECT_THROW(check_pq_shape(8, 2, 0), ConfigError);
  EXPECT_NO_THROW(check_pq_shape(8, 2, 256));
  EXPECT_THROW(Codebook(4, 2, 2, std::vector<float>(7)), DimensionError);
  std::vector<float> bad(8, 0.0F);
  bad[3] = INFINITY;
  EXPECT_ANY_THROW(Codebook(4, 2, 2, bad));
}

TEST(Quantize, TwoCentroidExample) {
  const Codebook cb(2, 1, 2, {0, 0, 1, 1});
  const std::vector<float> v{0.1F, 0.1F};
  EXPECT_EQ(quantize(v, cb).codes, std::vector<std::uint8_t>{0});
  const std::vector<float> w{1, 1};
  const CodeSequence c = quantize(w, cb);
  EXPECT_EQ(c.codes, std::vector<std::uint8_t>{1});
  EXPECT_EQ(quantization_error(w, c.codes, cb), 0.0);
}

TEST(Quantize, TiesGoToLowestIndex) {
  const Codebook cb(1, 1, 3, {1, -1, 1});
  const std::vector<float> v{0};
  EXPECT_EQ(quantize(v, cb)[0], 0);
}

TEST(Quantize, MatchesExhaustiveScan) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Codebook cb = random_codebook(8, 2, 4, seed);
    const Matrix v = random_matrix(1, 8, seed + 1000);
    EXPECT_EQ(quantize(v.row(0), cb).codes, brute_force_codes(v.row(0), cb));
  }
}

TEST(Quantize, OptimalAgainstEveryAlternativeCode) {
  const Codebook cb = random_codebook(6, 3, 16, 4);
  const Matrix v = random_matrix(20, 6, 5);
  for (std::size_t r = 0; r < v.rows(); ++r) {
    const CodeSequence best = quantize(v.row(r), cb);
    for (std::size_t i = 0; i < 3; ++i) {
      const auto block = v.row(r).subspan(i * 2, 2);
      const double chosen = squared_l2(block, cb.centroid(i, best[i]));
      for (std::size_t j = 0; j < 16; ++j) {
        EXPECT_LE(chosen, squared_l2(block, cb.centroid(i, j)));
      }
    }
  }
}

TEST(Quantize, Idempotent) {
  const Codebook cb = random_codebook(16, 4, 8, 8);
  const Matrix v = random_matrix(50, 16, 9);
  for (std::size_t r = 0; r < v.rows(); ++r) {
    const CodeSequence c = quantize(v.row(r), cb);
    const std::vector<float> hat = reconstruct(c, cb);
    EXPECT_EQ(quantize(hat, cb), c);
  }
}

TEST(Quantize, DimensionMismatch) {
  const Codebook cb = random_codebook(8, 2, 4, 1);
  const std::vector<float> v(6);
  EXPECT_THROW(quantize(v, cb), DimensionError);
  EXPECT_THROW(adc_table(v, cb), DimensionError);
}

TEST(Quantize, QuantizeAllMatchesRowByRow) {
  const Codebook cb = random_codebook(16, 4, 16, 2);
  const Matrix v = random_matrix(300, 16, 3);
  const CodeTable all = quantize_all(v, cb);
  ASSERT_EQ(all.rows(), 300U);
  for (std::size_t r = 0; r < v.rows(); ++r) {
    const CodeSequence c = quantize(v.row(r), cb);
    EXPECT_TRUE(std::equal(c.codes.begin(), c.codes.end(), all.row(r).begin()));
  }
}

TEST(Reconstruct, ConcatenatesCentroids) {
  const Codebook cb = random_codebook(8, 4, 5, 6);
  const std::vector<std::uint8_t> codes{4, 0, 2, 1};
  const std::vector<float> hat = reconstruct(codes, cb);
  std::vector<float> manual;
  for (std::size_t i = 0; i < 4; ++i) {
    auto c = cb.centroid(i, codes[i]);
    manual.insert(manual.end(), c.begin(), c.end());
  }
  EXPECT_EQ(hat, manual);
}

TEST(Reconstruct, SingleBlockIsTheCentroid) {
  const Codebook cb = random_codebook(4, 1, 3, 7);
  const std::vector<float> hat = reconstruct(std::vector<std::uint8_t>{2}, cb);
  EXPECT_TRUE(std::equal(hat.begin(), hat.end(), cb.centroid(0, 2).begin()));
}

TEST(Reconstruct, OutOfRangeCodeIsCorruption) {
  const Codebook cb = random_codebook(4, 2, 3, 7);
  try {
    reconstruct(std::vector<std::uint8_t>{0, 3}, cb);
    FAIL() << "expected CorruptIndexError";
  } catch (const CorruptIndexError& e) {
    EXPECT_EQ(e.section(), "codes");
  }
}

TEST(Adc, TableExample) {
  const Codebook cb(4, 2, 2, {1, 0, 0, 1, 0, 0, 2, 2});
  const std::vector<float> q{1, 0, 0, 1};
  const AdcTable t = adc_table(q, cb);
  EXPECT_EQ(t.at(0, 0), 1.0);
  EXPECT_EQ(t.at(0, 1), 0.0);
  EXPECT_EQ(t.at(1, 0), 0.0);
  EXPECT_EQ(t.at(1, 1), 2.0);
  EXPECT_EQ(adc_score(t, std::vector<std::uint8_t>{1, 1}), 2.0);
}

TEST(Adc, ZeroQuery) {
  const Codebook cb = random_codebook(8, 2, 4, 3);
  const std::vector<float> q(8, 0.0F);
  const AdcTable t = adc_table(q, cb);
  for (double v : t.values()) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(adc_score(t, std::vector<std::uint8_t>{1, 3}), 0.0);
}

TEST(Adc, SingleCentroid) {
  const Codebook cb = random_codebook(8, 4, 1, 3);
  const Matrix q = random_matrix(1, 8, 4);
  const AdcTable t = adc_table(q.row(0), cb);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(t.at(i, 0), inner_product(q.row(0).subspan(i * 2, 2), cb.centroid(i, 0)));
  }
}

TEST(Adc, ScoreEqualsInnerProductWithReconstruction) {
  const Codebook cb = random_codebook(64, 8, 32, 10);
  const Matrix q = random_matrix(200, 64, 11);
  const Matrix d = random_matrix(200, 64, 12);
  for (std::size_t r = 0; r < q.rows(); ++r) {
    const CodeSequence c = quantize(d.row(r), cb);
    const std::vector<float> hat = reconstruct(c, cb);
    double oracle = 0.0;
    for (std::size_t t = 0; t < 64; ++t) oracle += static_cast<double>(q.row(r)[t]) * hat[t];
    EXPECT_NEAR(adc_score(adc_table(q.row(r), cb), c), oracle, 1e-4);
  }
}

TEST(Adc, ScanMatchesPerDocumentScore) {
  const Codebook cb = random_codebook(32, 8, 16, 13);
  const Matrix d = random_matrix(37, 32, 14);
  const Matrix q = random_matrix(1, 32, 15);
  const CodeTable codes = quantize_all(d, cb);
  const AdcTable t = adc_table(q.row(0), cb);
  std::vector<double> scores(37);
  adc_scan(t, codes.bytes(), scores);
  for (std::size_t r = 0; r < 37; ++r) EXPECT_EQ(scores[r], adc_score(t, codes.row(r)));
}

TEST(Storage, CompressionRatio) {
  EXPECT_EQ(compression_ratio(768, 48), 64.0);
  EXPECT_EQ(compression_ratio(768, 24), 128.0);
  EXPECT_EQ(CodeSequence{std::vector<std::uint8_t>(48)}.size(), 48U);
}

}  // namespace
}  // namespace repconc
