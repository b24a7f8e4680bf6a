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

#include "repconc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_set>

namespace repconc {
namespace {

template <typename PerQuery>
MetricValue average(const Rankings& rankings, const Qrels& qrels, std::size_t k,
                    PerQuery per_query) {
  if (k == 0) throw ConfigError("metric cutoff must be positive");
  MetricValue out;
  double sum = 0.0;
  for (const auto& [qid, ranked] : rankings) {
    std::unordered_set<std::uint32_t> relevant;
    if (const auto it = qrels.find(qid); it != qrels.end()) {
      for (const auto& [doc, grade] : it->second) {
        if (grade > 0) relevant.insert(doc);
      }
    }
    if (relevant.empty()) {
      ++out.excluded;
      continue;
    }
    const std::size_t depth = std::min(k, ranked.size());
    sum += per_query(std::span<const std::uint32_t>(ranked.data(), depth), relevant);
    ++out.evaluated;
  }
  out.value = out.evaluated == 0 ? 0.0 : sum / static_cast<double>(out.evaluated);
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

MetricValue mrr_at_k(const Rankings& rankings, const Qrels& qrels, std::size_t k) {
  return average(rankings, qrels, k,
                 [](std::span<const std::uint32_t> top,
                    const std::unordered_set<std::uint32_t>& relevant) {
                   for (std::size_t r = 0; r < top.size(); ++r) {
                     if (relevant.contains(top[r])) return 1.0 / static_cast<double>(r + 1);
                   }
                   return 0.0;
                 });
}

MetricValue recall_at_k(const Rankings& rankings, const Qrels& qrels, std::size_t k) {
  return average(rankings, qrels, k,
                 [](std::span<const std::uint32_t> top,
                    const std::unordered_set<std::uint32_t>& relevant) {
                   std::unordered_set<std::uint32_t> seen;
                   for (std::uint32_t d : top) {
                     if (relevant.contains(d)) seen.insert(d);
                   }
                   return static_cast<double>(seen.size()) /
                          static_cast<double>(relevant.size());
                 });
}

CodeBalance code_balance(const CodeTable& codes, std::size_t num_centroids) {
  if (codes.rows() == 0) throw ConfigError("code_balance: empty code table");
  if (num_centroids == 0 || num_centroids > kMaxCentroids) {
    throw ConfigError("code_balance: K must be in [1, 256]");
  }
  CodeBalance out;
  out.num_blocks = codes.num_blocks();
  out.num_centroids = num_centroids;
  out.histograms.assign(out.num_blocks, std::vector<std::size_t>(num_centroids, 0));
  for (std::size_t r = 0; r < codes.rows(); ++r) {
    auto row = codes.row(r);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i] >= num_centroids) throw CorruptIndexError("codes", "code >= K");
      ++out.histograms[i][row[i]];
    }
  }
  const double n = static_cast<double>(codes.rows());
  out.sorted_usage.assign(num_centroids, 0.0);
  for (const auto& hist : out.histograms) {
    double h = 0.0;
    std::vector<double> usage;
    for (std::size_t c : hist) {
      const double p = static_cast<double>(c) / n;
      usage.push_back(p);
      if (p > 0.0) h -= p * std::log2(p);
    }
    std::sort(usage.begin(), usage.end(), std::greater<>());
    for (std::size_t j = 0; j < usage.size(); ++j) out.sorted_usage[j] += usage[j];
    out.top1_fraction += usage.front();
    out.entropy.push_back(h);
    out.mean_entropy += h;
  }
  const double m = static_cast<double>(out.num_blocks);
  for (double& u : out.sorted_usage) u /= m;
  out.top1_fraction /= m;
  out.mean_entropy /= m;
  return out;
}

double mean_distortion(const Matrix& docs, const Rotation& rotation,
                       const Codebook& codebook, const CodeTable& codes) {
  if (docs.rows() != codes.rows()) {
    throw DimensionError("mean_distortion: " + std::to_string(docs.rows()) + " docs vs " +
                         std::to_string(codes.rows()) + " code rows");
  }
  if (docs.rows() == 0) return 0.0;
  const Matrix rotated = rotation.apply_rows(docs);
  std::vector<float> hat(codebook.dim());
  double sum = 0.0;
  for (std::size_t r = 0; r < docs.rows(); ++r) {
    reconstruct_into(codes.row(r), codebook, hat);
    sum += squared_l2(rotated.row(r), std::span<const float>(hat));
  }
  return sum / static_cast<double>(docs.rows());
}

MetricReport evaluate_run(const Rankings& rankings, const Qrels& qrels,
                          const std::vector<std::size_t>& mrr_cutoffs,
                          const std::vector<std::size_t>& recall_cutoffs) {
  MetricReport report;
  for (std::size_t k : mrr_cutoffs) {
    const MetricValue v = mrr_at_k(rankings, qrels, k);
    report.mrr.emplace_back(k, v.value);
    report.queries_evaluated = v.evaluated;
    report.queries_excluded = v.excluded;
  }
  for (std::size_t k : recall_cutoffs) {
    const MetricValue v = recall_at_k(rankings, qrels, k);
    report.recall.emplace_back(k, v.value);
    report.queries_evaluated = v.evaluated;
    report.queries_excluded = v.excluded;
  }
  return report;
}

std::string MetricReport::to_table() const {
  std::ostringstream out;
  char line[96];
  out << "metric        value\n";
  for (const auto& [k, v] : mrr) {
    std::snprintf(line, sizeof(line), "MRR@%-9zu %.6f\n", k, v);
    out << line;
  }
  for (const auto& [k, v] : recall) {
    std::snprintf(line, sizeof(line), "R@%-11zu %.6f\n", k, v);
    out << line;
  }
  if (distortion) {
    std::snprintf(line, sizeof(line), "%-13s %.6f\n", "distortion", *distortion);
    out << line;
  }
  if (balance) {
    std::snprintf(line, sizeof(line), "%-13s %.6f\n", "entropy_bits", balance->mean_entropy);
    out << line;
    std::snprintf(line, sizeof(line), "%-13s %.6f\n", "top1_usage", balance->top1_fraction);
    out << line;
  }
  std::snprintf(line, sizeof(line), "queries       %zu (excluded %zu)\n", queries_evaluated,
                queries_excluded);
  out << line;
  return out.str();
}

std::string MetricReport::to_csv() const {
  std::ostringstream out;
  out << "metric,cutoff,value\n";
  for (const auto& [k, v] : mrr) out << "mrr," << k << ',' << format_double(v) << '\n';
  for (const auto& [k, v] : recall) out << "recall," << k << ',' << format_double(v) << '\n';
  if (distortion) out << "distortion,," << format_double(*distortion) << '\n';
  if (balance) {
    out << "entropy_bits,," << format_double(balance->mean_entropy) << '\n';
    out << "top1_usage,," << format_double(balance->top1_fraction) << '\n';
  }
  out << "queries_evaluated,," << queries_evaluated << '\n';
  out << "queries_excluded,," << queries_excluded << '\n';
  return out.str();
}

}  // namespace repconc
