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

#include "repconc/synthetic.hpp"

#include <cmath>
#include <string>

namespace repconc {
namespace {

// Writes a direction drawn uniformly from the sphere, scaled to `norm`.
void random_direction(Rng& rng, std::span<double> out, double norm) {
  double sq = 0.0;
  for (double& v : out) {
    v = rng.normal();
    sq += v * v;
  }
  const double scale = sq > 0.0 ? norm / std::sqrt(sq) : 0.0;
  for (double& v : out) v *= scale;
}

void store_unit(std::span<const double> v, std::span<float> out) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  const double inv = sq > 0.0 ? 1.0 / std::sqrt(sq) : 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] * inv);
}

QuerySet make_queries(const Matrix& docs, const std::vector<std::uint32_t>& relevant,
                      double noise, const std::string& prefix, Rng rng) {
  const std::size_t dim = docs.cols();
  QuerySet out;
  out.vectors = Matrix(relevant.size(), dim);
  std::vector<double> v(dim);
  std::vector<double> eps(dim);
  for (std::size_t q = 0; q < relevant.size(); ++q) {
    out.ids.push_back(prefix + std::to_string(q));
    random_direction(rng, eps, noise);
    auto d = docs.row(relevant[q]);
    for (std::size_t i = 0; i < dim; ++i) v[i] = d[i] + eps[i];
    store_unit(v, out.vectors.row(q));
  }
  return out;
}

Qrels qrels_for(const QuerySet& queries, const std::vector<std::uint32_t>& relevant) {
  Qrels out;
  for (std::size_t q = 0; q < relevant.size(); ++q) out[queries.ids[q]][relevant[q]] = 1;
  return out;
}

}  // namespace

Qrels SyntheticBenchmark::train_qrels() const {
  return qrels_for(train_queries, train_relevant);
}

Qrels SyntheticBenchmark::test_qrels() const { return qrels_for(test_queries, test_relevant); }

SyntheticBenchmark generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_docs == 0 || spec.dim == 0 || spec.num_clusters == 0) {
    throw ConfigError("synthetic: docs, dim and clusters must be positive");
  }
  if (spec.num_docs > 0xFFFFFFFFu) throw ConfigError("synthetic: too many documents");
  if (!(spec.noise >= 0.0) || !(spec.cluster_spread >= 0.0)) {
    throw ConfigError("synthetic: noise and spread must be non-negative");
  }
  const Rng root(spec.seed);
  Rng centre_rng = root.split(1);
  Rng doc_rng = root.split(2);
  Rng pick_rng = root.split(3);

  const std::size_t dim = spec.dim;
  MatrixD centres(spec.num_clusters, dim);
  for (std::size_t g = 0; g < spec.num_clusters; ++g) {
    random_direction(centre_rng, centres.row(g), 1.0);
  }

  SyntheticBenchmark out;
  out.docs = Matrix(spec.num_docs, dim);
  out.doc_cluster.resize(spec.num_docs);
  std::vector<double> offset(dim);
  std::vector<double> v(dim);
  for (std::size_t n = 0; n < spec.num_docs; ++n) {
    const auto g = static_cast<std::uint32_t>(doc_rng.uniform_index(spec.num_clusters));
    out.doc_cluster[n] = g;
    random_direction(doc_rng, offset, spec.cluster_spread);
    auto c = centres.row(g);
    for (std::size_t i = 0; i < dim; ++i) v[i] = c[i] + offset[i];
    store_unit(v, out.docs.row(n));
  }

  auto pick = [&](std::size_t count) {
    std::vector<std::uint32_t> ids(count);
    for (auto& id : ids) id = static_cast<std::uint32_t>(pick_rng.uniform_index(spec.num_docs));
    return ids;
  };
  out.train_relevant = pick(spec.train_queries);
  out.test_relevant = pick(spec.test_queries);
  out.train_queries =
      make_queries(out.docs, out.train_relevant, spec.noise, "train", root.split(4));
  out.test_queries = make_queries(out.docs, out.test_relevant, spec.noise, "test", root.split(5));
  return out;
}

}  // namespace repconc
