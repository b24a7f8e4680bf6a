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

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "repconc/training.hpp"

namespace repconc {

double default_lambda(std::size_t num_blocks) {
  if (num_blocks > 16) return 0.05;
  if (num_blocks > 12) return 0.07;
  if (num_blocks > 8) return 0.1;
  if (num_blocks > 4) return 0.2;
  return 0.3;
}

Model Model::from_warmup(Encoder query_encoder, Encoder doc_encoder,
                         const Codebook& codebook, Rotation rotation) {
  Model m;
  m.query_encoder = std::move(query_encoder);
  m.doc_encoder = std::move(doc_encoder);
  m.num_blocks = codebook.num_blocks();
  m.num_centroids = codebook.num_centroids();
  m.codebook = MatrixD(m.num_blocks * m.num_centroids, codebook.sub_dim());
  auto src = codebook.data();
  std::copy(src.begin(), src.end(), m.codebook.data().begin());
  m.rotation = std::move(rotation);
  m.check();
  return m;
}

Codebook Model::export_codebook() const {
  std::vector<float> flat(codebook.data().size());
  std::transform(codebook.data().begin(), codebook.data().end(), flat.begin(),
                 [](double v) { return static_cast<float>(v); });
  return Codebook(dim(), num_blocks, num_centroids, std::move(flat));
}

void Model::check() const {
  const std::size_t d = dim();
  check_pq_shape(d, num_blocks, num_centroids);
  if (query_encoder.output_dim() != d) {
    throw DimensionError("query encoder outputs " +
                         std::to_string(query_encoder.output_dim()) +
                         " dims, document encoder " + std::to_string(d));
  }
  if (codebook.rows() != num_blocks * num_centroids || codebook.cols() != d / num_blocks) {
    throw DimensionError("model codebook shape does not match D/M/K");
  }
  if (rotation.dim() != d) {
    throw DimensionError("rotation dim " + std::to_string(rotation.dim()) + " != D " +
                         std::to_string(d));
  }
}

double ranking_loss(std::span<const double> q, std::span<const double> pos,
                    const std::vector<std::span<const double>>& negs) {
  if (negs.empty()) throw ConfigError("ranking_loss: at least one negative is required");
  const double positive = inner_product(q, pos);
  double peak = positive;
  std::vector<double> scores;
  scores.reserve(negs.size());
  for (const auto& n : negs) {
    scores.push_back(inner_product(q, n));
    peak = std::max(peak, scores.back());
  }
  double acc = std::exp(positive - peak);
  for (double s : scores) acc += std::exp(s - peak);
  return peak + std::log(acc) - positive;
}

double mse_loss(std::span<const double> d, std::span<const double> d_hat) {
  return squared_l2(d, d_hat);
}

LossBreakdown total_loss(const TrainingBatch& batch, double lambda) {
  LossBreakdown out;
  const std::size_t nq = batch.query_ids.size();
  if (nq == 0) return out;
  std::vector<std::span<const double>> negs;
  for (std::size_t a = 0; a < nq; ++a) {
    negs.clear();
    for (std::uint32_t n : batch.negatives[a]) negs.push_back(batch.docs_hat.row(n));
    out.ranking += ranking_loss(batch.queries.row(a), batch.docs_hat.row(batch.positive[a]),
                                negs);
  }
  out.ranking /= static_cast<double>(nq);
  const std::size_t nd = batch.doc_ids.size();
  for (std::size_t t = 0; t < nd; ++t) {
    out.mse += mse_loss(batch.docs.row(t), batch.docs_hat.row(t));
  }
  if (nd > 0) out.mse /= static_cast<double>(nd);
  out.total = out.ranking + lambda * out.mse;
  return out;
}

BatchGradients backward(const TrainingBatch& batch, double lambda, const Model& model) {
  const std::size_t nq = batch.query_ids.size();
  const std::size_t nd = batch.doc_ids.size();
  const std::size_t dim = model.dim();
  const std::size_t m = model.num_blocks;
  const std::size_t sub = model.sub_dim();

  for (std::size_t t = 0; t < nd; ++t) {
    auto code = batch.codes.row(t);
    auto hat = batch.docs_hat.row(t);
    for (std::size_t i = 0; i < m; ++i) {
      if (code[i] >= model.num_centroids) {
        throw InternalError("backward: code out of range for batch document " +
                            std::to_string(batch.doc_ids[t]));
      }
      auto c = model.centroid(i, code[i]);
      for (std::size_t s = 0; s < sub; ++s) {
        if (hat[i * sub + s] != c[s]) {
          throw InternalError("backward: stale codes, d_hat of document " +
                              std::to_string(batch.doc_ids[t]) +
                              " is not the reconstruction of its codes");
        }
      }
    }
  }

  BatchGradients g{MatrixD(nq, dim), MatrixD(nd, dim), MatrixD(nd, dim),
                   MatrixD(model.codebook.rows(), model.codebook.cols())};
  MatrixD rank_grad(nd, dim);
  const double query_weight = 1.0 / static_cast<double>(nq == 0 ? 1 : nq);
  std::vector<double> scores;
  std::vector<std::uint32_t> members;
  for (std::size_t a = 0; a < nq; ++a) {
    members.clear();
    members.push_back(batch.positive[a]);
    members.insert(members.end(), batch.negatives[a].begin(), batch.negatives[a].end());
    scores.resize(members.size());
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < members.size(); ++i) {
      scores[i] = inner_product(batch.queries.row(a), batch.docs_hat.row(members[i]));
      peak = std::max(peak, scores[i]);
    }
    double norm = 0.0;
    for (double& s : scores) {
      s = std::exp(s - peak);
      norm += s;
    }
    auto q = batch.queries.row(a);
    auto gq = g.queries.row(a);
    for (std::size_t i = 0; i < members.size(); ++i) {
      const double coef = (scores[i] / norm - (i == 0 ? 1.0 : 0.0)) * query_weight;
      auto hat = batch.docs_hat.row(members[i]);
      auto gr = rank_grad.row(members[i]);
      for (std::size_t c = 0; c < dim; ++c) {
        gq[c] += coef * hat[c];
        gr[c] += coef * q[c];
      }
    }
  }

  const double mse_weight = nd == 0 ? 0.0 : 2.0 * lambda / static_cast<double>(nd);
  for (std::size_t t = 0; t < nd; ++t) {
    auto d = batch.docs.row(t);
    auto hat = batch.docs_hat.row(t);
    auto gr = rank_grad.row(t);
    auto gd = g.docs.row(t);
    auto gh = g.docs_hat.row(t);
    for (std::size_t c = 0; c < dim; ++c) {
      const double pull = mse_weight * (d[c] - hat[c]);
      gd[c] = gr[c] + pull;
      gh[c] = gr[c] - pull;
    }
    auto code = batch.codes.row(t);
    for (std::size_t i = 0; i < m; ++i) {
      auto gc = g.codebook.row(i * model.num_centroids + code[i]);
      for (std::size_t s = 0; s < sub; ++s) gc[s] += gh[i * sub + s];
    }
  }
  return g;
}

}  // namespace repconc
