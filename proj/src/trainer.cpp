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
#include <numeric>
#include <string>
#include <unordered_map>

#include "repconc/training.hpp"

namespace repconc {
namespace {

void rotate(const Rotation& rotation, std::span<const double> in, std::span<double> out) {
  if (!rotation.enabled()) {
    std::copy(in.begin(), in.end(), out.begin());
    return;
  }
  const Matrix& r = rotation.matrix();
  for (std::size_t i = 0; i < r.rows(); ++i) {
    auto row = r.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * in[j];
    out[i] = acc;
  }
}

void rotate_transposed(const Rotation& rotation, std::span<const double> in,
                       std::span<double> out) {
  if (!rotation.enabled()) {
    std::copy(in.begin(), in.end(), out.begin());
    return;
  }
  const Matrix& r = rotation.matrix();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < r.rows(); ++i) {
    auto row = r.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) out[j] += row[j] * in[i];
  }
}

std::span<const float> feature_row(const Matrix* features, const Encoder& encoder,
                                   std::uint32_t id) {
  if (encoder.kind() == EncoderKind::kEmbeddingTable || features == nullptr) return {};
  return features->row(id);
}

void fill_reconstruction(TrainingBatch& batch, const Model& model) {
  const std::size_t sub = model.sub_dim();
  for (std::size_t t = 0; t < batch.doc_ids.size(); ++t) {
    auto code = batch.codes.row(t);
    auto hat = batch.docs_hat.row(t);
    for (std::size_t i = 0; i < model.num_blocks; ++i) {
      auto c = model.centroid(i, code[i]);
      std::copy(c.begin(), c.end(), hat.begin() + static_cast<std::ptrdiff_t>(i * sub));
    }
  }
}

void check_finite(const MatrixD& m, const char* component) {
  if (!m.all_finite()) throw DivergenceError(component, "parameters became non-finite");
}

}  // namespace

std::size_t TrainingData::num_docs() const {
  return doc_features == nullptr ? 0 : doc_features->rows();
}

std::vector<std::vector<std::uint32_t>> positives_from_qrels(const QuerySet& queries,
                                                             const Qrels& qrels) {
  std::vector<std::vector<std::uint32_t>> out(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto it = qrels.find(queries.ids[q]);
    if (it == qrels.end()) continue;
    for (const auto& [doc, grade] : it->second) {
      if (grade > 0) out[q].push_back(doc);
    }
  }
  return out;
}

TrainingBatch encode_batch(const Model& model, const TrainingData& data,
                           const BatchSpec& spec) {
  const std::size_t nq = spec.queries.size();
  if (spec.positives.size() != nq || spec.negatives.size() != nq) {
    throw DimensionError("batch spec: queries, positives and negatives differ in length");
  }
  TrainingBatch batch;
  batch.query_ids = spec.queries;
  batch.positive.resize(nq);
  batch.negatives.resize(nq);
  std::unordered_map<std::uint32_t, std::uint32_t> local;
  auto intern = [&](std::uint32_t doc) {
    if (doc >= data.num_docs() && model.doc_encoder.kind() == EncoderKind::kLinear) {
      throw ConfigError("batch spec: doc id " + std::to_string(doc) + " out of range");
    }
    auto [it, inserted] =
        local.emplace(doc, static_cast<std::uint32_t>(batch.doc_ids.size()));
    if (inserted) batch.doc_ids.push_back(doc);
    return it->second;
  };
  for (std::size_t a = 0; a < nq; ++a) {
    if (spec.negatives[a].empty()) {
      throw ConfigError("batch spec: query " + std::to_string(spec.queries[a]) +
                        " has no negatives");
    }
    batch.positive[a] = intern(spec.positives[a]);
    for (std::uint32_t n : spec.negatives[a]) batch.negatives[a].push_back(intern(n));
  }

  const std::size_t dim = model.dim();
  batch.queries = MatrixD(nq, dim);
  batch.docs = MatrixD(batch.doc_ids.size(), dim);
  batch.docs_hat = MatrixD(batch.doc_ids.size(), dim);
  batch.codes = CodeTable(batch.doc_ids.size(), model.num_blocks);
  std::vector<double> buf(dim);
  for (std::size_t a = 0; a < nq; ++a) {
    const std::uint32_t id = spec.queries[a];
    if (model.query_encoder.kind() == EncoderKind::kLinear &&
        (data.query_features == nullptr || id >= data.query_features->rows())) {
      throw ConfigError("batch spec: query id " + std::to_string(id) + " out of range");
    }
    model.query_encoder.encode(id, feature_row(data.query_features, model.query_encoder, id),
                               buf);
    rotate(model.rotation, buf, batch.queries.row(a));
  }
  for (std::size_t t = 0; t < batch.doc_ids.size(); ++t) {
    const std::uint32_t id = batch.doc_ids[t];
    model.doc_encoder.encode(id, feature_row(data.doc_features, model.doc_encoder, id), buf);
    rotate(model.rotation, buf, batch.docs.row(t));
  }
  return batch;
}

CostMatrix block_cost(const TrainingBatch& batch, const Model& model, std::size_t block) {
  const std::size_t sub = model.sub_dim();
  const std::size_t k = model.num_centroids;
  CostMatrix cost(batch.doc_ids.size(), k);
  for (std::size_t t = 0; t < batch.doc_ids.size(); ++t) {
    auto d = batch.docs.row(t).subspan(block * sub, sub);
    for (std::size_t j = 0; j < k; ++j) cost.at(t, j) = squared_l2(d, model.centroid(block, j));
  }
  return cost;
}

AssignStats assign_batch_codes(TrainingBatch& batch, const Model& model,
                               AssignmentMode mode, const SinkhornOptions& options) {
  AssignStats stats;
  if (batch.doc_ids.empty()) return stats;
  for (std::size_t i = 0; i < model.num_blocks; ++i) {
    const CostMatrix cost = block_cost(batch, model, i);
    const ConstrainedAssignment assigned = mode == AssignmentMode::kConstrained
                                               ? assign_constrained(cost, options)
                                               : assign_unconstrained(cost);
    for (std::size_t t = 0; t < assigned.codes.size(); ++t) {
      batch.codes.row(t)[i] = static_cast<std::uint8_t>(assigned.codes[t]);
    }
    stats.balance_violation = std::max(stats.balance_violation, assigned.plan.marginal_violation);
    stats.sinkhorn_iterations += assigned.plan.iterations_used;
  }
  fill_reconstruction(batch, model);
  return stats;
}

void set_batch_codes(TrainingBatch& batch, const Model& model, CodeTable codes) {
  if (codes.rows() != batch.doc_ids.size() || codes.num_blocks() != model.num_blocks) {
    throw DimensionError("set_batch_codes: code table shape does not match the batch");
  }
  for (std::uint8_t c : codes.bytes()) {
    if (c >= model.num_centroids) throw CorruptIndexError("codes", "code >= K");
  }
  batch.codes = std::move(codes);
  fill_reconstruction(batch, model);
}

ModelGradients model_gradients(const Model& model, const TrainingData& data,
                               const TrainingBatch& batch, const BatchGradients& grads) {
  ModelGradients out{
      MatrixD(model.query_encoder.parameters().rows(), model.query_encoder.parameters().cols()),
      MatrixD(model.doc_encoder.parameters().rows(), model.doc_encoder.parameters().cols()),
      grads.codebook};
  std::vector<double> buf(model.dim());
  for (std::size_t a = 0; a < batch.query_ids.size(); ++a) {
    const std::uint32_t id = batch.query_ids[a];
    rotate_transposed(model.rotation, grads.queries.row(a), buf);
    model.query_encoder.accumulate_gradient(
        id, feature_row(data.query_features, model.query_encoder, id), buf, out.query_encoder);
  }
  for (std::size_t t = 0; t < batch.doc_ids.size(); ++t) {
    const std::uint32_t id = batch.doc_ids[t];
    rotate_transposed(model.rotation, grads.docs.row(t), buf);
    model.doc_encoder.accumulate_gradient(
        id, feature_row(data.doc_features, model.doc_encoder, id), buf, out.doc_encoder);
  }
  return out;
}

Matrix encode_queries(const Model& model, const Matrix& features) {
  return model.query_encoder.encode_all(features);
}

Matrix encode_docs(const Model& model, const Matrix& features) {
  return model.doc_encoder.encode_all(features);
}

CodeTable quantize_corpus(const Model& model, const Matrix& doc_features) {
  return quantize_all(model.rotation.apply_rows(encode_docs(model, doc_features)),
                      model.export_codebook());
}

IvfIndex build_model_index(const Model& model, const Matrix& doc_features,
                           std::size_t num_lists, std::uint64_t seed,
                           const CodeTable* frozen_codes) {
  if (frozen_codes != nullptr) {
    return build_ivf_from_codes(*frozen_codes, model.export_codebook(), model.rotation,
                                num_lists, seed);
  }
  return build_ivf(encode_docs(model, doc_features), model.export_codebook(),
                   model.rotation, num_lists, seed);
}

void validate(const TrainConfig& config) {
  if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda)) {
    throw ConfigError("lambda must be >= 0");
  }
  if (!(config.lr_encoder >= 0.0) || !(config.lr_codebook >= 0.0)) {
    throw ConfigError("learning rates must be non-negative");
  }
  if (config.batch_size == 0) throw ConfigError("batch size must be positive");
  if (config.stage != 1 && config.stage != 2) {
    throw ConfigError("stage must be 1 or 2, got " + std::to_string(config.stage));
  }
  if (config.negatives_per_query == 0) {
    throw ConfigError("negatives per query must be positive");
  }
  if (config.mining_depth == 0) throw ConfigError("mining depth must be positive");
}

Trainer::Trainer(Model model, TrainingData data, TrainConfig config, CodeTable corpus_codes)
    : model_(std::move(model)),
      data_(std::move(data)),
      config_(std::move(config)),
      corpus_codes_(std::move(corpus_codes)),
      rng_(config_.seed) {
  validate(config_);
  model_.check();
  if (data_.doc_features == nullptr || data_.num_docs() == 0) {
    throw ConfigError("trainer: empty corpus");
  }
  if (model_.doc_encoder.kind() == EncoderKind::kLinear &&
      data_.doc_features->cols() != model_.doc_encoder.input_dim()) {
    throw DimensionError("trainer: document features have " +
                         std::to_string(data_.doc_features->cols()) +
                         " columns, encoder expects " +
                         std::to_string(model_.doc_encoder.input_dim()));
  }
  if (corpus_codes_.rows() != data_.num_docs() ||
      corpus_codes_.num_blocks() != model_.num_blocks) {
    throw DimensionError("trainer: corpus codes do not match the corpus and M");
  }
  for (std::size_t q = 0; q < data_.num_queries(); ++q) {
    for (std::uint32_t d : data_.positives[q]) {
      if (d >= data_.num_docs()) {
        throw ConfigError("trainer: judged doc id " + std::to_string(d) + " out of range");
      }
    }
    if (!data_.positives[q].empty()) trainable_queries_.push_back(static_cast<std::uint32_t>(q));
  }
  if (trainable_queries_.empty()) throw ConfigError("trainer: no query has a relevant document");
  pools_.resize(data_.num_queries());
  if (config_.stage == 1) mine(trainable_queries_);
}

IvfIndex Trainer::current_index() const {
  return build_ivf_from_codes(corpus_codes_, model_.export_codebook(), model_.rotation, 1,
                              config_.seed);
}

void Trainer::mine(const std::vector<std::uint32_t>& query_rows) {
  const IvfIndex index = current_index();
  const std::size_t dim = model_.dim();
  Matrix embeddings(query_rows.size(), dim);
  std::vector<std::vector<std::uint32_t>> positives(query_rows.size());
  std::vector<double> buf(dim);
  for (std::size_t r = 0; r < query_rows.size(); ++r) {
    const std::uint32_t id = query_rows[r];
    model_.query_encoder.encode(id, feature_row(data_.query_features, model_.query_encoder, id),
                                buf);
    auto dst = embeddings.row(r);
    for (std::size_t c = 0; c < dim; ++c) dst[c] = static_cast<float>(buf[c]);
    positives[r] = data_.positives[id];
  }
  MiningOptions options;
  options.depth = config_.mining_depth;
  options.fallback_count = std::max<std::size_t>(config_.negatives_per_query, 8);
  options.seed = rng_.split(0x6D696E65ULL + step_).next_u64();
  auto mined = mine_negatives(index, embeddings, positives, options);
  for (std::size_t r = 0; r < query_rows.size(); ++r) pools_[query_rows[r]] = std::move(mined[r]);
}

BatchSpec Trainer::sample_batch() {
  const std::size_t count = std::min(config_.batch_size, trainable_queries_.size());
  std::vector<std::uint32_t> chosen = trainable_queries_;
  // Partial Fisher-Yates: the first `count` entries are a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng_.uniform_index(chosen.size() - i));
    std::swap(chosen[i], chosen[j]);
  }
  chosen.resize(count);
  if (config_.stage == 2) mine(chosen);

  BatchSpec spec;
  for (std::uint32_t q : chosen) {
    const auto& pos = data_.positives[q];
    spec.queries.push_back(q);
    spec.positives.push_back(pos[static_cast<std::size_t>(rng_.uniform_index(pos.size()))]);
    std::vector<std::uint32_t> pool = pools_[q];
    const std::size_t take = std::min(config_.negatives_per_query, pool.size());
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng_.uniform_index(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(take);
    spec.negatives.push_back(std::move(pool));
  }
  return spec;
}

TrainingBatch Trainer::forward(const BatchSpec& spec, AssignStats* stats) const {
  TrainingBatch batch = encode_batch(model_, data_, spec);
  if (!batch.queries.all_finite()) {
    throw DivergenceError("query_encoder", "query embeddings became non-finite");
  }
  if (!batch.docs.all_finite()) {
    throw DivergenceError("doc_encoder", "document embeddings became non-finite");
  }
  AssignStats local;
  if (config_.stage == 2) {
    CodeTable codes(batch.doc_ids.size(), model_.num_blocks);
    for (std::size_t t = 0; t < batch.doc_ids.size(); ++t) {
      auto src = corpus_codes_.row(batch.doc_ids[t]);
      std::copy(src.begin(), src.end(), codes.row(t).begin());
    }
    set_batch_codes(batch, model_, std::move(codes));
  } else {
    try {
      local = assign_batch_codes(batch, model_, config_.assignment, config_.sinkhorn);
    } catch (const InputError& e) {
      // Finite parameters can still overflow the squared-distance costs.
      throw DivergenceError("assignment", e.what());
    }
  }
  if (stats != nullptr) *stats = local;
  return batch;
}

StepMetrics Trainer::step() {
  const BatchSpec spec = sample_batch();
  AssignStats stats;
  TrainingBatch batch = forward(spec, &stats);
  const LossBreakdown loss = total_loss(batch, config_.lambda);
  if (!std::isfinite(loss.ranking)) throw DivergenceError("ranking_loss", "loss is NaN or inf");
  if (!std::isfinite(loss.mse)) throw DivergenceError("mse_loss", "loss is NaN or inf");

  const BatchGradients grads = backward(batch, config_.lambda, model_);
  const ModelGradients mg = model_gradients(model_, data_, batch, grads);

  auto descend = [](MatrixD& params, const MatrixD& grad, double lr) {
    if (lr == 0.0) return;
    auto p = params.data();
    auto g = grad.data();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
  };
  descend(model_.query_encoder.parameters(), mg.query_encoder, config_.lr_encoder);
  if (config_.stage == 1) {
    descend(model_.doc_encoder.parameters(), mg.doc_encoder, config_.lr_encoder);
  }
  descend(model_.codebook, mg.codebook, config_.lr_codebook);
  check_finite(model_.query_encoder.parameters(), "query_encoder");
  check_finite(model_.doc_encoder.parameters(), "doc_encoder");
  check_finite(model_.codebook, "codebook");

  StepMetrics metrics;
  metrics.step = ++step_;
  metrics.ranking = loss.ranking;
  metrics.mse = loss.mse;
  metrics.total = loss.total;
  metrics.balance_violation = stats.balance_violation;
  if (config_.stage == 1) {
    for (std::size_t t = 0; t < batch.doc_ids.size(); ++t) {
      auto stored = corpus_codes_.row(batch.doc_ids[t]);
      auto fresh = batch.codes.row(t);
      for (std::size_t i = 0; i < stored.size(); ++i) {
        if (stored[i] != fresh[i]) {
          ++metrics.codes_changed;
          stored[i] = fresh[i];
        }
      }
    }
  }
  return metrics;
}

std::size_t Trainer::refresh_corpus_codes() {
  if (config_.stage == 2) return 0;
  CodeTable fresh = quantize_corpus(model_, *data_.doc_features);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < fresh.bytes().size(); ++i) {
    changed += fresh.bytes()[i] != corpus_codes_.bytes()[i] ? 1 : 0;
  }
  corpus_codes_ = std::move(fresh);
  return changed;
}

}  // namespace repconc
