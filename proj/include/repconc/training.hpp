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

// Joint training of encoders and PQ centroids.
//
// Forward: encode queries and batch documents, rotate them into the PQ
// space, pick codes per block (balanced transport plan or plain argmin),
// reconstruct. Loss: mean softmax ranking loss over quantized documents plus
// lambda times the mean squared quantization error of the batch documents.
//
// Backward follows a straight-through policy: the document embedding
// receives dL_r/d(d_hat) plus lambda * dL_m/dd with d_hat held constant; a
// centroid receives the d_hat gradient of every batch document that selected
// it and nothing otherwise.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "repconc/encoder.hpp"
#include "repconc/index_io.hpp"
#include "repconc/ivf.hpp"
#include "repconc/numerics.hpp"
#include "repconc/opq.hpp"
#include "repconc/pq.hpp"
#include "repconc/transport.hpp"

namespace repconc {

// MSE weight keyed by M: 0.05 for M >= 24, 0.07 for 16, 0.1 for 12, 0.2 for
// 8 and 0.3 for 4; in between the value of the next larger listed M is used.
double default_lambda(std::size_t num_blocks);

struct Model {
  Encoder query_encoder;
  Encoder doc_encoder;
  // (M * K) x (D / M), block-major like Codebook.
  MatrixD codebook;
  Rotation rotation;
  std::size_t num_blocks = 0;
  std::size_t num_centroids = 0;

  std::size_t dim() const noexcept { return doc_encoder.output_dim(); }
  std::size_t sub_dim() const noexcept { return dim() / num_blocks; }
  std::span<const double> centroid(std::size_t block, std::size_t j) const {
    return codebook.row(block * num_centroids + j);
  }

  static Model from_warmup(Encoder query_encoder, Encoder doc_encoder,
                           const Codebook& codebook, Rotation rotation);
  Codebook export_codebook() const;
  void check() const;
};

struct TrainingData {
  const Matrix* doc_features = nullptr;
  const Matrix* query_features = nullptr;
  // Relevant doc ids per query row; queries without any are never sampled.
  std::vector<std::vector<std::uint32_t>> positives;

  std::size_t num_docs() const;
  std::size_t num_queries() const { return positives.size(); }
};

// Maps qrels (grade > 0 is relevant) onto query rows.
std::vector<std::vector<std::uint32_t>> positives_from_qrels(const QuerySet& queries,
                                                             const Qrels& qrels);

struct BatchSpec {
  std::vector<std::uint32_t> queries;
  std::vector<std::uint32_t> positives;
  std::vector<std::vector<std::uint32_t>> negatives;
};

struct TrainingBatch {
  std::vector<std::uint32_t> query_ids;
  // Unique batch documents (global ids); positives/negatives index into it.
  std::vector<std::uint32_t> doc_ids;
  std::vector<std::uint32_t> positive;
  std::vector<std::vector<std::uint32_t>> negatives;
  MatrixD queries;    // rotated query embeddings
  MatrixD docs;       // rotated document embeddings
  MatrixD docs_hat;   // reconstruct(codes)
  CodeTable codes;
};

enum class AssignmentMode { kConstrained, kUnconstrained };

struct AssignStats {
  // max over blocks of max_j |sum_b q[b][j] - B/K|
  double balance_violation = 0.0;
  std::size_t sinkhorn_iterations = 0;
};

TrainingBatch encode_batch(const Model& model, const TrainingData& data,
                           const BatchSpec& spec);
// Squared distances of every batch document block to every centroid.
CostMatrix block_cost(const TrainingBatch& batch, const Model& model, std::size_t block);
AssignStats assign_batch_codes(TrainingBatch& batch, const Model& model,
                               AssignmentMode mode, const SinkhornOptions& options);
void set_batch_codes(TrainingBatch& batch, const Model& model, CodeTable codes);

double ranking_loss(std::span<const double> q, std::span<const double> pos,
                    const std::vector<std::span<const double>>& negs);
double mse_loss(std::span<const double> d, std::span<const double> d_hat);

struct LossBreakdown {
  double ranking = 0.0;  // mean over queries
  double mse = 0.0;      // mean over unique batch documents
  double total = 0.0;    // ranking + lambda * mse
};
LossBreakdown total_loss(const TrainingBatch& batch, double lambda);

struct BatchGradients {
  MatrixD queries;   // dL/dq (rotated space)
  MatrixD docs;      // straight-through dL/dd
  MatrixD docs_hat;  // dL/d(d_hat)
  MatrixD codebook;  // dL/dc, zero for centroids no batch document selected
};
// Throws InternalError when docs_hat is not the reconstruction of codes.
BatchGradients backward(const TrainingBatch& batch, double lambda, const Model& model);

struct ModelGradients {
  MatrixD query_encoder;
  MatrixD doc_encoder;
  MatrixD codebook;
};
ModelGradients model_gradients(const Model& model, const TrainingData& data,
                               const TrainingBatch& batch, const BatchGradients& grads);

// Rotated-space embeddings used by indexes are unrotated here; the index
// applies the rotation itself.
Matrix encode_queries(const Model& model, const Matrix& features);
Matrix encode_docs(const Model& model, const Matrix& features);

struct MiningOptions {
  std::size_t depth = 100;
  // 0 probes every list.
  std::size_t nprobe = 0;
  // Size of the random pool used when no negative is retrievable.
  std::size_t fallback_count = 8;
  std::uint64_t seed = 0;
};

// Top-ranked non-relevant documents for each query, in rank order. A query
// whose top `depth` holds no non-relevant document gets a uniform random
// sample of non-relevant documents instead.
std::vector<std::vector<std::uint32_t>> mine_negatives(
    const IvfIndex& index, const Matrix& query_embeddings,
    const std::vector<std::vector<std::uint32_t>>& positives, const MiningOptions& options);

struct TrainConfig {
  double lambda = 0.05;
  double lr_encoder = 2.0;
  double lr_codebook = 0.3;
  std::size_t batch_size = 64;
  // 1: static negatives, codes reassigned per step. 2: dynamic negatives,
  // document codes and document encoder frozen.
  int stage = 1;
  std::size_t negatives_per_query = 4;
  std::size_t mining_depth = 100;
  AssignmentMode assignment = AssignmentMode::kConstrained;
  SinkhornOptions sinkhorn;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& config);

struct StepMetrics {
  std::size_t step = 0;
  double ranking = 0.0;
  double mse = 0.0;
  double total = 0.0;
  double balance_violation = 0.0;
  std::size_t codes_changed = 0;
};

class Trainer {
 public:
  // `corpus_codes` are the current document codes; for stage 2 they stay
  // fixed for the whole run.
  Trainer(Model model, TrainingData data, TrainConfig config, CodeTable corpus_codes);

  StepMetrics step();
  std::size_t steps_taken() const noexcept { return step_; }

  const Model& model() const noexcept { return model_; }
  const TrainConfig& config() const noexcept { return config_; }
  const CodeTable& corpus_codes() const noexcept { return corpus_codes_; }
  const std::vector<std::vector<std::uint32_t>>& negative_pools() const noexcept {
    return pools_;
  }

  // Re-quantizes the whole corpus with the nearest-centroid rule (stage 1
  // checkpoint boundary). Returns the number of changed code bytes.
  std::size_t refresh_corpus_codes();

  // The searchable index the trainer mines from: current codebook over
  // `corpus_codes`, single inverted list.
  IvfIndex current_index() const;

  // Forward on a spec with the current parameters and assignment policy.
  TrainingBatch forward(const BatchSpec& spec, AssignStats* stats = nullptr) const;
  BatchSpec sample_batch();

 private:
  void mine(const std::vector<std::uint32_t>& query_rows);

  Model model_;
  TrainingData data_;
  TrainConfig config_;
  CodeTable corpus_codes_;
  Rng rng_;
  std::vector<std::uint32_t> trainable_queries_;
  std::vector<std::vector<std::uint32_t>> pools_;
  std::size_t step_ = 0;
};

// Corpus codes for a model with the nearest-centroid rule.
CodeTable quantize_corpus(const Model& model, const Matrix& doc_features);

// Index over the model's documents. With `frozen_codes` the given codes are
// used as-is (stage 2); otherwise documents are quantized.
IvfIndex build_model_index(const Model& model, const Matrix& doc_features,
                           std::size_t num_lists, std::uint64_t seed,
                           const CodeTable* frozen_codes = nullptr);

}  // namespace repconc
