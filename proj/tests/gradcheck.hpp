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

// Finite-difference gradient check on a small random training instance.
// Shared by the unit tests and the acceptance binary.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "repconc/training.hpp"
#include "test_util.hpp"

namespace repconc::testing {

struct GradCheckInstance {
  Model model;
  Matrix doc_features;
  Matrix query_features;
  BatchSpec spec;
  double lambda = 0.0;

  TrainingData data() const {
    TrainingData d;
    d.doc_features = &doc_features;
    d.query_features = &query_features;
    d.positives.resize(query_features.rows());
    for (std::size_t a = 0; a < spec.queries.size(); ++a) {
      d.positives[spec.queries[a]].push_back(spec.positives[a]);
    }
    return d;
  }
};

struct GradCheckShape {
  std::size_t features = 8;
  std::size_t dim = 8;
  std::size_t blocks = 2;
  std::size_t centroids = 4;
  std::size_t queries = 2;
  std::size_t negatives = 1;  // per query
  std::size_t docs = 10;
};

// Linear encoders, a random rotation and a batch in which every positive and
// negative is a distinct document, so B = queries * (1 + negatives).
inline GradCheckInstance make_gradcheck_instance(std::uint64_t seed,
                                                 const GradCheckShape& shape = {}) {
  Rng rng(seed);
  GradCheckInstance inst;
  inst.doc_features = random_matrix(shape.docs, shape.features, rng.next_u64());
  inst.query_features = random_matrix(shape.queries, shape.features, rng.next_u64());
  inst.model.query_encoder =
      Encoder::linear(random_matrix_d(shape.dim, shape.features, rng.next_u64(), 0.4));
  inst.model.doc_encoder =
      Encoder::linear(random_matrix_d(shape.dim, shape.features, rng.next_u64(), 0.4));
  inst.model.num_blocks = shape.blocks;
  inst.model.num_centroids = shape.centroids;
  inst.model.codebook = random_matrix_d(shape.blocks * shape.centroids,
                                        shape.dim / shape.blocks, rng.next_u64(), 0.8);
  inst.model.rotation = Rotation::from_matrix(random_rotation(shape.dim, rng.next_u64()));
  inst.model.check();
  std::vector<std::uint32_t> used;
  for (std::uint32_t q = 0; q < shape.queries; ++q) {
    inst.spec.queries.push_back(q);
    inst.spec.positives.push_back(q);
    used.push_back(q);
  }
  for (std::size_t q = 0; q < shape.queries; ++q) {
    std::vector<std::uint32_t> negs;
    while (negs.size() < shape.negatives) {
      const auto d = static_cast<std::uint32_t>(rng.uniform_index(shape.docs));
      if (std::find(used.begin(), used.end(), d) != used.end()) continue;
      used.push_back(d);
      negs.push_back(d);
    }
    inst.spec.negatives.push_back(negs);
  }
  inst.lambda = rng.uniform(0.05, 1.0);
  return inst;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // parameter group of the worst entry
  std::size_t entries = 0;
  bool unselected_zero = true;
  std::size_t unselected = 0;  // centroids no batch document selected
};

// |a - n| / max(|a|, |n|, floor); the floor keeps entries whose true value is
// zero from turning rounding noise into a huge ratio.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

// Codebook and query-encoder gradients are compared with central differences
// of total_loss with the batch codes held fixed. The document-encoder
// gradient is straight-through by definition, so it is compared with central
// differences of the surrogate whose ranking term sees d_hat + (d - d0) and
// whose distortion term sees ||d - d_hat||^2.
inline GradCheckResult run_gradient_check(std::uint64_t seed, double h = 1e-3,
                                          const GradCheckShape& shape = {}) {
  GradCheckInstance inst = make_gradcheck_instance(seed, shape);
  const TrainingData data = inst.data();
  TrainingBatch base = encode_batch(inst.model, data, inst.spec);
  assign_batch_codes(base, inst.model, AssignmentMode::kConstrained, SinkhornOptions{});
  const CodeTable codes = base.codes;

  const BatchGradients bg = backward(base, inst.lambda, inst.model);
  const ModelGradients mg = model_gradients(inst.model, data, base, bg);

  auto fixed_loss = [&](const Model& m) {
    TrainingBatch b = encode_batch(m, data, inst.spec);
    set_batch_codes(b, m, codes);
    return total_loss(b, inst.lambda).total;
  };
  auto surrogate_loss = [&](const Model& m) {
    TrainingBatch b = encode_batch(m, data, inst.spec);
    set_batch_codes(b, m, codes);
    const double mse = total_loss(b, inst.lambda).mse;
    TrainingBatch st = b;
    for (std::size_t t = 0; t < st.doc_ids.size(); ++t) {
      for (std::size_t c = 0; c < st.docs.cols(); ++c) {
        st.docs_hat(t, c) = base.docs_hat(t, c) + (b.docs(t, c) - base.docs(t, c));
      }
    }
    return total_loss(st, 0.0).ranking + inst.lambda * mse;
  };

  GradCheckResult out;
  auto check_group = [&](const std::string& name, MatrixD& params, const MatrixD& analytic,
                         const std::function<double(const Model&)>& loss) {
    for (std::size_t i = 0; i < params.data().size(); ++i) {
      const double saved = params.data()[i];
      params.data()[i] = saved + h;
      const double up = loss(inst.model);
      params.data()[i] = saved - h;
      const double down = loss(inst.model);
      params.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err = relative_error(analytic.data()[i], numeric);
      ++out.entries;
      if (err > out.max_rel_error) {
        out.max_rel_error = err;
        out.worst = name;
      }
    }
  };
  check_group("codebook", inst.model.codebook, mg.codebook, fixed_loss);
  check_group("query_encoder", inst.model.query_encoder.parameters(), mg.query_encoder,
              fixed_loss);
  check_group("doc_encoder", inst.model.doc_encoder.parameters(), mg.doc_encoder,
              surrogate_loss);

  const std::size_t m = inst.model.num_blocks;
  const std::size_t k = inst.model.num_centroids;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      bool used = false;
      for (std::size_t t = 0; t < codes.rows(); ++t) used = used || codes.row(t)[i] == j;
      if (used) continue;
      ++out.unselected;
      for (double g : mg.codebook.row(i * k + j)) {
        if (g != 0.0) out.unselected_zero = false;
      }
    }
  }
  return out;
}

}  // namespace repconc::testing
