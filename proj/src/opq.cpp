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

#include "repconc/opq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace repconc {
namespace {

// Assigns every point to its nearest centroid. Returns the total squared
// distance and whether any assignment changed.
std::pair<double, bool> assign_points(const Matrix& points, const Matrix& centroids,
                                      std::vector<std::uint32_t>& assignment,
                                      std::vector<double>& distance) {
  std::vector<std::uint8_t> changed(points.rows(), 0);
  parallel_for(points.rows(), [&](std::size_t i) {
    double dist = 0.0;
    const std::uint32_t c = nearest_centroid(points.row(i), centroids, &dist);
    changed[i] = c != assignment[i] ? 1 : 0;
    assignment[i] = c;
    distance[i] = dist;
  });
  double total = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    total += distance[i];
    any = any || changed[i] != 0;
  }
  return {total, any};
}

void update_centroids(const Matrix& points, const std::vector<std::uint32_t>& assignment,
                      Matrix& centroids) {
  const std::size_t k = centroids.rows();
  const std::size_t dim = centroids.cols();
  MatrixD sums(k, dim);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    auto dst = sums.row(assignment[i]);
    auto src = points.row(i);
    for (std::size_t d = 0; d < dim; ++d) dst[d] += src[d];
    ++counts[assignment[i]];
  }
  std::vector<std::size_t> empty;
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) {
      empty.push_back(c);
      continue;
    }
    auto dst = centroids.row(c);
    auto src = sums.row(c);
    const double inv = 1.0 / static_cast<double>(counts[c]);
    for (std::size_t d = 0; d < dim; ++d) dst[d] = static_cast<float>(src[d] * inv);
  }
  if (empty.empty()) return;
  std::vector<double> far(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    far[i] = squared_l2(points.row(i), centroids.row(assignment[i]));
  }
  for (std::size_t c : empty) {
    const auto it = std::max_element(far.begin(), far.end());
    const auto idx = static_cast<std::size_t>(it - far.begin());
    auto src = points.row(idx);
    std::copy(src.begin(), src.end(), centroids.row(c).begin());
    *it = -1.0;
  }
}

KMeansResult lloyd(const Matrix& points, Matrix centroids, std::size_t iters) {
  KMeansResult result;
  result.assignment.assign(points.rows(), std::numeric_limits<std::uint32_t>::max());
  std::vector<double> distance(points.rows(), 0.0);
  result.objective.push_back(
      assign_points(points, centroids, result.assignment, distance).first);
  for (std::size_t it = 0; it < iters; ++it) {
    update_centroids(points, result.assignment, centroids);
    const auto [objective, changed] =
        assign_points(points, centroids, result.assignment, distance);
    result.objective.push_back(objective);
    result.iterations = it + 1;
    if (!changed) {
      result.converged = true;
      break;
    }
  }
  result.centroids = std::move(centroids);
  return result;
}

Matrix block_columns(const Matrix& rows, std::size_t begin, std::size_t width) {
  Matrix out(rows.rows(), width);
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    auto src = rows.row(r).subspan(begin, width);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

MatrixD procrustes(const MatrixD& cross) {
  SvdResult svd = svd_square(cross);
  return multiply(svd.u, svd.vt);
}

// Rows are the principal axes of the centred corpus, by descending variance,
// so consecutive blocks receive consecutive principal subspaces.
Matrix pca_rotation(const Matrix& docs) {
  const std::size_t dim = docs.cols();
  std::vector<double> mean(dim, 0.0);
  for (std::size_t r = 0; r < docs.rows(); ++r) {
    auto x = docs.row(r);
    for (std::size_t i = 0; i < dim; ++i) mean[i] += x[i];
  }
  for (double& v : mean) v /= static_cast<double>(docs.rows());
  MatrixD cov(dim, dim);
  std::vector<double> centred(dim);
  for (std::size_t r = 0; r < docs.rows(); ++r) {
    auto x = docs.row(r);
    for (std::size_t i = 0; i < dim; ++i) centred[i] = x[i] - mean[i];
    for (std::size_t i = 0; i < dim; ++i) {
      auto dst = cov.row(i);
      for (std::size_t j = 0; j < dim; ++j) dst[j] += centred[i] * centred[j];
    }
  }
  const SvdResult svd = svd_square(cov);
  return Matrix::cast_from(transpose(svd.u));
}

struct BlockState {
  std::vector<Matrix> centroids;
  std::vector<std::vector<std::uint32_t>> assignment;
};

BlockState fit_blocks(const Matrix& rotated, const std::vector<Matrix>* warm, std::size_t m,
                      std::size_t k, std::size_t iters, const Rng& rng) {
  const std::size_t sub = rotated.cols() / m;
  BlockState state;
  state.centroids.resize(m);
  state.assignment.resize(m);
  for (std::size_t b = 0; b < m; ++b) {
    const Matrix points = block_columns(rotated, b * sub, sub);
    KMeansResult km = warm == nullptr
                          ? kmeans(points, k, iters, rng.split(b).next_u64())
                          : kmeans_from(points, (*warm)[b], iters);
    state.centroids[b] = std::move(km.centroids);
    state.assignment[b] = std::move(km.assignment);
  }
  return state;
}

Codebook flatten(const std::vector<Matrix>& blocks, std::size_t dim, std::size_t k) {
  std::vector<float> flat;
  for (const Matrix& c : blocks) flat.insert(flat.end(), c.data().begin(), c.data().end());
  return Codebook(dim, blocks.size(), k, std::move(flat));
}

}  // namespace

std::uint32_t nearest_centroid(std::span<const float> point, const Matrix& centroids,
                               double* distance) {
  std::uint32_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    const double d = squared_l2(point, centroids.row(c));
    if (d < best_dist) {
      best_dist = d;
      best = static_cast<std::uint32_t>(c);
    }
  }
  if (distance != nullptr) *distance = best_dist;
  return best;
}

KMeansResult kmeans(const Matrix& points, std::size_t k, std::size_t iters,
                    std::uint64_t seed) {
  if (k == 0) throw ConfigError("kmeans: K must be positive");
  if (points.rows() < k) {
    throw ConfigError("kmeans: " + std::to_string(points.rows()) +
                      " points is fewer than K=" + std::to_string(k));
  }
  Rng rng(seed);
  const std::size_t n = points.rows();
  Matrix centroids(k, points.cols());
  std::vector<bool> chosen(n, false);
  std::size_t first = static_cast<std::size_t>(rng.uniform_index(n));
  chosen[first] = true;
  std::copy(points.row(first).begin(), points.row(first).end(), centroids.row(0).begin());
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = squared_l2(points.row(i), centroids.row(0));
  // Greedy k-means++: draw a few D^2-weighted candidates per centroid and keep
  // the one that lowers the potential most.
  const std::size_t trials =
      2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  auto sample = [&](double total) {
    const double target = rng.uniform() * total;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      cumulative += dist[i];
      if (dist[i] > 0.0 && cumulative > target) return i;
    }
    for (std::size_t i = n; i-- > 0;) {
      if (dist[i] > 0.0) return i;
    }
    return n;
  };
  std::vector<double> trial_dist(n);
  std::vector<double> best_dist(n);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : dist) total += d;
    std::size_t pick = n;
    if (total > 0.0) {
      double best_potential = INFINITY;
      for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t candidate = sample(total);
        double potential = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          trial_dist[i] = std::min(dist[i], squared_l2(points.row(i), points.row(candidate)));
          potential += trial_dist[i];
        }
        if (potential < best_potential) {
          best_potential = potential;
          pick = candidate;
          best_dist.swap(trial_dist);
        }
      }
      dist.swap(best_dist);
    } else {
      // Every remaining point coincides with a centroid; take unused rows.
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    chosen[pick] = true;
    std::copy(points.row(pick).begin(), points.row(pick).end(), centroids.row(c).begin());
  }
  return lloyd(points, std::move(centroids), iters);
}

KMeansResult kmeans_from(const Matrix& points, Matrix initial, std::size_t iters) {
  if (initial.rows() == 0 || initial.cols() != points.cols()) {
    throw DimensionError("kmeans_from: initial centroids do not match points");
  }
  if (points.rows() < initial.rows()) {
    throw ConfigError("kmeans: " + std::to_string(points.rows()) +
                      " points is fewer than K=" + std::to_string(initial.rows()));
  }
  return lloyd(points, std::move(initial), iters);
}

Rotation Rotation::none(std::size_t dim) {
  Rotation r;
  r.dim_ = dim;
  r.enabled_ = false;
  return r;
}

Rotation Rotation::from_matrix(Matrix r) {
  if (r.rows() != r.cols()) throw DimensionError("rotation must be square");
  if (!r.all_finite()) throw InputError("rotation has non-finite entries");
  const double err = orthonormality_error(MatrixD::cast_from(r));
  if (err > 1e-3) {
    throw InputError("rotation is not orthonormal (max |R R^T - I| = " +
                     std::to_string(err) + ")");
  }
  Rotation out;
  out.dim_ = r.rows();
  out.enabled_ = true;
  out.r_ = std::move(r);
  return out;
}

void Rotation::apply(std::span<const float> in, std::span<float> out) const {
  if (in.size() != dim_ || out.size() != dim_) {
    throw DimensionError("rotation: vector length " + std::to_string(in.size()) +
                         " != " + std::to_string(dim_));
  }
  if (!enabled_) {
    std::copy(in.begin(), in.end(), out.begin());
    return;
  }
  for (std::size_t i = 0; i < dim_; ++i) {
    out[i] = static_cast<float>(inner_product(r_.row(i), in));
  }
}

std::vector<float> Rotation::apply(std::span<const float> in) const {
  std::vector<float> out(in.size());
  apply(in, out);
  return out;
}

Matrix Rotation::apply_rows(const Matrix& rows) const {
  if (!enabled_) return rows;
  Matrix out(rows.rows(), rows.cols());
  parallel_for(rows.rows(), [&](std::size_t r) { apply(rows.row(r), out.row(r)); });
  return out;
}

double pq_distortion(const Matrix& docs, const Rotation& rotation,
                     const Codebook& codebook) {
  if (docs.rows() == 0) return 0.0;
  const Matrix rotated = rotation.apply_rows(docs);
  std::vector<double> err(docs.rows());
  parallel_for(docs.rows(), [&](std::size_t r) {
    std::vector<std::uint8_t> codes(codebook.num_blocks());
    quantize_into(rotated.row(r), codebook, codes);
    err[r] = quantization_error(rotated.row(r), codes, codebook);
  });
  double total = 0.0;
  for (double e : err) total += e;
  return total / static_cast<double>(docs.rows());
}

OpqResult train_opq(const Matrix& docs, const OpqOptions& options) {
  if (docs.rows() == 0) throw ConfigError("train_opq: empty corpus");
  const std::size_t dim = docs.cols();
  const std::size_t m = options.num_blocks;
  const std::size_t k = options.num_centroids;
  check_pq_shape(dim, m, k);
  if (docs.rows() < k) {
    throw ConfigError("train_opq: " + std::to_string(docs.rows()) +
                      " documents is fewer than K=" + std::to_string(k));
  }
  const std::size_t sub = dim / m;
  const Rng rng(options.seed);

  OpqResult result;
  result.rotation = Rotation::none(dim);
  BlockState state;
  if (options.rotation) {
    // Non-parametric OPQ only finds a local optimum, so the first pass is run
    // from both the identity and the principal axes and the better start kept.
    double best = INFINITY;
    for (Matrix start : {Matrix::identity(dim), pca_rotation(docs)}) {
      Rotation candidate = Rotation::from_matrix(std::move(start));
      BlockState fitted = fit_blocks(candidate.apply_rows(docs), nullptr, m, k,
                                     options.kmeans_iters, rng);
      const double d =
          pq_distortion(docs, candidate, flatten(fitted.centroids, dim, k));
      if (d < best) {
        best = d;
        state = std::move(fitted);
        result.rotation = std::move(candidate);
      }
    }
  }
  Matrix rotated = result.rotation.apply_rows(docs);
  const std::size_t outer = std::max<std::size_t>(1, options.outer_iters);

  for (std::size_t t = 0; t < outer; ++t) {
    if (t > 0 || !options.rotation) {
      state = fit_blocks(rotated, t == 0 ? nullptr : &state.centroids, m, k,
                         options.kmeans_iters, rng);
    }
    result.codebook = flatten(state.centroids, dim, k);

    if (options.rotation) {
      // Maximise sum_d <R x_d, y_d> over orthonormal R, with y_d the current
      // reconstruction: R = U V^T for sum_d y_d x_d^T = U S V^T.
      MatrixD cross(dim, dim);
      std::vector<float> recon(dim);
      for (std::size_t r = 0; r < docs.rows(); ++r) {
        for (std::size_t b = 0; b < m; ++b) {
          auto c = state.centroids[b].row(state.assignment[b][r]);
          std::copy(c.begin(), c.end(), recon.begin() + static_cast<std::ptrdiff_t>(b * sub));
        }
        auto x = docs.row(r);
        for (std::size_t i = 0; i < dim; ++i) {
          const double yi = recon[i];
          auto dst = cross.row(i);
          for (std::size_t j = 0; j < dim; ++j) dst[j] += yi * x[j];
        }
      }
      MatrixD r = procrustes(cross);
      if (orthonormality_error(r) > 1e-5) r = procrustes(r);
      result.rotation = Rotation::from_matrix(Matrix::cast_from(r));
      rotated = result.rotation.apply_rows(docs);
    }
    result.distortion.push_back(pq_distortion(docs, result.rotation, result.codebook));
  }
  return result;
}

}  // namespace repconc
