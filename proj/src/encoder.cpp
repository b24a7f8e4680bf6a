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

#include "repconc/encoder.hpp"

#include <string>

namespace repconc {

std::string_view encoder_kind_name(EncoderKind kind) {
  return kind == EncoderKind::kLinear ? "linear" : "table";
}

EncoderKind parse_encoder_kind(std::string_view name) {
  if (name == "linear") return EncoderKind::kLinear;
  if (name == "table") return EncoderKind::kEmbeddingTable;
  throw ConfigError("unknown encoder kind '" + std::string(name) + "'");
}

Encoder Encoder::linear(MatrixD weights) {
  if (weights.rows() == 0 || weights.cols() == 0) {
    throw ConfigError("linear encoder needs a non-empty weight matrix");
  }
  Encoder e;
  e.kind_ = EncoderKind::kLinear;
  e.params_ = std::move(weights);
  return e;
}

Encoder Encoder::identity(std::size_t dim) { return linear(MatrixD::identity(dim)); }

Encoder Encoder::table(MatrixD rows) {
  if (rows.rows() == 0 || rows.cols() == 0) {
    throw ConfigError("embedding table must be non-empty");
  }
  Encoder e;
  e.kind_ = EncoderKind::kEmbeddingTable;
  e.params_ = std::move(rows);
  return e;
}

std::size_t Encoder::output_dim() const noexcept {
  return kind_ == EncoderKind::kLinear ? params_.rows() : params_.cols();
}

std::size_t Encoder::input_dim() const noexcept {
  return kind_ == EncoderKind::kLinear ? params_.cols() : params_.rows();
}

void Encoder::encode(std::uint32_t id, std::span<const float> features,
                     std::span<double> out) const {
  if (out.size() != output_dim()) throw DimensionError("encoder: output length");
  if (kind_ == EncoderKind::kEmbeddingTable) {
    if (id >= params_.rows()) {
      throw ConfigError("encoder: id " + std::to_string(id) + " outside table of " +
                        std::to_string(params_.rows()));
    }
    auto row = params_.row(id);
    std::copy(row.begin(), row.end(), out.begin());
    return;
  }
  if (features.size() != params_.cols()) {
    throw DimensionError("encoder: feature length " + std::to_string(features.size()) +
                         " != " + std::to_string(params_.cols()));
  }
  for (std::size_t r = 0; r < params_.rows(); ++r) {
    auto w = params_.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < w.size(); ++c) acc += w[c] * features[c];
    out[r] = acc;
  }
}

void Encoder::accumulate_gradient(std::uint32_t id, std::span<const float> features,
                                  std::span<const double> grad_out,
                                  MatrixD& grad) const {
  if (grad.rows() != params_.rows() || grad.cols() != params_.cols()) {
    throw DimensionError("encoder: gradient shape");
  }
  if (kind_ == EncoderKind::kEmbeddingTable) {
    auto row = grad.row(id);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += grad_out[c];
    return;
  }
  for (std::size_t r = 0; r < params_.rows(); ++r) {
    const double g = grad_out[r];
    if (g == 0.0) continue;
    auto row = grad.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += g * features[c];
  }
}

Matrix Encoder::encode_all(const Matrix& features) const {
  const std::size_t n =
      kind_ == EncoderKind::kEmbeddingTable ? params_.rows() : features.rows();
  Matrix out(n, output_dim());
  parallel_for(n, [&](std::size_t r) {
    std::vector<double> buf(output_dim());
    const std::span<const float> x =
        kind_ == EncoderKind::kLinear ? features.row(r) : std::span<const float>{};
    encode(static_cast<std::uint32_t>(r), x, buf);
    auto dst = out.row(r);
    for (std::size_t c = 0; c < buf.size(); ++c) dst[c] = static_cast<float>(buf[c]);
  });
  return out;
}

}  // namespace repconc
