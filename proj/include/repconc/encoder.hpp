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

// Trainable encoders standing in for the dual-encoder towers. A linear
// encoder maps fixed input features through a D x F matrix; a table encoder
// holds one free embedding per id.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "repconc/numerics.hpp"

namespace repconc {

enum class EncoderKind { kLinear, kEmbeddingTable };

std::string_view encoder_kind_name(EncoderKind kind);
EncoderKind parse_encoder_kind(std::string_view name);

class Encoder {
 public:
  Encoder() = default;

  static Encoder linear(MatrixD weights);
  static Encoder identity(std::size_t dim);
  // One row per id, initialised from `rows`.
  static Encoder table(MatrixD rows);

  EncoderKind kind() const noexcept { return kind_; }
  std::size_t output_dim() const noexcept;
  // Feature width for linear encoders, number of ids for tables.
  std::size_t input_dim() const noexcept;

  const MatrixD& parameters() const noexcept { return params_; }
  MatrixD& parameters() noexcept { return params_; }

  void encode(std::uint32_t id, std::span<const float> features,
              std::span<double> out) const;
  // grad += d(out)/d(params)^T * grad_out
  void accumulate_gradient(std::uint32_t id, std::span<const float> features,
                           std::span<const double> grad_out, MatrixD& grad) const;
  // Encodes every row of `features` (row index doubles as the id).
  Matrix encode_all(const Matrix& features) const;

 private:
  EncoderKind kind_ = EncoderKind::kLinear;
  MatrixD params_;
};

}  // namespace repconc
