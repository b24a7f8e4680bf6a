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

// On-disk model checkpoints: a directory holding checkpoint.json plus one
// binary matrix file per parameter group and, optionally, the corpus codes.

#pragma once

#include <map>
#include <optional>
#include <string>

#include "repconc/training.hpp"

namespace repconc {

struct Checkpoint {
  Model model;
  std::optional<CodeTable> doc_codes;
  // Free-form provenance recorded next to the parameters (flags, seeds).
  std::map<std::string, std::string> info;
};

// Creates `dir` if needed. Parameters are stored as float32 matrices.
void save_checkpoint(const std::string& dir, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& dir);

}  // namespace repconc
