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

// Command-line front end. All logic lives in run() so tests can drive it
// in-process.

#pragma once

#include <ostream>

namespace repconc::cli {

// Parses argv, runs one subcommand and returns the process exit code:
// 0 ok, 1 internal, 2 configuration, 3 data or parse, 4 divergence,
// 5 corrupt index.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace repconc::cli
