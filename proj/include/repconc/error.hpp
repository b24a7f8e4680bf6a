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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace repconc {

enum class ErrorKind {
  kDimension,
  kConfig,
  kParse,
  kInput,
  kDivergence,
  kUnderflow,
  kCorruptIndex,
  kInternal,
};

// Base of every error raised by the library. The CLI maps kinds onto exit
// codes (see exit_code_for).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what)
      : Error(ErrorKind::kDimension, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorKind::kConfig, what) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line,
             const std::string& what)
      : Error(ErrorKind::kParse,
              source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Non-finite or otherwise unusable numeric input.
class InputError : public Error {
 public:
  explicit InputError(const std::string& what)
      : Error(ErrorKind::kInput, what) {}
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& component, const std::string& what)
      : Error(ErrorKind::kDivergence, component + ": " + what),
        component_(component) {}

  const std::string& component() const noexcept { return component_; }

 private:
  std::string component_;
};

class UnderflowError : public Error {
 public:
  explicit UnderflowError(const std::string& what)
      : Error(ErrorKind::kUnderflow, what) {}
};

class CorruptIndexError : public Error {
 public:
  CorruptIndexError(const std::string& section, const std::string& what)
      : Error(ErrorKind::kCorruptIndex,
              "corrupt index [" + section + "]: " + what),
        section_(section) {}

  const std::string& section() const noexcept { return section_; }

 private:
  std::string section_;
};

class InternalError : public Error {
 public:
  explicit InternalError(const std::string& what)
      : Error(ErrorKind::kInternal, what) {}
};

// 0 ok, 2 configuration, 3 data/parse, 4 numerical divergence,
// 5 corrupt index, 1 anything else.
inline int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kDimension:
    case ErrorKind::kConfig:
      return 2;
    case ErrorKind::kParse:
    case ErrorKind::kInput:
      return 3;
    case ErrorKind::kDivergence:
    case ErrorKind::kUnderflow:
      return 4;
    case ErrorKind::kCorruptIndex:
      return 5;
    case ErrorKind::kInternal:
      return 1;
  }
  return 1;
}

}  // namespace repconc
