// Copyright 2026 The fusionbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace fusionbench {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes or geometries that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, SVD non-convergence, failed gradient checks.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Bad configuration or arguments (labels, counts, hyperparameters).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// File system failures.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file content; carries the offending line.
class ParseError : public IoError {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : IoError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Ids that do not line up across modality and label files.
class IngestionError : public IoError {
 public:
  IngestionError(const std::string& id, const std::string& what)
      : IoError("id '" + id + "': " + what), id_(id) {}

  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

}  // namespace fusionbench
