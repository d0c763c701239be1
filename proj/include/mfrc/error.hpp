/*
 * Copyright 2026 The MFRC Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mfrc {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// I/O failure (missing or unreadable file, failed write).
class IoError : public Error {
 public:
  using Error::Error;
};

/// A line of an input file could not be parsed.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Input data violates a dataset invariant (scale, duplicates, id range).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyperparameter or experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite parameter.
class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, const std::string& block)
      : Error("training diverged at epoch " + std::to_string(epoch) + " in " + block),
        epoch_(epoch),
        block_(block) {}

  int epoch() const noexcept { return epoch_; }
  const std::string& block() const noexcept { return block_; }

 private:
  int epoch_;
  std::string block_;
};

/// Normal equations of an ALS block solve were singular.
class SingularSystemError : public Error {
 public:
  using Error::Error;
};

/// Model snapshot is malformed, truncated or of another version.
class FormatError : public Error {
 public:
  using Error::Error;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace mfrc
