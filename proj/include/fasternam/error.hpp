// Copyright 2026 The FasterNAM Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FASTERNAM_ERROR_HPP_
#define FASTERNAM_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace fasternam {

// Shape or argument contract violated. Maps to CLI exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input is well-formed but mathematically degenerate (all-zero scales,
// empty baseline, no ground truth). Maps to CLI exit code 1.
class DegenerateInputError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// NaN/Inf produced where finite values were required.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed text input (config, box files). Maps to CLI exit code 2.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

// File could not be opened or read. Maps to CLI exit code 2.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fasternam

#endif  // FASTERNAM_ERROR_HPP_
