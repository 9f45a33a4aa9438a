/*
 * Copyright 2026 The sparse-hjb Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace sparse_hjb {

/// Bad dimensions, out-of-range indices, non-finite inputs.
class ArgumentError : public std::invalid_argument {
public:
  explicit ArgumentError(const std::string &what) : std::invalid_argument(what) {}
};

class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string &what) : std::runtime_error(what) {}
};

/// NaN or divergence detected during iteration.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string &what) : std::runtime_error(what) {}
};

/// The closed-form maximizer is not valid for the requested parameters
/// (e.g. the vertex condition fails for 0 < p < 1). Callers fall back to
/// enumeration.
class RegimeError : public std::domain_error {
public:
  explicit RegimeError(const std::string &what) : std::domain_error(what) {}
};

class UnsupportedError : public std::logic_error {
public:
  explicit UnsupportedError(const std::string &what) : std::logic_error(what) {}
};

/// Closed-loop state left the admissible neighbourhood of the domain.
class DivergenceError : public std::runtime_error {
public:
  explicit DivergenceError(const std::string &what) : std::runtime_error(what) {}
};

/// Unknown preset or malformed command-line/config input.
class UsageError : public std::invalid_argument {
public:
  explicit UsageError(const std::string &what) : std::invalid_argument(what) {}
};

} // namespace sparse_hjb
