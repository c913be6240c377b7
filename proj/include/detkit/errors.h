// Copyright 2026 The detkit Authors
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

#ifndef DETKIT_ERRORS_H_
#define DETKIT_ERRORS_H_

#include <stdexcept>
#include <string>

namespace detkit {

// Base class for every error the toolkit raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input: bad shapes, schema violations, invalid
// configuration. The CLI maps this to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

// Shape mismatch. `dim()` names the offending dimension or field.
class ShapeError : public InputError {
 public:
  ShapeError(std::string dim, const std::string& what)
      : InputError("shape error at '" + dim + "': " + what),
        dim_(std::move(dim)) {}

  const std::string& dim() const { return dim_; }

 private:
  std::string dim_;
};

// Schema violation while decoding a document. `path()` is the JSON field
// path, e.g. "neck.widths" or "backbone[2].out_ch".
class SchemaError : public InputError {
 public:
  SchemaError(std::string path, const std::string& what)
      : InputError("schema error at '" + path + "': " + what),
        path_(std::move(path)) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// A request that is well-formed but cannot be satisfied, e.g. a search seed
// that already exceeds its latency budget. Exit code 3.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// An internal consistency check failed. Exit code 4.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace detkit

#endif  // DETKIT_ERRORS_H_
