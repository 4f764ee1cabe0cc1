// Copyright 2026 The CIR Engine Authors. All Rights Reserved.
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

#include <stdexcept>
#include <string>

namespace cir {

// Root of every error the engine throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value or argument violated a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Filesystem failure (open/read/write).
class IoError : public Error {
 public:
  using Error::Error;
};

// A persisted file does not follow its binary or text format.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Network-level failure talking to a remote generator (timeouts, refused
// connections, non-retryable HTTP statuses).
class TransportError : public Error {
 public:
  using Error::Error;
};

// A remote reply could not be decoded into the expected shape.
class DecodeError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace cir
