// Copyright 2026 The mergebench Authors
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

namespace mergebench {

enum class ErrorCode {
  kInvalidArgument = 1,
  kParseError,
  kUnsupportedVersion,
  kUndefinedMetric,
  kGenerationFailure,
  kIo,
  kRuntime,
};

const char* to_string(ErrorCode code);

/// Base exception for everything the library throws on purpose. The code is
/// what crosses the C boundary; the message carries the context.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorCode::kInvalidArgument, what) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorCode::kParseError, what) {}
};

class UnsupportedVersion : public Error {
 public:
  explicit UnsupportedVersion(const std::string& what)
      : Error(ErrorCode::kUnsupportedVersion, what) {}
};

class UndefinedMetric : public Error {
 public:
  explicit UndefinedMetric(const std::string& what) : Error(ErrorCode::kUndefinedMetric, what) {}
};

class GenerationFailure : public Error {
 public:
  explicit GenerationFailure(const std::string& what)
      : Error(ErrorCode::kGenerationFailure, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::kIo, what) {}
};

}  // namespace mergebench
