// Copyright 2026 The ovon-mesh Authors
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

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ovon {

// A single schema or invariant failure, addressed by a dotted JSON path such
// as `ovon.events[1].parameters`.
struct Violation {
  std::string path;
  std::string message;

  bool operator==(const Violation&) const = default;
};

std::string format_violations(const std::vector<Violation>& violations);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
 public:
  using Error::Error;
};

// Thrown by parsers when the text is well-formed JSON but not a legal
// envelope (or manifest).
class SchemaViolation : public Error {
 public:
  explicit SchemaViolation(std::vector<Violation> violations)
      : Error(format_violations(violations)), violations_(std::move(violations)) {}
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

// Thrown by serializers when handed an in-memory value that fails validation.
class ValidationFailed : public Error {
 public:
  explicit ValidationFailed(std::vector<Violation> violations)
      : Error(format_violations(violations)), violations_(std::move(violations)) {}
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

class InvalidManifest : public Error {
 public:
  explicit InvalidManifest(std::vector<Violation> violations)
      : Error(format_violations(violations)), violations_(std::move(violations)) {}
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

class PayloadMismatch : public Error {
 public:
  using Error::Error;
};

class MissingTextFeature : public Error {
 public:
  MissingTextFeature() : Error("dialog event has no \"text\" feature") {}
};

class UnsupportedEvent : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  enum class Kind { kTimeout, kConnectFailure, kInvalidResponseEnvelope };

  TransportError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class BindFailure : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoFailure : public Error {
 public:
  using Error::Error;
};

class DiscoveryFailed : public Error {
 public:
  using Error::Error;
};

class ScenarioSetupFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace ovon
