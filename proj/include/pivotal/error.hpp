// Copyright 2026 The pivotal authors
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

namespace pivotal {

enum class ErrorKind {
  Input = 1,
  Domain = 2,
  Model = 3,
  Construction = 4,
  Internal = 5,
  Io = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct InputError : Error {
  explicit InputError(const std::string& w) : Error(ErrorKind::Input, w) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::Domain, w) {}
};
// The supplied Schottky data contradicts its own guarantees.
struct ModelError : Error {
  explicit ModelError(const std::string& w) : Error(ErrorKind::Model, w) {}
};
struct ConstructionError : Error {
  explicit ConstructionError(const std::string& w)
      : Error(ErrorKind::Construction, w) {}
};
struct InternalError : Error {
  explicit InternalError(const std::string& w)
      : Error(ErrorKind::Internal, w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::Io, w) {}
};

}  // namespace pivotal
