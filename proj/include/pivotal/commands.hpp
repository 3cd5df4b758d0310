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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pivotal::cmd {

// Command-line style request. Flags override the config file.
struct Request {
  std::string command;
  std::string config;  // JSON text, empty for defaults
  std::optional<uint64_t> seed;
  std::optional<long> trajectories;
  std::optional<long> steps;
  std::optional<int> threads;
};

struct Artifact {
  std::string name;  // file name
  std::string content;
};

struct Response {
  bool passed = false;
  std::string report;             // report.json
  std::vector<Artifact> curves;   // one CSV per curve
  std::vector<Artifact> extra;    // other files (e.g. the Schottky model)
  std::string summary;            // one line
  double wall_seconds = 0.0;
};

const std::vector<std::string>& commands();

// Throws pivotal::Error subclasses on bad input or failed constructions.
Response run(const Request& req);

}  // namespace pivotal::cmd
