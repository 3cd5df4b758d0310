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

#include <cstring>
#include <string>
#include <thread>

#include "doctest.h"
#include "pivotal/pivotal.h"

namespace {

pvt_request* make(const char* command, const char* config = nullptr) {
  pvt_request* r = nullptr;
  REQUIRE(pvt_request_new(command, &r) == PVT_OK);
  if (config) REQUIRE(pvt_request_set_config(r, config) == PVT_OK);
  return r;
}

const char* kSmallRank =
    R"({"trajectories": 300, "steps": 20, "bootstrap": 20, "points": 5})";

}  // namespace

TEST_CASE("command listing") {
  CHECK(pvt_command_count() == 9);
  for (size_t i = 0; i < pvt_command_count(); ++i) CHECK(pvt_command_name(i) != nullptr);
  CHECK(pvt_command_name(pvt_command_count()) == nullptr);
  CHECK(std::strlen(pvt_version()) > 0);
}

TEST_CASE("run and read back artifacts") {
  pvt_request* r = make("rank", kSmallRank);
  CHECK(pvt_request_set_seed(r, 3) == PVT_OK);
  CHECK(pvt_request_set_threads(r, 2) == PVT_OK);
  pvt_result* res = nullptr;
  REQUIRE(pvt_run(r, &res) == PVT_OK);
  REQUIRE(res != nullptr);
  std::string report = pvt_result_report(res);
  CHECK(report.find("\"experiment\": \"rank\"") != std::string::npos);
  CHECK(report.find("\"seed\": 3") != std::string::npos);
  CHECK(std::string(pvt_result_summary(res)).rfind("rank: ", 0) == 0);
  CHECK(pvt_result_wall_seconds(res) >= 0.0);
  size_t n = pvt_result_artifact_count(res);
  CHECK(n >= 4);
  for (size_t i = 0; i < n; ++i) {
    int kind = -1;
    const char* name = nullptr;
    const char* content = nullptr;
    size_t len = 0;
    REQUIRE(pvt_result_artifact(res, i, &kind, &name, &content, &len) == PVT_OK);
    CHECK(kind == PVT_ARTIFACT_CURVE);
    CHECK(std::string(name).size() > 4);
    CHECK(std::strlen(content) == len);
    CHECK(std::string(content).rfind("n,statistic,value,ci_lo,ci_hi\n", 0) == 0);
  }
  CHECK(pvt_result_artifact(res, n, nullptr, nullptr, nullptr, nullptr) == PVT_E_INPUT);
  pvt_result_free(res);
  pvt_request_free(r);
}

TEST_CASE("same request gives identical reports across thread counts") {
  std::string first;
  for (int th : {1, 4, 8}) {
    pvt_request* r = make("rank", kSmallRank);
    pvt_request_set_threads(r, th);
    pvt_result* res = nullptr;
    REQUIRE(pvt_run(r, &res) == PVT_OK);
    std::string rep = pvt_result_report(res);
    if (first.empty()) first = rep;
    CHECK(rep == first);
    pvt_result_free(res);
    pvt_request_free(r);
  }
}

TEST_CASE("errors map to status codes and messages") {
  pvt_request* r = nullptr;
  CHECK(pvt_request_new("bogus", &r) == PVT_E_INPUT);
  CHECK(r == nullptr);
  CHECK(std::string(pvt_last_error()).find("bogus") != std::string::npos);
  CHECK(pvt_request_new(nullptr, &r) == PVT_E_INPUT);
  CHECK(pvt_request_new("rank", nullptr) == PVT_E_INPUT);

  r = make("rank", R"({"unknown": 1})");
  pvt_result* res = nullptr;
  CHECK(pvt_run(r, &res) == PVT_E_INPUT);
  CHECK(res == nullptr);
  CHECK(std::string(pvt_last_error()).find("unknown") != std::string::npos);
  CHECK(pvt_request_set_trajectories(r, 0) == PVT_E_INPUT);
  CHECK(pvt_request_set_steps(r, -1) == PVT_E_INPUT);
  CHECK(pvt_request_set_threads(r, 0) == PVT_E_INPUT);
  pvt_request_free(r);

  r = make("contraction", R"({"trajectories": 5, "steps": 5, "params": {"x": [0, 0]}})");
  CHECK(pvt_run(r, &res) == PVT_E_DOMAIN);
  pvt_request_free(r);

  CHECK(pvt_run(nullptr, &res) == PVT_E_INPUT);
  CHECK(pvt_request_set_seed(nullptr, 1) == PVT_E_INPUT);
  CHECK(pvt_result_report(nullptr) == nullptr);
  CHECK(pvt_result_passed(nullptr) == 0);
  CHECK(pvt_result_artifact_count(nullptr) == 0);
  pvt_request_free(nullptr);
  pvt_result_free(nullptr);
  CHECK(std::string(pvt_status_name(PVT_E_IO)) == "io error");
  CHECK(std::string(pvt_status_name(99)) == "unknown status");
}

TEST_CASE("last error is per thread") {
  pvt_request* r = nullptr;
  CHECK(pvt_request_new("bogus", &r) == PVT_E_INPUT);
  std::string other;
  std::thread t([&] {
    pvt_request* q = nullptr;
    pvt_request_new("rank", &q);
    other = pvt_last_error();
    pvt_request_free(q);
  });
  t.join();
  CHECK(other.empty());
  CHECK(std::string(pvt_last_error()).find("bogus") != std::string::npos);
}

TEST_CASE("schottky build exposes the model file") {
  pvt_request* r = make("schottky-build", R"({"params": {"adversaries_random": 50}})");
  pvt_result* res = nullptr;
  REQUIRE(pvt_run(r, &res) == PVT_OK);
  bool found = false;
  for (size_t i = 0; i < pvt_result_artifact_count(res); ++i) {
    int kind = 0;
    const char* name = nullptr;
    pvt_result_artifact(res, i, &kind, &name, nullptr, nullptr);
    if (kind == PVT_ARTIFACT_EXTRA && std::string(name) == "model.json") found = true;
  }
  CHECK(found);
  CHECK(pvt_result_passed(res) == 1);
  pvt_result_free(res);
  pvt_request_free(r);
}
