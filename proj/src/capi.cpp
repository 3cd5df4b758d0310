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

#include "pivotal/pivotal.h"

#include <algorithm>
#include <new>
#include <string>
#include <vector>

#include "pivotal/commands.hpp"
#include "pivotal/error.hpp"

struct pvt_request {
  pivotal::cmd::Request req;
};

struct pvt_result {
  pivotal::cmd::Response res;
  std::vector<std::pair<int, const pivotal::cmd::Artifact*>> index;
};

namespace {

thread_local std::string last_error;

int fail(int code, const std::string& msg) {
  last_error = msg;
  return code;
}

template <class F>
int guarded(F&& f) {
  try {
    last_error.clear();
    return f();
  } catch (const pivotal::Error& e) {
    return fail(static_cast<int>(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(PVT_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PVT_E_INTERNAL, e.what());
  } catch (...) {
    return fail(PVT_E_INTERNAL, "unknown exception");
  }
}

int null_arg(const char* what) { return fail(PVT_E_INPUT, std::string(what) + " is NULL"); }

}  // namespace

extern "C" {

const char* pvt_version(void) { return "1.0.0"; }

const char* pvt_status_name(int status) {
  switch (status) {
    case PVT_OK: return "ok";
    case PVT_E_INPUT: return "input error";
    case PVT_E_DOMAIN: return "domain error";
    case PVT_E_MODEL: return "model error";
    case PVT_E_CONSTRUCTION: return "construction error";
    case PVT_E_INTERNAL: return "internal error";
    case PVT_E_IO: return "io error";
    default: return "unknown status";
  }
}

const char* pvt_last_error(void) { return last_error.c_str(); }

size_t pvt_command_count(void) { return pivotal::cmd::commands().size(); }

const char* pvt_command_name(size_t i) {
  const auto& c = pivotal::cmd::commands();
  return i < c.size() ? c[i].c_str() : nullptr;
}

int pvt_request_new(const char* command, pvt_request** out) {
  if (!out) return null_arg("out");
  *out = nullptr;
  if (!command) return null_arg("command");
  return guarded([&] {
    const auto& c = pivotal::cmd::commands();
    if (std::find(c.begin(), c.end(), command) == c.end())
      throw pivotal::InputError(std::string("unknown command '") + command + "'");
    auto* r = new pvt_request;
    r->req.command = command;
    *out = r;
    return PVT_OK;
  });
}

void pvt_request_free(pvt_request* req) { delete req; }

int pvt_request_set_config(pvt_request* req, const char* json) {
  if (!req) return null_arg("request");
  return guarded([&] {
    req->req.config = json ? json : "";
    return PVT_OK;
  });
}

int pvt_request_set_seed(pvt_request* req, uint64_t seed) {
  if (!req) return null_arg("request");
  req->req.seed = seed;
  return PVT_OK;
}

int pvt_request_set_trajectories(pvt_request* req, int64_t n) {
  if (!req) return null_arg("request");
  if (n < 1) return fail(PVT_E_INPUT, "trajectories must be positive");
  req->req.trajectories = static_cast<long>(n);
  return PVT_OK;
}

int pvt_request_set_steps(pvt_request* req, int64_t n) {
  if (!req) return null_arg("request");
  if (n < 1) return fail(PVT_E_INPUT, "steps must be positive");
  req->req.steps = static_cast<long>(n);
  return PVT_OK;
}

int pvt_request_set_threads(pvt_request* req, int n) {
  if (!req) return null_arg("request");
  if (n < 1) return fail(PVT_E_INPUT, "threads must be positive");
  req->req.threads = n;
  return PVT_OK;
}

int pvt_run(const pvt_request* req, pvt_result** out) {
  if (!out) return null_arg("out");
  *out = nullptr;
  if (!req) return null_arg("request");
  return guarded([&] {
    auto* r = new pvt_result;
    try {
      r->res = pivotal::cmd::run(req->req);
    } catch (...) {
      delete r;
      throw;
    }
    for (const auto& a : r->res.curves) r->index.emplace_back(PVT_ARTIFACT_CURVE, &a);
    for (const auto& a : r->res.extra) r->index.emplace_back(PVT_ARTIFACT_EXTRA, &a);
    *out = r;
    return PVT_OK;
  });
}

void pvt_result_free(pvt_result* res) { delete res; }

int pvt_result_passed(const pvt_result* res) { return res && res->res.passed ? 1 : 0; }

const char* pvt_result_report(const pvt_result* res) {
  return res ? res->res.report.c_str() : nullptr;
}

const char* pvt_result_summary(const pvt_result* res) {
  return res ? res->res.summary.c_str() : nullptr;
}

double pvt_result_wall_seconds(const pvt_result* res) { return res ? res->res.wall_seconds : 0.0; }

size_t pvt_result_artifact_count(const pvt_result* res) { return res ? res->index.size() : 0; }

int pvt_result_artifact(const pvt_result* res, size_t i, int* kind, const char** name,
                        const char** content, size_t* length) {
  if (!res) return null_arg("result");
  if (i >= res->index.size()) return fail(PVT_E_INPUT, "artifact index out of range");
  const auto& [k, a] = res->index[i];
  if (kind) *kind = k;
  if (name) *name = a->name.c_str();
  if (content) *content = a->content.c_str();
  if (length) *length = a->content.size();
  return PVT_OK;
}

}  // extern "C"
