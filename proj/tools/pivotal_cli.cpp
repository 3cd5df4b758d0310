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

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "pivotal/pivotal.h"

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config;
  uint64_t seed = 0;
  int64_t trajectories = 0;
  int64_t steps = 0;
  int threads = 0;
  std::string out = ".";
  std::string format = "csv";
};

constexpr int kChecksFailed = 1;
constexpr int kUsage = 2;
constexpr int kRuntime = 3;

int report_error(int status) {
  std::cerr << "error (" << pvt_status_name(status) << "): " << pvt_last_error() << "\n";
  return status == PVT_E_INPUT ? kUsage : kRuntime;
}

bool write_file(const fs::path& p, const char* data, size_t n) {
  std::ofstream f(p, std::ios::binary);
  f.write(data, static_cast<std::streamsize>(n));
  return static_cast<bool>(f);
}

int execute(const std::string& command, const Flags& fl, CLI::App& sub) {
  using Req = std::unique_ptr<pvt_request, decltype(&pvt_request_free)>;
  using Res = std::unique_ptr<pvt_result, decltype(&pvt_result_free)>;
  pvt_request* raw = nullptr;
  if (int s = pvt_request_new(command.c_str(), &raw)) return report_error(s);
  Req req(raw, pvt_request_free);

  if (!fl.config.empty()) {
    std::ifstream f(fl.config, std::ios::binary);
    if (!f) {
      std::cerr << "error: cannot read config " << fl.config << "\n";
      return kUsage;
    }
    std::ostringstream text;
    text << f.rdbuf();
    if (int s = pvt_request_set_config(req.get(), text.str().c_str())) return report_error(s);
  }
  int s = PVT_OK;
  if (!s && sub.count("--seed")) s = pvt_request_set_seed(req.get(), fl.seed);
  if (!s && sub.count("--trajectories")) s = pvt_request_set_trajectories(req.get(), fl.trajectories);
  if (!s && sub.count("--steps")) s = pvt_request_set_steps(req.get(), fl.steps);
  if (!s && sub.count("--threads")) s = pvt_request_set_threads(req.get(), fl.threads);
  if (s) return report_error(s);

  pvt_result* rr = nullptr;
  if (int st = pvt_run(req.get(), &rr)) return report_error(st);
  Res res(rr, pvt_result_free);

  std::error_code ec;
  fs::create_directories(fl.out, ec);
  if (ec) {
    std::cerr << "error: cannot create " << fl.out << ": " << ec.message() << "\n";
    return kRuntime;
  }
  std::string report = pvt_result_report(res.get());
  bool ok = write_file(fs::path(fl.out) / "report.json", report.data(), report.size());
  for (size_t i = 0; i < pvt_result_artifact_count(res.get()); ++i) {
    int kind = 0;
    const char* name = nullptr;
    const char* content = nullptr;
    size_t len = 0;
    pvt_result_artifact(res.get(), i, &kind, &name, &content, &len);
    if (kind == PVT_ARTIFACT_CURVE && fl.format != "csv") continue;
    ok = write_file(fs::path(fl.out) / name, content, len) && ok;
  }
  if (!ok) {
    std::cerr << "error: failed writing outputs to " << fl.out << "\n";
    return kRuntime;
  }
  std::cout << pvt_result_summary(res.get()) << "\n";
  std::fprintf(stderr, "wall time %.3f s\n", pvt_result_wall_seconds(res.get()));
  return pvt_result_passed(res.get()) ? 0 : kChecksFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo experiments on random matrix products and pivoting walks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pvt_version()));

  Flags fl;
  std::map<CLI::App*, std::string> names;
  for (size_t i = 0; i < pvt_command_count(); ++i) {
    std::string name = pvt_command_name(i);
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", fl.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", fl.seed, "master seed");
    sub->add_option("--trajectories", fl.trajectories, "number of trajectories")
        ->check(CLI::Range(1L, 1L << 40));
    sub->add_option("--steps", fl.steps, "steps per trajectory")->check(CLI::Range(1L, 1L << 40));
    sub->add_option("--out", fl.out, "output directory")->capture_default_str();
    sub->add_option("--format", fl.format, "csv writes curve files too; json only report.json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    sub->add_option("--threads", fl.threads, "worker threads")->check(CLI::Range(1, 4096));
    names[sub] = name;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }
  for (auto& [sub, name] : names)
    if (sub->parsed()) return execute(name, fl, *sub);
  return kUsage;
}
