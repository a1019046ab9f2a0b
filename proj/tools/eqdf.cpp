// Copyright 2026 The eqdf Authors
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

// Command-line driver over the eqdf C API.

#include <malloc.h>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eqdf.h"

namespace {

struct Options {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  bool force = false;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Options& o, bool seeded) {
  cmd->add_option("--config", o.config, "Experiment configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "Run directory")->required();
  if (seeded) cmd->add_option("--seed", o.seed, "Override the configured seed");
  cmd->add_option("--threads", o.threads, "Worker threads (does not change results)")->check(CLI::Range(1u, 1024u));
  cmd->add_flag("--force", o.force, "Recompute even if stage outputs are current");
  cmd->add_flag("-q,--quiet", o.quiet, "Suppress progress lines");
}

void log_line(const char* line, void*) { std::cerr << line << '\n'; }

int fail(eqdf_status st) {
  std::cerr << "eqdf: error: " << eqdf_last_error() << '\n';
  return static_cast<int>(st);
}

}  // namespace

int main(int argc, char** argv) {
  // Training allocates and frees many mid-sized tensors; keep them on the heap.
  mallopt(M_MMAP_THRESHOLD, 268435456);
  mallopt(M_TRIM_THRESHOLD, 1073741824);
  mallopt(M_TOP_PAD, 67108864);

  CLI::App app{"Subgroup parity audits of adversarial defenses"};
  app.set_version_flag("--version", std::string(eqdf_version()));
  app.require_subcommand(1);

  Options o;
  struct Cmd {
    const char* name;
    const char* help;
    eqdf_stage stage;
  };
  const std::vector<Cmd> cmds{
      {"synth", "Generate the synthetic dataset", EQDF_STAGE_SYNTH},
      {"zoo", "Train the model zoo", EQDF_STAGE_ZOO},
      {"attack-sweep", "PGD sweep, robustness curves, parity and correlations", EQDF_STAGE_ATTACK_SWEEP},
      {"reject-sweep", "Neural rejection and randomized smoothing sweeps", EQDF_STAGE_REJECT_SWEEP},
      {"report", "Render the markdown report and SVG charts", EQDF_STAGE_REPORT},
      {"all", "Run every stage in order", EQDF_STAGE_ALL},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : cmds) {
    auto* sub = app.add_subcommand(c.name, c.help);
    add_common(sub, o, c.stage != EQDF_STAGE_REPORT);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return EQDF_E_USAGE;
  }

  eqdf_stage stage = EQDF_STAGE_ALL;
  CLI::App* chosen = nullptr;
  for (std::size_t i = 0; i < cmds.size(); ++i)
    if (subs[i]->parsed()) stage = cmds[i].stage, chosen = subs[i];

  eqdf_session* s = nullptr;
  eqdf_status st = eqdf_session_create(&s);
  if (st != EQDF_OK) return fail(st);
  auto run = [&]() -> eqdf_status {
    eqdf_status r = EQDF_OK;
    if (!o.config.empty() && (r = eqdf_session_load_config(s, o.config.c_str())) != EQDF_OK) return r;
    if (stage != EQDF_STAGE_REPORT && chosen->count("--seed") && (r = eqdf_session_set_seed(s, o.seed)) != EQDF_OK) return r;
    if (o.threads && (r = eqdf_session_set_threads(s, o.threads)) != EQDF_OK) return r;
    if ((r = eqdf_session_set_out(s, o.out.c_str())) != EQDF_OK) return r;
    if ((r = eqdf_session_set_force(s, o.force)) != EQDF_OK) return r;
    if (!o.quiet && (r = eqdf_session_set_logger(s, log_line, nullptr)) != EQDF_OK) return r;
    return eqdf_run_stage(s, stage);
  };
  st = run();
  eqdf_session_destroy(s);
  return st == EQDF_OK ? 0 : fail(st);
}
