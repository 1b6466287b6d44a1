// SPDX-License-Identifier: Apache-2.0
//
// ecal command-line front end. Talks to the library only through ecal.h.
// Exit codes: 0 success, 2 configuration error, 3 solver failure.

#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "ecal/ecal.h"
#include "json.hpp"

namespace {

const char* status_name(ecal_status s) {
  switch (s) {
    case ECAL_OK: return "ok";
    case ECAL_INVALID_ARGUMENT: return "invalid_argument";
    case ECAL_CONFIG_ERROR: return "config_error";
    case ECAL_SOLVER_ERROR: return "solver_failure";
    case ECAL_INTERNAL_ERROR: return "internal_error";
  }
  return "unknown";
}

int report(ecal_status s, const std::string& command, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = {{"command", command}, {"status", status_name(s)}, {"message", message}};
  std::fprintf(stderr, "%s\n", j.dump(1).c_str());
  return s == ECAL_SOLVER_ERROR ? 3 : s == ECAL_CONFIG_ERROR ? 2 : 1;
}

struct Options {
  std::string config;
  std::string out;
  std::string method;
  int threads = 1;
};

int run(const std::string& command, const Options& opt) {
  ecal_experiment* exp = nullptr;
  ecal_status s = ecal_experiment_load(opt.config.c_str(), &exp);
  if (s != ECAL_OK) return report(s, command, ecal_last_error());
  if (!opt.method.empty()) s = ecal_experiment_set_method(exp, opt.method.c_str());
  if (s == ECAL_OK) s = ecal_experiment_run(exp, command.c_str(), opt.out.empty() ? nullptr : opt.out.c_str());
  int code = 0;
  if (s == ECAL_OK)
    std::printf("%s\n", ecal_experiment_last_summary(exp));
  else
    code = report(s, command, ecal_last_error());
  ecal_experiment_free(exp);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ecal: elastoplastic parameter calibration from full-field displacements"};
  app.set_version_flag("--version", std::string(ecal_version()));
  app.require_subcommand(1);

  Options opt;
  std::string chosen;
  const std::pair<const char*, const char*> commands[] = {
      {"mesh", "generate the mesh and write it as a field file"},
      {"forward", "run the forward solve at beta_true and write per-step fields"},
      {"synth", "write synthetic DIC data at beta_true with the configured noise"},
      {"gradcheck", "compare forward-sensitivity and adjoint gradients with finite differences"},
      {"calibrate", "recover the active parameters from DIC data"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "experiment configuration (JSON)")->required();
    sub->add_option("--out", opt.out, "output directory (overrides output_dir)");
    // Element loops run sequentially; the flag is accepted for script compatibility.
    sub->add_option("--threads", opt.threads, "worker threads (currently ignored)")->check(CLI::PositiveNumber);
    sub->add_option("--method", opt.method, "gradient method")->check(CLI::IsMember({"fd", "fs", "adjoint"}));
    sub->callback([&chosen, n = std::string(name)] { chosen = n; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return run(chosen, opt);
}
