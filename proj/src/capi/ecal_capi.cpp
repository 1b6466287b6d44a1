// SPDX-License-Identifier: Apache-2.0

#include "ecal/ecal.h"

#include <new>
#include <stdexcept>
#include <string>

#include "ecal/errors.hpp"
#include "ecal/experiment.hpp"

struct ecal_experiment {
  ecal::ExperimentConfig config;
  std::string resolved;
  std::string summary;
};

namespace {

thread_local std::string g_last_error;

ecal_status fail(ecal_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Every exception stops here; the order puts derived types first.
template <class Fn>
ecal_status guarded(Fn&& fn) {
  try {
    fn();
    return ECAL_OK;
  } catch (const ecal::ConfigError& e) {
    return fail(ECAL_CONFIG_ERROR, e.what());
  } catch (const ecal::SolverError& e) {
    return fail(ECAL_SOLVER_ERROR, e.what());
  } catch (const ecal::DomainError& e) {
    // Non-physical states (inverted elements, negative stretches) during a solve.
    return fail(ECAL_SOLVER_ERROR, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(ECAL_CONFIG_ERROR, e.what());
  } catch (const std::bad_alloc&) {
    return fail(ECAL_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(ECAL_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(ECAL_INTERNAL_ERROR, "unknown error");
  }
}

}  // namespace

extern "C" {

const char* ecal_version(void) { return "1.0.0"; }

const char* ecal_last_error(void) { return g_last_error.c_str(); }

ecal_status ecal_experiment_load(const char* config_path, ecal_experiment** out) {
  if (!config_path || !out) return fail(ECAL_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new ecal_experiment{ecal::load_config(config_path), {}, {}}; });
}

ecal_status ecal_experiment_parse(const char* json_text, const char* base_dir, ecal_experiment** out) {
  if (!json_text || !out) return fail(ECAL_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new ecal_experiment{ecal::parse_config(json_text, base_dir ? base_dir : ""), {}, {}};
  });
}

void ecal_experiment_free(ecal_experiment* exp) { delete exp; }

ecal_status ecal_experiment_set_method(ecal_experiment* exp, const char* method) {
  if (!exp || !method) return fail(ECAL_INVALID_ARGUMENT, "null argument");
  return guarded([&] { exp->config.method = ecal::parse_method(method); });
}

const char* ecal_experiment_resolved_config(ecal_experiment* exp) {
  if (!exp) return "";
  exp->resolved = ecal::resolved_config_json(exp->config);
  return exp->resolved.c_str();
}

const char* ecal_experiment_output_dir(const ecal_experiment* exp) {
  return exp ? exp->config.output_dir.c_str() : "";
}

ecal_status ecal_experiment_run(ecal_experiment* exp, const char* command, const char* out_dir) {
  if (!exp || !command) return fail(ECAL_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const std::string dir = out_dir ? out_dir : exp->config.output_dir;
    exp->summary = ecal::run_command(command, exp->config, dir).summary_json;
  });
}

const char* ecal_experiment_last_summary(const ecal_experiment* exp) {
  return exp ? exp->summary.c_str() : "";
}

}  // extern "C"
