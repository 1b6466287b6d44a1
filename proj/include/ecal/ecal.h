/* SPDX-License-Identifier: Apache-2.0 */
/*
 * C interface to the ecal calibration library.
 *
 * An experiment handle owns a validated configuration. Every call returns an
 * ecal_status; on failure ecal_last_error() describes the most recent error
 * raised on the calling thread. Strings returned by the library stay valid
 * until the next call that modifies or frees the same handle.
 */
#ifndef ECAL_ECAL_H
#define ECAL_ECAL_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#  if defined(ECAL_BUILDING_LIBRARY)
#    define ECAL_API __declspec(dllexport)
#  else
#    define ECAL_API __declspec(dllimport)
#  endif
#else
#  define ECAL_API __attribute__((visibility("default")))
#endif

/* Values 2 and 3 double as the CLI exit codes. */
typedef enum ecal_status {
  ECAL_OK = 0,
  ECAL_INVALID_ARGUMENT = 1, /* null handle or pointer */
  ECAL_CONFIG_ERROR = 2,     /* invalid configuration, data or I/O path */
  ECAL_SOLVER_ERROR = 3,     /* forward or sensitivity solve failure */
  ECAL_INTERNAL_ERROR = 4
} ecal_status;

typedef struct ecal_experiment ecal_experiment;

ECAL_API const char* ecal_version(void);

/* Message for the last failed call on this thread; "" if none. */
ECAL_API const char* ecal_last_error(void);

/* Loads a JSON configuration file. Relative data paths resolve against the
 * file's directory. */
ECAL_API ecal_status ecal_experiment_load(const char* config_path, ecal_experiment** out);

/* Parses configuration text; base_dir may be NULL. */
ECAL_API ecal_status ecal_experiment_parse(const char* json_text, const char* base_dir,
                                           ecal_experiment** out);

ECAL_API void ecal_experiment_free(ecal_experiment* exp);

/* Overrides the gradient method: "fd", "fs" or "adjoint". */
ECAL_API ecal_status ecal_experiment_set_method(ecal_experiment* exp, const char* method);

/* Canonical configuration with defaults filled in. */
ECAL_API const char* ecal_experiment_resolved_config(ecal_experiment* exp);

/* Output directory named in the configuration. */
ECAL_API const char* ecal_experiment_output_dir(const ecal_experiment* exp);

/* Runs "mesh", "forward", "synth", "gradcheck" or "calibrate". A NULL
 * out_dir selects the configured output directory. */
ECAL_API ecal_status ecal_experiment_run(ecal_experiment* exp, const char* command,
                                         const char* out_dir);

/* JSON summary of the last successful run; "" before the first run. */
ECAL_API const char* ecal_experiment_last_summary(const ecal_experiment* exp);

#ifdef __cplusplus
}
#endif

#endif /* ECAL_ECAL_H */
