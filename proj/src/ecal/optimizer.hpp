// SPDX-License-Identifier: Apache-2.0
//
// Bound-constrained limited-memory quasi-Newton minimization and the
// calibration driver on top of the three gradient engines.
//
// The optimizer works on x = (beta - lo) / (hi - lo) in [0, 1]^n. Each
// iteration fixes the variables held at a bound by the gradient, takes an
// L-BFGS direction over the free ones and backtracks along the projected
// path P(x + t d) until sufficient decrease holds.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ecal/sensitivity.hpp"

namespace ecal {

struct OptOptions {
  int memory = 10;
  double gtol = 1e-10;         // projected-gradient norm relative to the initial one
  double xtol = 1e-12;         // max scaled step component
  int max_iters = 200;
  double c1 = 1e-4;            // Armijo constant
  int max_backtracks = 30;     // halvings per line search
  double initial_step = 0.05;  // scaled length of the first steepest-descent step
};

enum class Termination { GradientTolerance, StepTolerance, MaxIterations, NoProgress };

std::string termination_name(Termination t);

struct OptIterate {
  int iteration = 0;
  std::vector<double> beta;
  double J = 0.0;
  double pg_norm = 0.0;  // infinity norm of the scaled projected gradient
};

struct OptRun {
  std::vector<OptIterate> history;  // iteration 0 is the starting point
  std::vector<double> beta;         // final iterate
  double J = 0.0;
  Termination termination = Termination::MaxIterations;
  Counters counters;
};

/// Objective callable pair. gradient(beta) is only called at a point whose
/// value was the most recent value() call.
struct OptProblem {
  std::function<double(const std::vector<double>&)> value;
  std::function<std::vector<double>(const std::vector<double>&)> gradient;
};

/// Minimizes over lo <= beta <= hi. A SolverError thrown by value() during a
/// line search rejects the trial point; if every trial of a line search
/// fails that way the error propagates.
OptRun minimize(const OptProblem& problem, const std::vector<double>& beta0,
                const std::vector<double>& lo, const std::vector<double>& hi,
                const OptOptions& opt = {});

enum class GradientMethod { FD, FS, Adjoint };

GradientMethod parse_method(const std::string& name);
std::string method_name(GradientMethod m);

struct CalibrationSpec {
  std::vector<double> beta0;  // full parameter vector; inactive entries stay fixed
  std::vector<double> lo;
  std::vector<double> hi;
  GradientMethod method = GradientMethod::Adjoint;
  OptOptions opt;
  FdOptions fd;
};

/// Reduced-space calibration: each objective value is a full forward solve.
/// The returned history and beta are full parameter vectors.
OptRun calibrate(const Problem& pb, const CalibrationSpec& spec);

std::string opt_run_to_json(const OptRun& run, const std::vector<std::string>& param_names);
/// Convergence history with columns iteration, J, projected_gradient_norm.
std::string opt_history_csv(const OptRun& run);

}  // namespace ecal
