// SPDX-License-Identifier: Apache-2.0

#include "ecal/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <optional>

#include "ecal/errors.hpp"
#include "json.hpp"

namespace ecal {

std::string termination_name(Termination t) {
  switch (t) {
    case Termination::GradientTolerance: return "gradient_tolerance";
    case Termination::StepTolerance: return "step_tolerance";
    case Termination::MaxIterations: return "max_iterations";
    case Termination::NoProgress: return "no_progress";
  }
  return "unknown";
}

namespace {

using Vec = std::vector<double>;

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(const Vec& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

double projected_gradient_norm(const Vec& x, const Vec& g) {
  double m = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    m = std::max(m, std::abs(std::clamp(x[i] - g[i], 0.0, 1.0) - x[i]));
  return m;
}

struct Pair {
  Vec s, y;
  double rho;
};

// -H g over the free variables by the two-loop recursion.
Vec lbfgs_direction(const std::deque<Pair>& pairs, const Vec& g, const std::vector<char>& fixed) {
  Vec q = g;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (fixed[i]) q[i] = 0.0;
  std::vector<double> a(pairs.size());
  for (std::size_t k = pairs.size(); k-- > 0;) {
    a[k] = pairs[k].rho * dot(pairs[k].s, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] -= a[k] * pairs[k].y[i];
  }
  const Pair& last = pairs.back();
  const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
  for (double& v : q) v *= gamma;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double b = pairs[k].rho * dot(pairs[k].y, q);
    for (std::size_t i = 0; i < q.size(); ++i) q[i] += pairs[k].s[i] * (a[k] - b);
  }
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = fixed[i] ? 0.0 : -q[i];
  return q;
}

Vec steepest_direction(const Vec& g, const std::vector<char>& fixed, double length) {
  Vec d(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!fixed[i]) d[i] = -g[i];
  const double n = inf_norm(d);
  if (n > 0.0)
    for (double& v : d) v *= length / n;
  return d;
}

}  // namespace

OptRun minimize(const OptProblem& problem, const std::vector<double>& beta0,
                const std::vector<double>& lo, const std::vector<double>& hi,
                const OptOptions& opt) {
  const std::size_t n = beta0.size();
  if (n == 0) throw ConfigError("nothing to optimize: no active parameters");
  if (lo.size() != n || hi.size() != n) throw ConfigError("bounds and initial guess differ in length");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(lo[i] < hi[i]) || !std::isfinite(lo[i]) || !std::isfinite(hi[i]))
      throw ConfigError("bounds for parameter " + std::to_string(i) + " must satisfy lo < hi");
    if (!(beta0[i] >= lo[i] && beta0[i] <= hi[i]))
      throw ConfigError("initial guess for parameter " + std::to_string(i) + " lies outside its bounds");
  }
  if (opt.memory < 1 || opt.max_iters < 0 || opt.max_backtracks < 1)
    throw ConfigError("optimizer options out of range");

  OptRun run;
  auto to_beta = [&](const Vec& x) {
    Vec b(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = std::clamp(lo[i] + x[i] * (hi[i] - lo[i]), lo[i], hi[i]);
    return b;
  };
  auto value = [&](const Vec& x) {
    ++run.counters.objective_evals;
    return problem.value(to_beta(x));
  };
  auto gradient = [&](const Vec& x) {
    ++run.counters.gradient_evals;
    Vec g = problem.gradient(to_beta(x));
    if (g.size() != n) throw DimensionError("gradient has the wrong length");
    for (std::size_t i = 0; i < n; ++i) g[i] *= hi[i] - lo[i];
    return g;
  };
  auto record = [&](int it, const Vec& x, double f, double pg) {
    run.history.push_back({it, to_beta(x), f, pg});
  };

  Vec x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = (beta0[i] - lo[i]) / (hi[i] - lo[i]);
  double fx = value(x);
  if (!std::isfinite(fx)) throw SolverError("objective is not finite at the initial guess");
  Vec g = gradient(x);
  const double pg0 = projected_gradient_norm(x, g);
  record(0, x, fx, pg0);
  run.termination = Termination::MaxIterations;

  std::deque<Pair> pairs;
  if (pg0 == 0.0) {
    run.termination = Termination::GradientTolerance;
  } else {
    for (int it = 1; it <= opt.max_iters; ++it) {
      std::vector<char> fixed(n);
      for (std::size_t i = 0; i < n; ++i)
        fixed[i] = (x[i] <= 0.0 && g[i] > 0.0) || (x[i] >= 1.0 && g[i] < 0.0);

      std::optional<Vec> accepted;
      double f_new = 0.0;
      // A failed quasi-Newton search is retried once along steepest descent.
      for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
        Vec d = pairs.empty() ? steepest_direction(g, fixed, opt.initial_step)
                              : lbfgs_direction(pairs, g, fixed);
        if (!(dot(g, d) < 0.0)) {
          pairs.clear();
          d = steepest_direction(g, fixed, opt.initial_step);
        }
        bool any_value = false;
        std::optional<SolverError> failure;
        double t = 1.0;
        for (int k = 0; k < opt.max_backtracks; ++k, t *= 0.5) {
          Vec xt(n), step(n);
          for (std::size_t i = 0; i < n; ++i) {
            xt[i] = std::clamp(x[i] + t * d[i], 0.0, 1.0);
            step[i] = xt[i] - x[i];
          }
          if (inf_norm(step) == 0.0) break;
          double ft;
          try {
            ft = value(xt);
          } catch (const SolverError& e) {
            failure = e;
            continue;
          }
          any_value = true;
          if (ft <= fx + opt.c1 * dot(g, step)) {
            accepted = std::move(xt);
            f_new = ft;
            break;
          }
        }
        if (accepted) break;
        if (failure && !any_value) throw *failure;
        if (pairs.empty()) break;
        pairs.clear();
      }
      if (!accepted) {
        run.termination = Termination::NoProgress;
        break;
      }

      const Vec g_new = gradient(*accepted);
      Pair p{Vec(n), Vec(n), 0.0};
      for (std::size_t i = 0; i < n; ++i) {
        p.s[i] = (*accepted)[i] - x[i];
        p.y[i] = g_new[i] - g[i];
      }
      const double step_norm = inf_norm(p.s);
      const double sy = dot(p.s, p.y);
      // Pairs without positive curvature would make H indefinite.
      if (sy > std::numeric_limits<double>::epsilon() * dot(p.y, p.y)) {
        p.rho = 1.0 / sy;
        pairs.push_back(std::move(p));
        if (pairs.size() > static_cast<std::size_t>(opt.memory)) pairs.pop_front();
      }
      x = std::move(*accepted);
      fx = f_new;
      g = g_new;
      const double pg = projected_gradient_norm(x, g);
      record(it, x, fx, pg);
      if (pg <= opt.gtol * pg0) {
        run.termination = Termination::GradientTolerance;
        break;
      }
      if (step_norm <= opt.xtol) {
        run.termination = Termination::StepTolerance;
        break;
      }
    }
  }
  run.beta = run.history.back().beta;
  run.J = run.history.back().J;
  return run;
}

GradientMethod parse_method(const std::string& name) {
  if (name == "fd") return GradientMethod::FD;
  if (name == "fs") return GradientMethod::FS;
  if (name == "adjoint") return GradientMethod::Adjoint;
  throw ConfigError("unknown gradient method '" + name + "' (expected fd, fs or adjoint)");
}

std::string method_name(GradientMethod m) {
  switch (m) {
    case GradientMethod::FD: return "fd";
    case GradientMethod::FS: return "fs";
    case GradientMethod::Adjoint: return "adjoint";
  }
  return "unknown";
}

OptRun calibrate(const Problem& pb, const CalibrationSpec& spec) {
  const auto np = static_cast<std::size_t>(num_params(pb.model));
  if (spec.beta0.size() != np || spec.lo.size() != np || spec.hi.size() != np)
    throw ConfigError(model_name(pb.model) + " calibration needs " + std::to_string(np) +
                      " entries in beta0 and both bounds");
  for (int k : pb.active)
    if (k < 0 || static_cast<std::size_t>(k) >= np)
      throw ConfigError("active parameter index " + std::to_string(k) + " out of range");

  auto full = [&](const Vec& active_values) {
    Vec b = spec.beta0;
    for (std::size_t k = 0; k < pb.active.size(); ++k)
      b[static_cast<std::size_t>(pb.active[k])] = active_values[k];
    return b;
  };
  auto pick = [&](const Vec& v) {
    Vec out;
    for (int k : pb.active) out.push_back(v[static_cast<std::size_t>(k)]);
    return out;
  };

  Counters solver;
  // The engines differentiate the trajectory of the latest value() call.
  std::optional<std::pair<Vec, ForwardResult>> last;
  auto trajectory_for = [&](const Vec& beta) -> const Trajectory& {
    if (!last || last->first != beta) last.emplace(beta, evaluate(pb, beta, &solver));
    return last->second.traj;
  };

  OptProblem problem;
  problem.value = [&](const Vec& a) {
    const Vec beta = full(a);
    last.emplace(beta, evaluate(pb, beta, &solver));
    return last->second.J.total;
  };
  problem.gradient = [&](const Vec& a) {
    const Vec beta = full(a);
    switch (spec.method) {
      case GradientMethod::FD: return gradient_fd(pb, beta, spec.fd, &solver).gradient;
      case GradientMethod::FS: return gradient_forward(pb, trajectory_for(beta), beta, &solver);
      case GradientMethod::Adjoint: break;
    }
    return gradient_adjoint(pb, trajectory_for(beta), beta, &solver);
  };

  OptRun run = minimize(problem, pick(spec.beta0), pick(spec.lo), pick(spec.hi), spec.opt);
  for (auto& h : run.history) h.beta = full(h.beta);
  run.beta = full(run.beta);
  const auto objective_evals = run.counters.objective_evals;
  const auto gradient_evals = run.counters.gradient_evals;
  run.counters = solver;
  run.counters.objective_evals = objective_evals;
  run.counters.gradient_evals = gradient_evals;
  return run;
}

std::string opt_run_to_json(const OptRun& run, const std::vector<std::string>& param_names) {
  nlohmann::ordered_json j;
  j["format"] = "ecal.optrun/1";
  j["termination"] = termination_name(run.termination);
  j["param_names"] = param_names;
  j["beta"] = run.beta;
  j["J"] = run.J;
  const Counters& c = run.counters;
  j["counters"] = {{"objective_evals", c.objective_evals},
                   {"gradient_evals", c.gradient_evals},
                   {"nonlinear_solves", c.nonlinear_solves},
                   {"newton_linear_solves", c.newton_linear_solves},
                   {"sensitivity_factorizations", c.sensitivity_factorizations},
                   {"sensitivity_rhs_columns", c.sensitivity_rhs_columns},
                   {"adjoint_linear_solves", c.adjoint_linear_solves}};
  auto& h = j["history"] = nlohmann::ordered_json::array();
  for (const auto& it : run.history)
    h.push_back({{"iteration", it.iteration}, {"J", it.J}, {"pg_norm", it.pg_norm}, {"beta", it.beta}});
  return j.dump(1) + "\n";
}

std::string opt_history_csv(const OptRun& run) {
  std::string out = "iteration,J,projected_gradient_norm\n";
  char buf[96];
  for (const auto& it : run.history) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", it.iteration, it.J, it.pg_norm);
    out += buf;
  }
  return out;
}

}  // namespace ecal
