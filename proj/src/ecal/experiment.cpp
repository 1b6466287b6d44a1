// SPDX-License-Identifier: Apache-2.0

#include "ecal/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ecal/errors.hpp"
#include "ecal/field_io.hpp"
#include "ecal/material_hill.hpp"
#include "ecal/material_j2.hpp"
#include "json.hpp"

namespace ecal {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

double GeometryConfig::length_y() const {
  return kind == Kind::Bar ? extents[1] : 2.0 * arm_length;
}

namespace {

// ---- config parsing -------------------------------------------------------

std::string join(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config key '" + path + "': " + what);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; }))
      throw ConfigError("unknown config key '" + join(path, it.key()) + "'");
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const std::string& path, const char* key) {
  const json* v = find(obj, key);
  if (!v) throw ConfigError("missing required config key '" + join(path, key) + "'");
  return *v;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(path, "expected a finite number");
  return d;
}

int integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<int>();
}

std::uint64_t unsigned_integer(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  fail(path, "expected a non-negative integer");
}

std::string string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const json& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

template <std::size_t N>
std::array<int, N> positive_ints(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != N) fail(path, "expected " + std::to_string(N) + " integers");
  std::array<int, N> out;
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = integer(v[i], path + "[" + std::to_string(i) + "]");
    if (out[i] < 1) fail(path, "divisions must be positive");
  }
  return out;
}

int param_index(ModelKind model, const std::string& name, const std::string& path) {
  const auto names = param_names(model);
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    throw ConfigError("unknown config key '" + join(path, name) + "' (not a " + model_name(model) +
                      " parameter)");
  return static_cast<int>(it - names.begin());
}

// Object of parameter values. Missing entries take `fill`; with an empty
// fill every parameter is required.
std::vector<double> params(const json& v, const std::string& path, ModelKind model,
                           const std::vector<double>& fill) {
  if (!v.is_object()) fail(path, "expected an object of parameter values");
  const auto names = param_names(model);
  std::vector<double> out = fill.empty() ? std::vector<double>(names.size(), NAN) : fill;
  for (auto it = v.begin(); it != v.end(); ++it)
    out[static_cast<std::size_t>(param_index(model, it.key(), path))] =
        number(it.value(), join(path, it.key()));
  for (std::size_t i = 0; i < names.size(); ++i)
    if (std::isnan(out[i])) throw ConfigError("missing required config key '" + join(path, names[i]) + "'");
  return out;
}

GeometryConfig parse_geometry(const json& g) {
  GeometryConfig out;
  const std::string kind = string(require(g, "geometry", "kind"), "geometry.kind");
  if (kind == "bar") {
    check_keys(g, "geometry", {"kind", "extents", "divisions", "notch"});
    if (const json* v = find(g, "extents")) {
      const auto e = numbers(*v, "geometry.extents");
      if (e.size() != 3 || std::any_of(e.begin(), e.end(), [](double x) { return !(x > 0.0); }))
        fail("geometry.extents", "expected three positive lengths");
      out.extents = {e[0], e[1], e[2]};
    }
    if (const json* v = find(g, "divisions")) out.divisions = positive_ints<3>(*v, "geometry.divisions");
    if (const json* n = find(g, "notch")) {
      check_keys(*n, "geometry.notch", {"y_lo", "y_hi", "width_reduction"});
      out.notch = Notch{number(require(*n, "geometry.notch", "y_lo"), "geometry.notch.y_lo"),
                        number(require(*n, "geometry.notch", "y_hi"), "geometry.notch.y_hi"),
                        number(require(*n, "geometry.notch", "width_reduction"),
                               "geometry.notch.width_reduction")};
    }
  } else if (kind == "cruciform") {
    out.kind = GeometryConfig::Kind::Cruciform;
    check_keys(g, "geometry", {"kind", "arm_half_width", "arm_length", "thickness", "divisions"});
    if (const json* v = find(g, "arm_half_width")) out.arm_half_width = number(*v, "geometry.arm_half_width");
    if (const json* v = find(g, "arm_length")) out.arm_length = number(*v, "geometry.arm_length");
    if (const json* v = find(g, "thickness")) out.thickness = number(*v, "geometry.thickness");
    if (const json* v = find(g, "divisions")) {
      const auto d = positive_ints<3>(*v, "geometry.divisions");
      out.cross = {d[0], d[1], d[2]};
    }
  } else {
    fail("geometry.kind", "expected \"bar\" or \"cruciform\", got \"" + kind + "\"");
  }
  return out;
}

ojson geometry_json(const GeometryConfig& g) {
  ojson j;
  if (g.kind == GeometryConfig::Kind::Bar) {
    j["kind"] = "bar";
    j["extents"] = g.extents;
    j["divisions"] = g.divisions;
    if (g.notch)
      j["notch"] = {{"y_lo", g.notch->y_lo}, {"y_hi", g.notch->y_hi},
                    {"width_reduction", g.notch->width_reduction}};
  } else {
    j["kind"] = "cruciform";
    j["arm_half_width"] = g.arm_half_width;
    j["arm_length"] = g.arm_length;
    j["thickness"] = g.thickness;
    j["divisions"] = {g.cross.across_arm, g.cross.along_arm, g.cross.thickness};
  }
  return j;
}

ojson params_json(ModelKind model, const std::vector<double>& v) {
  ojson j = ojson::object();
  const auto names = param_names(model);
  for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = v[i];
  return j;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "", {"geometry", "model", "beta_true", "beta0", "lower", "upper", "active", "loads",
                     "num_steps", "solver", "noise", "method", "optimizer", "fd", "gradcheck", "data",
                     "output_dir"});
  ExperimentConfig c;
  c.base_dir = base_dir;
  c.geometry = parse_geometry(require(j, "", "geometry"));
  try {
    c.model = parse_model(string(require(j, "", "model"), "model"));
  } catch (const ConfigError& e) {
    fail("model", e.what());
  }
  const auto names = param_names(c.model);

  c.beta_true = params(require(j, "", "beta_true"), "beta_true", c.model, {});
  c.beta0 = find(j, "beta0") ? params(j["beta0"], "beta0", c.model, c.beta_true) : c.beta_true;

  if (const json* a = find(j, "active")) {
    if (!a->is_array() || a->empty()) fail("active", "expected a non-empty array of parameter names");
    for (std::size_t i = 0; i < a->size(); ++i) {
      const std::string path = "active[" + std::to_string(i) + "]";
      const int k = param_index(c.model, string((*a)[i], path), "active");
      if (std::find(c.active.begin(), c.active.end(), k) != c.active.end())
        fail(path, "parameter listed twice");
      c.active.push_back(k);
    }
    std::sort(c.active.begin(), c.active.end());
  } else {
    c.active = {0, 1, 2, 3};  // E, nu, Y, K
  }

  const bool has_lower = find(j, "lower") != nullptr, has_upper = find(j, "upper") != nullptr;
  if (has_lower != has_upper) fail(has_lower ? "upper" : "lower", "bounds need both lower and upper");
  if (has_lower) {
    // Inactive parameters may omit bounds; they stay pinned at beta0.
    std::vector<double> pinned = c.beta0;
    for (int k : c.active) pinned[static_cast<std::size_t>(k)] = NAN;
    c.lower = params(j["lower"], "lower", c.model, pinned);
    c.upper = params(j["upper"], "upper", c.model, pinned);
    for (int k : c.active) {
      const auto i = static_cast<std::size_t>(k);
      if (!(c.lower[i] < c.upper[i])) fail("lower." + names[i], "must be below upper." + names[i]);
      if (!(c.beta0[i] >= c.lower[i] && c.beta0[i] <= c.upper[i]))
        fail("beta0." + names[i], "outside [lower, upper]");
    }
  }

  const json& loads = require(j, "", "loads");
  check_keys(loads, "loads", {"traction_y", "traction_x"});
  c.loads.traction_y = numbers(require(loads, "loads", "traction_y"), "loads.traction_y");
  if (c.loads.traction_y.empty()) fail("loads.traction_y", "needs at least one load step");
  if (const json* v = find(loads, "traction_x")) {
    c.loads.traction_x = numbers(*v, "loads.traction_x");
    if (c.loads.traction_x.size() != c.loads.traction_y.size())
      fail("loads.traction_x", "must have one entry per load step");
    const bool any = std::any_of(c.loads.traction_x.begin(), c.loads.traction_x.end(),
                                 [](double x) { return x != 0.0; });
    if (any && c.geometry.kind == GeometryConfig::Kind::Bar)
      fail("loads.traction_x", "the bar has no traction_x face set");
  }
  if (const json* v = find(j, "num_steps")) {
    if (static_cast<std::size_t>(std::max(0, integer(*v, "num_steps"))) != c.loads.steps())
      fail("num_steps", "does not match the length of loads.traction_y");
  }

  if (const json* s = find(j, "solver")) {
    check_keys(*s, "solver", {"tol_global", "max_global_iters", "tol_local", "max_local_iters"});
    if (const json* v = find(*s, "tol_global")) c.solver.tol_global = number(*v, "solver.tol_global");
    if (const json* v = find(*s, "max_global_iters")) c.solver.max_global_iters = integer(*v, "solver.max_global_iters");
    if (const json* v = find(*s, "tol_local")) c.solver.local.tol = number(*v, "solver.tol_local");
    if (const json* v = find(*s, "max_local_iters")) c.solver.local.max_iters = integer(*v, "solver.max_local_iters");
    if (!(c.solver.tol_global > 0.0) || !(c.solver.local.tol > 0.0)) fail("solver", "tolerances must be positive");
    if (c.solver.max_global_iters < 1 || c.solver.local.max_iters < 1)
      fail("solver", "iteration limits must be positive");
  }

  if (const json* n = find(j, "noise")) {
    check_keys(*n, "noise", {"eps", "eps_from_floor", "seed"});
    if (const json* v = find(*n, "eps")) {
      if (v->is_string()) {
        if (v->get<std::string>() != "floor") fail("noise.eps", "expected a number or \"floor\"");
        c.noise.from_floor = true;
        c.noise.eps = noise_floor(c.geometry.length_y());
      } else {
        c.noise.eps = number(*v, "noise.eps");
        if (c.noise.eps < 0.0) fail("noise.eps", "must be non-negative");
      }
    }
    if (const json* v = find(*n, "eps_from_floor")) {
      if (!v->is_boolean()) fail("noise.eps_from_floor", "expected a boolean");
      c.noise.from_floor = c.noise.from_floor || v->get<bool>();
    }
    if (const json* v = find(*n, "seed")) c.noise.seed = unsigned_integer(*v, "noise.seed");
  }

  if (const json* v = find(j, "method")) {
    try {
      c.method = parse_method(string(*v, "method"));
    } catch (const ConfigError& e) {
      fail("method", e.what());
    }
  }

  if (const json* o = find(j, "optimizer")) {
    check_keys(*o, "optimizer", {"memory", "gtol", "xtol", "max_iters", "c1", "max_backtracks", "initial_step"});
    auto& p = c.optimizer;
    if (const json* v = find(*o, "memory")) p.memory = integer(*v, "optimizer.memory");
    if (const json* v = find(*o, "gtol")) p.gtol = number(*v, "optimizer.gtol");
    if (const json* v = find(*o, "xtol")) p.xtol = number(*v, "optimizer.xtol");
    if (const json* v = find(*o, "max_iters")) p.max_iters = integer(*v, "optimizer.max_iters");
    if (const json* v = find(*o, "c1")) p.c1 = number(*v, "optimizer.c1");
    if (const json* v = find(*o, "max_backtracks")) p.max_backtracks = integer(*v, "optimizer.max_backtracks");
    if (const json* v = find(*o, "initial_step")) p.initial_step = number(*v, "optimizer.initial_step");
    if (p.memory < 1 || p.max_iters < 0 || p.max_backtracks < 1 || !(p.c1 > 0.0 && p.c1 < 1.0) ||
        p.gtol < 0.0 || p.xtol < 0.0 || !(p.initial_step > 0.0))
      fail("optimizer", "option out of range");
  }

  if (const json* f = find(j, "fd")) {
    check_keys(*f, "fd", {"scheme", "step"});
    if (const json* v = find(*f, "scheme")) {
      const std::string s = string(*v, "fd.scheme");
      if (s == "forward") c.fd.scheme = FdScheme::Forward;
      else if (s == "central") c.fd.scheme = FdScheme::Central;
      else fail("fd.scheme", "expected \"forward\" or \"central\"");
    }
    if (const json* v = find(*f, "step")) {
      c.fd.step = number(*v, "fd.step");
      if (c.fd.step < 0.0) fail("fd.step", "must be non-negative (0 selects the automatic step)");
    }
  }

  if (const json* g = find(j, "gradcheck")) {
    check_keys(*g, "gradcheck", {"direction", "steps"});
    if (const json* v = find(*g, "direction")) {
      c.gradcheck_direction = numbers(*v, "gradcheck.direction");
      if (c.gradcheck_direction.size() != c.active.size())
        fail("gradcheck.direction", "needs one entry per active parameter");
    }
    if (const json* v = find(*g, "steps")) {
      c.gradcheck_steps = numbers(*v, "gradcheck.steps");
      for (double s : c.gradcheck_steps)
        if (!(s > 0.0)) fail("gradcheck.steps", "steps must be positive");
    }
  }

  if (const json* v = find(j, "data")) c.data_path = string(*v, "data");
  if (const json* v = find(j, "output_dir")) c.output_dir = string(*v, "output_dir");

  // Mesh construction errors surface here rather than mid-command.
  try {
    (void)build_mesh(c.geometry);
  } catch (const std::invalid_argument& e) {
    fail("geometry", e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  const std::string text = read_file(path);
  return parse_config(text, fs::path(path).parent_path().string());
}

std::string resolved_config_json(const ExperimentConfig& c) {
  ojson j;
  j["geometry"] = geometry_json(c.geometry);
  j["model"] = model_name(c.model);
  j["beta_true"] = params_json(c.model, c.beta_true);
  j["beta0"] = params_json(c.model, c.beta0);
  if (!c.lower.empty()) {
    j["lower"] = params_json(c.model, c.lower);
    j["upper"] = params_json(c.model, c.upper);
  }
  const auto names = param_names(c.model);
  j["active"] = ojson::array();
  for (int k : c.active) j["active"].push_back(names[static_cast<std::size_t>(k)]);
  j["num_steps"] = c.loads.steps();
  j["loads"]["traction_y"] = c.loads.traction_y;
  if (!c.loads.traction_x.empty()) j["loads"]["traction_x"] = c.loads.traction_x;
  j["solver"] = {{"tol_global", c.solver.tol_global},
                 {"max_global_iters", c.solver.max_global_iters},
                 {"tol_local", c.solver.local.tol},
                 {"max_local_iters", c.solver.local.max_iters}};
  j["noise"] = {{"eps", c.noise.eps}, {"eps_from_floor", c.noise.from_floor}, {"seed", c.noise.seed}};
  j["method"] = method_name(c.method);
  const auto& o = c.optimizer;
  j["optimizer"] = {{"memory", o.memory},       {"gtol", o.gtol},
                    {"xtol", o.xtol},           {"max_iters", o.max_iters},
                    {"c1", o.c1},               {"max_backtracks", o.max_backtracks},
                    {"initial_step", o.initial_step}};
  j["fd"] = {{"scheme", c.fd.scheme == FdScheme::Forward ? "forward" : "central"}, {"step", c.fd.step}};
  j["gradcheck"] = ojson::object();
  if (!c.gradcheck_direction.empty()) j["gradcheck"]["direction"] = c.gradcheck_direction;
  if (!c.gradcheck_steps.empty()) j["gradcheck"]["steps"] = c.gradcheck_steps;
  if (!c.data_path.empty()) j["data"] = c.data_path;
  j["output_dir"] = c.output_dir;
  return j.dump(2) + "\n";
}

Mesh build_mesh(const GeometryConfig& g) {
  if (g.kind == GeometryConfig::Kind::Bar) return generate_bar(g.extents, g.divisions, g.notch);
  return generate_cruciform(g.arm_half_width, g.arm_length, g.thickness, g.cross);
}

// ---- commands -------------------------------------------------------------

namespace {

class Session {
 public:
  Session(const ExperimentConfig& cfg, std::string out_dir)
      : cfg_(cfg), mesh_(build_mesh(cfg.geometry)), disc_(mesh_), out_dir_(std::move(out_dir)) {
    config_text_ = resolved_config_json(cfg_);
    std::string inputs = config_text_;
    if (!cfg_.data_path.empty()) {
      data_text_ = read_file(data_file());
      inputs += data_text_;
    }
    input_hash_ = hash_bytes(inputs);
    std::error_code ec;
    fs::create_directories(out_dir_, ec);
    if (ec) throw ConfigError("cannot create output directory '" + out_dir_ + "': " + ec.message());
  }

  const ExperimentConfig& cfg() const { return cfg_; }
  const Mesh& mesh() const { return mesh_; }
  const Discretization& disc() const { return disc_; }
  std::string hash() const { return hash_hex(input_hash_); }
  const std::vector<std::string>& files() const { return files_; }

  std::string data_file() const {
    const fs::path p(cfg_.data_path);
    return p.is_absolute() || cfg_.base_dir.empty() ? p.string() : (fs::path(cfg_.base_dir) / p).string();
  }

  // Provenance block shared by every JSON output.
  void stamp(ojson& j) const {
    j["config_hash"] = hash();
    j["mesh_hash"] = hash_hex(mesh_.content_hash());
    j["config"] = ojson::parse(config_text_);
  }

  void write(const std::string& name, const std::string& content) {
    const std::string path = (fs::path(out_dir_) / name).string();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) throw ConfigError("cannot write output file '" + path + "'");
    files_.push_back(path);
    manifest_.push_back({name, hash_hex(hash_bytes(content))});
  }

  void write_json(const std::string& name, const ojson& j) { write(name, j.dump(1) + "\n"); }

  void write_manifest(const std::string& command) {
    ojson j;
    j["format"] = "ecal.manifest/1";
    j["command"] = command;
    stamp(j);
    j["outputs"] = ojson::array();
    for (const auto& [name, h] : manifest_) j["outputs"].push_back({{"file", name}, {"content_hash", h}});
    write_json("manifest_" + command + ".json", j);
  }

  /// DIC data: the configured file, or synthesized at beta_true.
  DICData data(Counters* counters) const {
    if (!cfg_.data_path.empty()) return dic_from_json(data_text_);
    const auto traj = solve_forward(cfg_.model, disc_, cfg_.beta_true, cfg_.loads, cfg_.solver, counters);
    return synthesize_data(mesh_, traj, cfg_.noise.eps, cfg_.noise.seed, cfg_.beta_true);
  }

  Problem problem(const DICObjective& objective) const {
    Problem pb;
    pb.model = cfg_.model;
    pb.disc = &disc_;
    pb.objective = &objective;
    pb.loads = cfg_.loads;
    pb.solver = cfg_.solver;
    pb.active = cfg_.active;
    return pb;
  }

 private:
  const ExperimentConfig& cfg_;
  Mesh mesh_;
  Discretization disc_;
  std::string out_dir_;
  std::string config_text_;
  std::string data_text_;
  std::uint64_t input_hash_ = 0;
  std::vector<std::string> files_;
  std::vector<std::pair<std::string, std::string>> manifest_;
};

ojson counters_json(const Counters& c) {
  return {{"objective_evals", c.objective_evals},
          {"gradient_evals", c.gradient_evals},
          {"nonlinear_solves", c.nonlinear_solves},
          {"newton_linear_solves", c.newton_linear_solves},
          {"sensitivity_factorizations", c.sensitivity_factorizations},
          {"sensitivity_rhs_columns", c.sensitivity_rhs_columns},
          {"adjoint_linear_solves", c.adjoint_linear_solves}};
}

std::string step_name(std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%03zu.vtk", n);
  return buf;
}

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ojson cmd_mesh(Session& s) {
  const Mesh& m = s.mesh();
  s.write("mesh.vtk", mesh_field_file(m, "ecal mesh config_hash=" + s.hash()));
  ojson j;
  j["format"] = "ecal.mesh/1";
  j["num_nodes"] = m.num_nodes();
  j["num_elements"] = m.num_elements();
  j["num_dofs"] = m.num_dofs();
  j["volume"] = m.total_volume();
  j["face_sets"] = ojson::object();
  for (const char* name : {kDirichlet, kTractionY, kTractionX, kDic})
    if (m.has_face_set(name))
      j["face_sets"][name] = {{"faces", m.face_set(name).size()}, {"nodes", m.face_set_nodes(name).size()}};
  s.stamp(j);
  s.write_json("mesh.json", j);
  return {{"num_nodes", m.num_nodes()}, {"num_elements", m.num_elements()}, {"num_dofs", m.num_dofs()}};
}

ojson cmd_forward(Session& s) {
  const auto& c = s.cfg();
  Counters counters;
  const auto traj = solve_forward(c.model, s.disc(), c.beta_true, c.loads, c.solver, &counters);
  const std::size_t ia = c.model == ModelKind::J2 ? j2::kAlpha : hill::kAlpha;
  ojson steps = ojson::array();
  for (std::size_t n = 1; n <= traj.steps(); ++n) {
    s.write(step_name(n), step_field_file(s.mesh(), c.model, traj, n,
                                          "ecal forward step " + std::to_string(n) + " config_hash=" + s.hash()));
    const auto& d = traj.diagnostics[n - 1];
    double max_alpha = 0.0;
    for (std::size_t e = 0; e < s.mesh().num_elements(); ++e)
      max_alpha = std::max(max_alpha, traj.local_state(n, e)[ia]);
    steps.push_back({{"step", n},
                     {"traction_x", c.loads.hx(n)},
                     {"traction_y", c.loads.hy(n)},
                     {"newton_iterations", d.newton_iterations},
                     {"residual_norms", d.residual_norms},
                     {"max_local_iterations", d.max_local_iterations},
                     {"plastic_elements", d.plastic_elements},
                     {"max_alpha", max_alpha}});
  }
  ojson j;
  j["format"] = "ecal.diagnostics/1";
  j["model"] = model_name(c.model);
  j["beta"] = params_json(c.model, c.beta_true);
  j["steps"] = steps;
  j["counters"] = counters_json(counters);
  s.stamp(j);
  s.write_json("diagnostics.json", j);
  return {{"steps", traj.steps()}, {"counters", counters_json(counters)}};
}

ojson cmd_synth(Session& s) {
  const auto& c = s.cfg();
  if (!c.data_path.empty()) throw ConfigError("config key 'data': synth generates data and cannot take a data file");
  Counters counters;
  const DICData d = s.data(&counters);
  s.write("dic.json", dic_to_json(d));
  ojson j;
  j["format"] = "ecal.synth/1";
  j["eps_noise"] = d.eps_noise;
  j["eps_from_floor"] = c.noise.from_floor;
  j["seed"] = d.seed;
  j["num_nodes"] = d.node_ids.size();
  j["steps"] = d.steps.size();
  s.stamp(j);
  s.write_json("synth.json", j);
  return {{"eps_noise", d.eps_noise}, {"seed", d.seed}, {"dic_nodes", d.node_ids.size()}};
}

ojson v_curve_json(const VCurve& v, const std::vector<double>& steps) {
  return {{"argmin_eps", steps.empty() ? 0.0 : steps[v.argmin]},
          {"min_error", v.min_error},
          {"min_relative_error", v.min_relative},
          {"v_shaped", v.v_shaped}};
}

ojson cmd_gradcheck(Session& s) {
  const auto& c = s.cfg();
  Counters counters;
  const DICObjective objective(s.mesh(), s.data(&counters));
  const Problem pb = s.problem(objective);
  const auto r = evaluate(pb, c.beta0, &counters);
  const auto g_fs = gradient_forward(pb, r.traj, c.beta0, &counters);
  const auto g_adj = gradient_adjoint(pb, r.traj, c.beta0, &counters);
  const auto D = c.gradcheck_direction.empty() ? std::vector<double>(c.active.size(), 0.1)
                                               : c.gradcheck_direction;
  const auto steps = c.gradcheck_steps.empty() ? default_fd_steps() : c.gradcheck_steps;
  const auto sweep = fd_sweep(pb, c.beta0, D, steps, &counters);
  const auto e_fs = fd_check_errors(sweep, g_fs, D);
  const auto e_adj = fd_check_errors(sweep, g_adj, D);

  double dir = 0.0;
  for (std::size_t k = 0; k < D.size(); ++k) dir += g_adj[k] * D[k];
  const double scale = std::abs(dir);
  double column_gap = 0.0;
  for (std::size_t i = 0; i < steps.size(); ++i)
    column_gap = std::max(column_gap, std::abs(e_fs[i] - e_adj[i]));
  double grad_gap = 0.0, grad_scale = 0.0;
  for (std::size_t k = 0; k < g_adj.size(); ++k) {
    grad_gap = std::max(grad_gap, std::abs(g_fs[k] - g_adj[k]));
    grad_scale = std::max(grad_scale, std::abs(g_adj[k]));
  }

  std::string csv = "eps,error_fs,error_adjoint\n";
  std::string two = "eps,error\n";
  for (std::size_t i = 0; i < steps.size(); ++i) {
    csv += real(steps[i]) + "," + real(e_fs[i]) + "," + real(e_adj[i]) + "\n";
    two += real(steps[i]) + "," + real(e_adj[i]) + "\n";
  }
  s.write("gradcheck.csv", csv);
  s.write("fd_check.csv", two);

  const auto v_fs = analyze_v_curve(e_fs, scale);
  const auto v_adj = analyze_v_curve(e_adj, scale);
  const double column_rel = scale > 0.0 ? column_gap / scale : column_gap;
  const double grad_rel = grad_scale > 0.0 ? grad_gap / grad_scale : grad_gap;
  ojson j;
  j["format"] = "ecal.gradcheck/1";
  j["J"] = r.J.total;
  const auto names = param_names(c.model);
  j["active"] = ojson::array();
  for (int k : c.active) j["active"].push_back(names[static_cast<std::size_t>(k)]);
  j["gradient_fs"] = g_fs;
  j["gradient_adjoint"] = g_adj;
  j["direction"] = D;
  j["directional_derivative"] = dir;
  j["fs_adjoint_gradient_rel_diff"] = grad_rel;
  j["error_columns_rel_diff"] = column_rel;
  j["v_curve_fs"] = v_curve_json(v_fs, steps);
  j["v_curve_adjoint"] = v_curve_json(v_adj, steps);
  j["counters"] = counters_json(counters);
  s.stamp(j);
  s.write_json("gradcheck.json", j);
  return {{"J", r.J.total},
          {"min_relative_error", v_adj.min_relative},
          {"v_shaped", v_adj.v_shaped && v_fs.v_shaped},
          {"error_columns_rel_diff", column_rel},
          {"fs_adjoint_gradient_rel_diff", grad_rel}};
}

std::string parameter_table(const ExperimentConfig& c, const OptRun& run) {
  const auto names = param_names(c.model);
  std::string out = "# method " + method_name(c.method) + ", termination " +
                    termination_name(run.termination) + "\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %-24s %-24s %-24s %s\n", "parameter", "true", "initial",
                "recovered", "rel_error");
  out += buf;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const bool active = std::find(c.active.begin(), c.active.end(), static_cast<int>(i)) != c.active.end();
    std::string err = "inactive";
    if (active) {
      if (c.beta_true[i] != 0.0) {
        const double rel = std::abs(run.beta[i] - c.beta_true[i]) / std::abs(c.beta_true[i]);
        char e[64];
        std::snprintf(e, sizeof e, "%.3e (%.6g%%)", rel, 100.0 * rel);
        err = e;
      } else {
        char e[64];
        std::snprintf(e, sizeof e, "abs %.3e", std::abs(run.beta[i]));
        err = e;
      }
    }
    std::snprintf(buf, sizeof buf, "%-10s %-24.17g %-24.17g %-24.17g %s\n", names[i].c_str(),
                  c.beta_true[i], c.beta0[i], run.beta[i], err.c_str());
    out += buf;
  }
  return out;
}

ojson cmd_calibrate(Session& s) {
  const auto& c = s.cfg();
  if (c.lower.empty()) throw ConfigError("missing required config key 'lower' (calibrate needs bounds)");
  Counters data_counters;
  const DICObjective objective(s.mesh(), s.data(&data_counters));
  CalibrationSpec spec;
  spec.beta0 = c.beta0;
  spec.lo = c.lower;
  spec.hi = c.upper;
  spec.method = c.method;
  spec.opt = c.optimizer;
  spec.fd = c.fd;
  const OptRun run = calibrate(s.problem(objective), spec);

  ojson j = ojson::parse(opt_run_to_json(run, param_names(c.model)));
  j["method"] = method_name(c.method);
  s.stamp(j);
  s.write_json("optrun.json", j);
  s.write("history.csv", opt_history_csv(run));
  s.write("parameters.txt", parameter_table(c, run));

  const auto names = param_names(c.model);
  ojson errors = ojson::object();
  for (int k : c.active) {
    const auto i = static_cast<std::size_t>(k);
    errors[names[i]] = c.beta_true[i] != 0.0 ? std::abs(run.beta[i] / c.beta_true[i] - 1.0)
                                             : std::abs(run.beta[i]);
  }
  return {{"method", method_name(c.method)},
          {"termination", termination_name(run.termination)},
          {"iterations", run.history.back().iteration},
          {"J", run.J},
          {"beta", params_json(c.model, run.beta)},
          {"relative_errors", errors},
          {"counters", counters_json(run.counters)}};
}

}  // namespace

CommandResult run_command(const std::string& command, const ExperimentConfig& cfg,
                          const std::string& out_dir) {
  using Fn = ojson (*)(Session&);
  Fn fn = nullptr;
  if (command == "mesh") fn = cmd_mesh;
  else if (command == "forward") fn = cmd_forward;
  else if (command == "synth") fn = cmd_synth;
  else if (command == "gradcheck") fn = cmd_gradcheck;
  else if (command == "calibrate") fn = cmd_calibrate;
  else throw ConfigError("unknown command '" + command + "'");

  const auto start = std::chrono::steady_clock::now();
  Session s(cfg, out_dir);
  ojson summary;
  summary["command"] = command;
  summary["config_hash"] = s.hash();
  summary["result"] = fn(s);
  s.write_manifest(command);
  summary["files"] = s.files();
  summary["wall_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {s.files(), summary.dump(1)};
}

}  // namespace ecal
