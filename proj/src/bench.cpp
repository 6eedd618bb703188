#include "fbs/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace fbs::bench {

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

void require_keys(const json& j, const std::string& where,
                  std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) fail(where + ": unknown key \"" + it.key() + "\"");
  }
}

bool is_auto(const json& v) { return v.is_string() && v.get<std::string>() == "auto"; }

double num_field(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) fail(where + ": missing required key \"" + key + "\"");
  const json& v = j.at(key);
  if (!v.is_number()) fail(where + "." + key + " must be a number");
  return v.get<double>();
}

double num_field_or(const json& j, const std::string& where, const char* key, double dflt) {
  if (!j.contains(key)) return dflt;
  const json& v = j.at(key);
  if (!v.is_number()) fail(where + "." + key + " must be a number");
  return v.get<double>();
}

long int_field_or(const json& j, const std::string& where, const char* key, long dflt) {
  if (!j.contains(key)) return dflt;
  const json& v = j.at(key);
  if (!v.is_number_integer()) fail(where + "." + key + " must be an integer");
  return v.get<long>();
}

std::string str_field(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) fail(where + ": missing required key \"" + key + "\"");
  const json& v = j.at(key);
  if (!v.is_string()) fail(where + "." + key + " must be a string");
  return v.get<std::string>();
}

Vector vec_field(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) fail(where + ": missing required key \"" + key + "\"");
  const json& v = j.at(key);
  if (!v.is_array() || v.empty()) fail(where + "." + key + " must be a non-empty array of numbers");
  Vector out(static_cast<int>(v.size()));
  for (int i = 0; i < out.size(); ++i) {
    if (!v[static_cast<std::size_t>(i)].is_number())
      fail(where + "." + key + " must be a non-empty array of numbers");
    out[i] = v[static_cast<std::size_t>(i)].get<double>();
  }
  return out;
}

Matrix mat_field(const json& j, const std::string& where, const char* key) {
  if (!j.contains(key)) fail(where + ": missing required key \"" + key + "\"");
  const json& v = j.at(key);
  if (!v.is_array() || v.empty() || !v[0].is_array() || v[0].empty())
    fail(where + "." + key + " must be a non-empty array of equal-length number rows");
  const auto rows = static_cast<int>(v.size());
  const auto cols = static_cast<int>(v[0].size());
  Matrix out(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const json& row = v[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<int>(row.size()) != cols)
      fail(where + "." + key + " must be a non-empty array of equal-length number rows");
    for (int c = 0; c < cols; ++c) {
      if (!row[static_cast<std::size_t>(c)].is_number())
        fail(where + "." + key + " must be a non-empty array of equal-length number rows");
      out(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
  }
  return out;
}

// Resolves a backward-operator payload; fills *dim_hint when the payload pins
// the dimension.
ResolventOp build_backward(const json& f, const std::string& where, int* dim_hint) {
  const std::string type = str_field(f, where, "type");
  if (type == "identity") {
    require_keys(f, where, {"type", "eta"});
    return resolvent_scaled_identity(num_field_or(f, where, "eta", 1.0));
  }
  if (type == "diag") {
    require_keys(f, where, {"type", "d"});
    Vector d = vec_field(f, where, "d");
    *dim_hint = static_cast<int>(d.size());
    return resolvent_diag(d);
  }
  if (type == "l1") {
    require_keys(f, where, {"type", "weight"});
    return resolvent_l1(num_field_or(f, where, "weight", 1.0));
  }
  if (type == "box") {
    require_keys(f, where, {"type", "lo", "hi"});
    Vector lo = vec_field(f, where, "lo");
    Vector hi = vec_field(f, where, "hi");
    *dim_hint = static_cast<int>(lo.size());
    return resolvent_box(lo, hi);
  }
  fail(where + ".type: unknown operator \"" + type +
       "\" (expected identity, diag, l1, or box)");
}

ForwardOp build_forward(const json& g, const std::string& where, Rng& rng, int* dim_hint) {
  const std::string type = str_field(g, where, "type");
  if (type == "zero") {
    require_keys(g, where, {"type", "dim"});
    if (g.contains("dim")) *dim_hint = static_cast<int>(int_field_or(g, where, "dim", 0));
    return forward_zero();
  }
  if (type == "diag") {
    require_keys(g, where, {"type", "d"});
    Vector d = vec_field(g, where, "d");
    *dim_hint = static_cast<int>(d.size());
    return forward_diag(d);
  }
  if (type == "gram") {
    require_keys(g, where, {"type", "M"});
    Matrix M = mat_field(g, where, "M");
    *dim_hint = static_cast<int>(M.cols());
    return forward_gram(M);
  }
  if (type == "random_gram") {
    require_keys(g, where, {"type", "rows", "cols"});
    const long rows = int_field_or(g, where, "rows", 10);
    const long cols = int_field_or(g, where, "cols", 8);
    if (rows <= 0 || cols <= 0) fail(where + ": rows and cols must be positive");
    *dim_hint = static_cast<int>(cols);
    return forward_gram(rng.normal_matrix(static_cast<int>(rows), static_cast<int>(cols)));
  }
  if (type == "symmetric") {
    require_keys(g, where, {"type", "S", "b"});
    Matrix S = mat_field(g, where, "S");
    Vector b = g.contains("b") ? vec_field(g, where, "b") : Vector(Vector::Zero(S.rows()));
    *dim_hint = static_cast<int>(S.cols());
    return forward_symmetric(S, b);
  }
  if (type == "rotation") {
    require_keys(g, where, {"type", "s", "theta", "dim"});
    const long dim = int_field_or(g, where, "dim", 0);
    if (dim <= 0) fail(where + ": rotation needs a positive even \"dim\"");
    *dim_hint = static_cast<int>(dim);
    return forward_rotation(num_field(g, where, "s"), num_field(g, where, "theta"),
                            static_cast<int>(dim));
  }
  fail(where + ".type: unknown operator \"" + type +
       "\" (expected zero, diag, gram, random_gram, symmetric, or rotation)");
}

struct Example1Core {
  Matrix M;
  ProblemInstance instance;
  Vector z0;
  double gamma;
};

Example1Core build_example1_core(std::uint64_t seed, int m, int n) {
  if (m <= 0 || n <= 0) throw std::invalid_argument("example1: m and n must be positive");
  Rng rng(seed);
  Matrix M = rng.normal_matrix(m, n);
  ForwardOp G = forward_gram(M);
  ResolventOp F = resolvent_scaled_identity(1.0);
  const double gamma = pick_gamma(1.0, G.eta, G.L);
  ProblemInstance instance(std::move(F), std::move(G), gamma, n);
  Vector z0 = rng.normal_vector(n);
  return Example1Core{std::move(M), std::move(instance), std::move(z0), gamma};
}

json problem_meta(const ProblemInstance& inst, const std::string& kind) {
  json meta;
  meta["kind"] = kind;
  meta["dim"] = inst.dim();
  meta["gamma"] = inst.gamma();
  meta["eta_F"] = inst.eta_F();
  meta["eta_G"] = inst.eta_G();
  meta["L"] = inst.lipschitz();
  return meta;
}

double resolve_gamma(const json& problem, const std::string& where, double eta_F, double eta_G,
                     double L) {
  if (!problem.contains("gamma") || is_auto(problem.at("gamma"))) {
    try {
      return pick_gamma(eta_F, eta_G, L);
    } catch (const std::domain_error& e) {
      fail(where + ".gamma: \"auto\" found no feasible step (" + std::string(e.what()) + ")");
    }
  }
  const json& v = problem.at("gamma");
  if (!v.is_number()) fail(where + ".gamma must be a number or \"auto\"");
  return v.get<double>();
}

Vector resolve_z0(const json& problem, const std::string& where, int dim, Rng& rng) {
  if (!problem.contains("z0")) return rng.normal_vector(dim);
  const json& v = problem.at("z0");
  if (v.is_string()) {
    if (v.get<std::string>() == "random") return rng.normal_vector(dim);
    fail(where + ".z0 must be an array of numbers or \"random\"");
  }
  Vector z0 = vec_field(problem, where, "z0");
  if (static_cast<int>(z0.size()) != dim)
    fail(where + ".z0 has size " + std::to_string(z0.size()) + " but the problem dimension is " +
         std::to_string(dim));
  return z0;
}

int resolve_dim(const json& problem, const std::string& where, int hint) {
  long dim = int_field_or(problem, where, "dim", hint);
  if (dim <= 0)
    fail(where + ": dimension is not determined; give \"dim\" or a sized operator payload");
  if (hint > 0 && dim != hint)
    fail(where + ".dim = " + std::to_string(dim) + " conflicts with an operator payload of size " +
         std::to_string(hint));
  return static_cast<int>(dim);
}

// The construction gate (feasibility / step bound) failing for user-supplied
// numbers is a configuration problem, not a solver failure.
template <typename Fn>
ProblemInstance gate_to_config(const std::string& where, Fn&& make) {
  try {
    return make();
  } catch (const std::domain_error& e) {
    fail(where + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    fail(where + ": " + e.what());
  }
}

SolveReport make_report(const std::string& solver_id, const ProblemInstance& inst,
                        const DynamicsParams& params, const Trajectory& tr, double wall,
                        json extras) {
  SolveReport rep;
  rep.solver_id = solver_id;
  rep.settled_at = tr.settled_at;
  rep.iterations = tr.accepted_steps();
  rep.final_residual = tr.residual_norms.empty() ? 0.0 : tr.residual_norms.back();
  rep.T_p = params.T_p;
  const SettlingBounds sb = settling_bounds(params, inst.contraction());
  rep.bound_statement = sb.bound_statement;
  rep.bound_polyakov = sb.bound_polyakov;
  rep.K_p = params.K_p;
  rep.c = inst.contraction();
  rep.assumption = inst.assumption();
  rep.wall_time_s = wall;
  rep.extras = std::move(extras);
  return rep;
}

json discrete_extra(const IterateLog& log, double beta_requested, double beta_used, double alpha) {
  json d;
  d["alpha"] = alpha;
  d["beta_requested"] = beta_requested;
  d["beta_used"] = beta_used;
  d["iterations"] = log.iterations;
  d["converged"] = log.converged;
  d["final_residual"] = log.residuals.empty() ? 0.0 : log.residuals.back();
  d["n_star"] = log.n_star;
  return d;
}

}  // namespace

json SolveReport::to_json() const {
  json j = extras.is_object() ? extras : json::object();
  j["solver_id"] = solver_id;
  j["settled_at"] = settled_at ? json(*settled_at) : json(nullptr);
  j["iterations"] = iterations;
  j["final_residual"] = final_residual;
  j["T_p"] = T_p;
  j["bound_statement"] = bound_statement ? json(*bound_statement) : json(nullptr);
  j["bound_polyakov"] = bound_polyakov ? json(*bound_polyakov) : json(nullptr);
  j["K_p"] = K_p;
  j["c"] = c;
  j["assumption_A"] = json{{"holds", assumption.holds},
                           {"violated_clause", assumption.violated_clause},
                           {"clause1", assumption.clause1},
                           {"clause2", assumption.clause2}};
  j["wall_time_s"] = wall_time_s;
  return j;
}

BuiltProblem build_problem(const json& problem, Rng& rng) {
  const std::string where = "problem";
  const std::string kind = str_field(problem, where, "kind");

  if (kind == "example1") {
    require_keys(problem, where, {"kind", "m", "n", "z0"});
    const long m = int_field_or(problem, where, "m", 10);
    const long n = int_field_or(problem, where, "n", 8);
    if (m <= 0 || n <= 0) fail(where + ": m and n must be positive");
    Matrix M = rng.normal_matrix(static_cast<int>(m), static_cast<int>(n));
    ForwardOp G = forward_gram(M);
    const double gamma = pick_gamma(1.0, G.eta, G.L);
    ProblemInstance inst = gate_to_config(where, [&] {
      return ProblemInstance(resolvent_scaled_identity(1.0), G, gamma, static_cast<int>(n));
    });
    Vector z0 = resolve_z0(problem, where, inst.dim(), rng);
    json meta = problem_meta(inst, kind);
    return BuiltProblem{std::move(inst), std::move(z0),
                        std::optional<Vector>(Vector::Zero(static_cast<int>(n))), std::move(meta)};
  }

  ProblemInstance* built = nullptr;
  std::optional<ProblemInstance> holder;
  if (kind == "inclusion") {
    require_keys(problem, where, {"kind", "F", "G", "gamma", "dim", "z0"});
    if (!problem.contains("F") || !problem.contains("G"))
      fail(where + ": inclusion needs \"F\" and \"G\" operator payloads");
    int hint = 0;
    ResolventOp F = build_backward(problem.at("F"), where + ".F", &hint);
    ForwardOp G = build_forward(problem.at("G"), where + ".G", rng, &hint);
    const int dim = resolve_dim(problem, where, hint);
    const double gamma = resolve_gamma(problem, where, F.eta, G.eta, G.L);
    holder.emplace(gate_to_config(
        where, [&] { return make_inclusion(std::move(F), std::move(G), gamma, dim); }));
    built = &*holder;
  } else if (kind == "cop") {
    require_keys(problem, where, {"kind", "grad_h", "phi", "gamma", "dim", "z0"});
    if (!problem.contains("grad_h") || !problem.contains("phi"))
      fail(where + ": cop needs \"grad_h\" and \"phi\" payloads");
    int hint = 0;
    ForwardOp grad_h = build_forward(problem.at("grad_h"), where + ".grad_h", rng, &hint);
    ResolventOp phi = build_backward(problem.at("phi"), where + ".phi", &hint);
    const int dim = resolve_dim(problem, where, hint);
    double gamma;
    if (!problem.contains("gamma") || is_auto(problem.at("gamma"))) {
      if (grad_h.eta <= 0) fail(where + ".gamma: \"auto\" needs a strongly convex objective");
      gamma = grad_h.eta / (grad_h.L * grad_h.L);
    } else {
      gamma = resolve_gamma(problem, where, phi.eta, grad_h.eta, grad_h.L);
    }
    holder.emplace(gate_to_config(
        where, [&] { return make_cop(std::move(grad_h), std::move(phi), gamma, dim); }));
    built = &*holder;
  } else if (kind == "mvip" || kind == "vip") {
    const bool vip = kind == "vip";
    require_keys(problem, where,
                 vip ? std::initializer_list<const char*>{"kind", "G", "projector", "gamma", "dim",
                                                          "z0"}
                     : std::initializer_list<const char*>{"kind", "G", "phi", "gamma", "dim",
                                                          "z0"});
    const char* bkey = vip ? "projector" : "phi";
    if (!problem.contains("G") || !problem.contains(bkey))
      fail(where + ": " + kind + " needs \"G\" and \"" + bkey + "\" payloads");
    int hint = 0;
    ForwardOp G = build_forward(problem.at("G"), where + ".G", rng, &hint);
    ResolventOp B = build_backward(problem.at(bkey), where + "." + bkey, &hint);
    const int dim = resolve_dim(problem, where, hint);
    double gamma;
    if (!problem.contains("gamma") || is_auto(problem.at("gamma"))) {
      if (G.eta <= 0) fail(where + ".gamma: \"auto\" needs a strongly monotone operator");
      gamma = G.eta / (G.L * G.L);
    } else {
      gamma = resolve_gamma(problem, where, B.eta, G.eta, G.L);
    }
    holder.emplace(gate_to_config(where, [&] {
      return vip ? make_vip(std::move(G), std::move(B), gamma, dim)
                 : make_mvip(std::move(G), std::move(B), gamma, dim);
    }));
    built = &*holder;
  } else {
    fail(where + ".kind: unknown kind \"" + kind +
         "\" (expected example1, inclusion, cop, mvip, or vip)");
  }

  Vector z0 = resolve_z0(problem, where, built->dim(), rng);
  std::optional<Vector> zstar;
  {
    // The origin is an exact solution whenever the residual vanishes there
    // in exact float arithmetic (no offsets anywhere in the operators).
    Vector r0 = built->residual(Vector::Zero(built->dim()));
    if (r0.norm() == 0.0) zstar = Vector::Zero(built->dim());
  }
  json meta = problem_meta(*built, kind);
  return BuiltProblem{std::move(*built), std::move(z0), std::move(zstar), std::move(meta)};
}

DynamicsParams build_dynamics(const json& dynamics, double c) {
  const std::string where = "dynamics";
  require_keys(dynamics, where, {"b1", "b2", "b3", "p1", "p2", "p3", "T_p", "K_p"});
  DynamicsParams params;
  params.b1 = num_field_or(dynamics, where, "b1", params.b1);
  params.b2 = num_field_or(dynamics, where, "b2", params.b2);
  params.b3 = num_field_or(dynamics, where, "b3", params.b3);
  params.p1 = num_field_or(dynamics, where, "p1", params.p1);
  params.p2 = num_field_or(dynamics, where, "p2", params.p2);
  params.p3 = num_field_or(dynamics, where, "p3", params.p3);
  params.T_p = num_field_or(dynamics, where, "T_p", params.T_p);
  try {
    params.validate_coefficients();
    if (!dynamics.contains("K_p") || is_auto(dynamics.at("K_p"))) {
      if (!params.predefined_time_mode())
        fail(where +
             ".K_p: \"auto\" requires the predefined-time tuning (p3 = 0 and b3 > 0); "
             "give a number instead");
      params.K_p = gain_Kp(params, c);
    } else {
      if (!dynamics.at("K_p").is_number()) fail(where + ".K_p must be a number or \"auto\"");
      params.K_p = dynamics.at("K_p").get<double>();
    }
    params.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail(where + ": " + e.what());
  }
  return params;
}

IntegratorConfig build_integrator(const json& integrator, const DynamicsParams& params, double c) {
  const std::string where = "integrator";
  require_keys(integrator, where,
               {"method", "t_end", "stop_residual", "dt", "dt_init", "dt_min", "dt_max", "rtol",
                "atol"});
  IntegratorConfig cfg;
  if (integrator.contains("method")) {
    const std::string m = str_field(integrator, where, "method");
    if (m == "euler")
      cfg.method = StepMethod::Euler;
    else if (m == "rk4")
      cfg.method = StepMethod::RK4;
    else if (m == "rk45")
      cfg.method = StepMethod::RK45;
    else
      fail(where + ".method: unknown method \"" + m + "\" (expected euler, rk4, or rk45)");
  }
  cfg.t_end = (!integrator.contains("t_end") || is_auto(integrator.at("t_end")))
                  ? params.T_p
                  : num_field(integrator, where, "t_end");
  cfg.stop_residual =
      (!integrator.contains("stop_residual") || is_auto(integrator.at("stop_residual")))
          ? std::max(1e-11, 0.5e-4 * (1.0 - c))
          : num_field(integrator, where, "stop_residual");
  cfg.dt = num_field_or(integrator, where, "dt", cfg.dt);
  cfg.dt_init = num_field_or(integrator, where, "dt_init", cfg.dt_init);
  cfg.dt_min = num_field_or(integrator, where, "dt_min", cfg.dt_min);
  cfg.dt_max = num_field_or(integrator, where, "dt_max", cfg.dt_max);
  cfg.rtol = num_field_or(integrator, where, "rtol", cfg.rtol);
  cfg.atol = num_field_or(integrator, where, "atol", cfg.atol);
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    fail(where + ": " + e.what());
  }
  return cfg;
}

DiscreteConfig build_discrete(const json& discrete, const DynamicsParams& params, double c) {
  const std::string where = "discrete";
  require_keys(discrete, where, {"beta", "alpha", "max_iters", "tol", "epsilon"});
  DiscreteConfig cfg;
  // "auto" = start from the default candidate and let the caller halve.
  cfg.beta = (discrete.contains("beta") && is_auto(discrete.at("beta")))
                 ? cfg.beta
                 : num_field_or(discrete, where, "beta", cfg.beta);
  if (!discrete.contains("alpha") || is_auto(discrete.at("alpha"))) {
    if (params.p1 >= 1.0) fail(where + ".alpha: \"auto\" needs p1 < 1");
    cfg.alpha = 2.0 / (1.0 - params.p1);
  } else {
    cfg.alpha = num_field(discrete, where, "alpha");
  }
  cfg.max_iters = int_field_or(discrete, where, "max_iters", cfg.max_iters);
  cfg.tol = (!discrete.contains("tol") || is_auto(discrete.at("tol")))
                ? std::max(1e-13, 0.5e-6 * (1.0 - c))
                : num_field(discrete, where, "tol");
  cfg.epsilon = num_field_or(discrete, where, "epsilon", cfg.epsilon);
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    fail(where + ": " + e.what());
  }
  return cfg;
}

SolveOutput run_config(const json& cfg) {
  require_keys(cfg, "config", {"problem", "dynamics", "integrator", "discrete", "output", "seed"});
  if (!cfg.contains("problem")) fail("config: missing required section \"problem\"");
  std::uint64_t seed = 0;
  if (cfg.contains("seed")) {
    if (!cfg.at("seed").is_number_integer() || cfg.at("seed").get<long long>() < 0)
      fail("config.seed must be a non-negative integer");
    seed = cfg.at("seed").get<std::uint64_t>();
  }
  Rng rng(seed);

  const auto t0 = clock_type::now();
  BuiltProblem bp = build_problem(cfg.at("problem"), rng);
  bp.meta["seed"] = seed;
  const double c = bp.instance.contraction();
  DynamicsParams params =
      build_dynamics(cfg.contains("dynamics") ? cfg.at("dynamics") : json::object(), c);
  IntegratorConfig icfg =
      build_integrator(cfg.contains("integrator") ? cfg.at("integrator") : json::object(), params,
                       c);

  Trajectory tr = integrate(bp.instance, params, bp.z0, icfg);

  std::optional<IterateLog> il;
  json extras = bp.meta;
  extras["stop_residual"] = icfg.stop_residual;
  if (cfg.contains("discrete")) {
    DiscreteConfig dc = build_discrete(cfg.at("discrete"), params, c);
    if (!bp.zstar)
      bp.zstar = picard_reference(bp.instance, bp.z0, std::min(dc.tol, 1e-10));
    const double beta_requested = dc.beta;
    if (cfg.at("discrete").contains("beta") && is_auto(cfg.at("discrete").at("beta"))) {
      // Divergence- and stall-protected halving: keep the largest candidate
      // that actually converges.
      std::optional<IterateLog> got;
      for (int k = 0; k <= 40 && !got; ++k) {
        dc.beta = std::ldexp(beta_requested, -k);
        try {
          IterateLog trial = iterate(bp.instance, params, bp.z0, dc, &*bp.zstar);
          if (trial.converged) got = std::move(trial);
        } catch (const DivergenceError&) {
          // halve and retry
        }
      }
      if (!got)
        throw IterationFailure("discrete stage: no step in the halving sequence from beta = " +
                                   std::to_string(beta_requested) + " converged",
                               std::numeric_limits<double>::quiet_NaN());
      il = std::move(got);
    } else {
      il = iterate(bp.instance, params, bp.z0, dc, &*bp.zstar);
    }
    extras["discrete"] = discrete_extra(*il, beta_requested, dc.beta, dc.alpha);
  }

  const char* solver_id = icfg.method == StepMethod::Euler  ? "euler"
                          : icfg.method == StepMethod::RK4  ? "rk4"
                                                            : "rk45";
  SolveReport rep =
      make_report(solver_id, bp.instance, params, tr, seconds_since(t0), std::move(extras));
  return SolveOutput{std::move(bp), params, std::move(tr), std::move(il), std::move(rep)};
}

Example1Result run_example1(std::uint64_t seed, const Example1Options& opts) {
  if (opts.alpha <= 2.0) throw std::invalid_argument("example1: alpha must exceed 2");
  const auto t0 = clock_type::now();
  Example1Core core = build_example1_core(seed, opts.m, opts.n);
  const double c = core.instance.contraction();

  DynamicsParams params;
  params.b1 = opts.b1;
  params.b2 = opts.b2;
  params.b3 = opts.b3;
  params.p1 = 1.0 - 2.0 / opts.alpha;
  params.p2 = 1.0 + 2.0 / opts.alpha;
  params.p3 = opts.p3;
  params.T_p = opts.T_p;
  if (!params.predefined_time_mode())
    throw std::invalid_argument(
        "example1 requires the predefined-time tuning (p3 = 0, b3 > 0); use run_sweep for the "
        "other weight variants");
  params.K_p = gain_Kp(params, c);
  params.validate();

  IntegratorConfig icfg;
  icfg.method = StepMethod::RK45;
  icfg.t_end = opts.T_p;
  icfg.stop_residual = std::max(1e-11, 0.5e-4 * (1.0 - c));
  Trajectory tr = integrate(core.instance, params, core.z0, icfg);

  DiscreteConfig dc;
  dc.alpha = opts.alpha;
  dc.max_iters = opts.max_iters;
  dc.tol = std::max(1e-13, 0.5e-6 * (1.0 - c));
  const Vector zstar = Vector::Zero(opts.n);
  IterateLog il;
  double beta_used = 0.0;
  for (int k = 0; k <= 40 && beta_used == 0.0; ++k) {
    dc.beta = std::ldexp(opts.beta, -k);
    try {
      IterateLog trial = iterate(core.instance, params, core.z0, dc, &zstar);
      if (trial.converged) {
        il = std::move(trial);
        beta_used = dc.beta;
      }
    } catch (const DivergenceError&) {
      // halve and retry
    }
  }
  if (beta_used == 0.0)
    throw IterationFailure("discrete stage: no step in the halving sequence from beta = " +
                               std::to_string(opts.beta) + " converged",
                           std::numeric_limits<double>::quiet_NaN());

  json extras = problem_meta(core.instance, "example1");
  extras["seed"] = seed;
  extras["stop_residual"] = icfg.stop_residual;
  extras["discrete"] = discrete_extra(il, opts.beta, beta_used, opts.alpha);
  SolveReport rep =
      make_report("rk45", core.instance, params, tr, seconds_since(t0), std::move(extras));
  return Example1Result{std::move(core.instance), std::move(core.M),     std::move(core.z0),
                        core.gamma,               params,                std::move(tr),
                        std::move(il),            beta_used,             std::move(rep)};
}

namespace {

struct CellRun {
  SweepCell cell;
  std::vector<double> times;
  std::vector<double> errsq;
};

double interp_log(const std::vector<double>& ts, const std::vector<double>& es, double t) {
  if (t <= ts.front()) return es.front();
  if (t >= ts.back()) return es.back();
  auto hi = std::upper_bound(ts.begin(), ts.end(), t);
  const auto k = static_cast<std::size_t>(hi - ts.begin());
  const double t0 = ts[k - 1], t1 = ts[k];
  const double e0 = std::max(es[k - 1], 1e-300), e1 = std::max(es[k], 1e-300);
  if (t1 <= t0) return es[k];
  const double w = (t - t0) / (t1 - t0);
  return std::exp((1.0 - w) * std::log(e0) + w * std::log(e1));
}

std::optional<double> first_crossing(const std::vector<double>& ts, const std::vector<double>& es,
                                     double threshold) {
  for (std::size_t k = 0; k < es.size(); ++k) {
    if (es[k] > threshold) continue;
    if (k == 0) return ts[0];
    const double e0 = std::max(es[k - 1], 1e-300);
    const double e1 = std::max(es[k], 1e-300);
    if (e0 <= threshold || e1 >= e0) return ts[k];
    const double w = (std::log(e0) - std::log(threshold)) / (std::log(e0) - std::log(e1));
    return ts[k - 1] + w * (ts[k] - ts[k - 1]);
  }
  return std::nullopt;
}

CellRun run_cell(const ProblemInstance& inst, const Vector& z0, DynamicsParams params, double b3,
                 double p3, const IntegratorConfig& icfg) {
  params.b3 = b3;
  params.p3 = p3;
  CellRun out;
  out.cell.b3 = b3;
  out.cell.p3 = p3;
  Trajectory tr;
  try {
    tr = integrate(inst, params, z0, icfg);
    out.cell.status = tr.settled_at ? "settled" : "t_end";
  } catch (const IntegrationError& e) {
    tr = e.partial;
    out.cell.status = std::string("partial: ") + e.what();
  }
  out.cell.settled_at = tr.settled_at;
  out.times = tr.times;
  out.errsq.reserve(tr.states.size());
  for (const Vector& z : tr.states) out.errsq.push_back(z.squaredNorm());
  out.cell.final_err_sq = out.errsq.empty() ? std::numeric_limits<double>::quiet_NaN()
                                            : out.errsq.back();
  return out;
}

}  // namespace

SweepResult run_sweep(std::uint64_t seed, const std::vector<std::pair<double, double>>& cells,
                      double threshold, const Example1Options& opts) {
  if (cells.empty()) throw std::invalid_argument("run_sweep: no cells given");
  if (!(threshold > 0)) throw std::invalid_argument("run_sweep: threshold must be positive");
  if (!(opts.b3 > 0) || opts.alpha <= 2.0)
    throw std::invalid_argument("run_sweep: base tuning needs b3 > 0 and alpha > 2");
  Example1Core core = build_example1_core(seed, opts.m, opts.n);
  const double c = core.instance.contraction();

  // One gain for every cell: the predefined-time base tuning sets K_p, the
  // cells then only reshape the weight. That keeps the columns comparable.
  DynamicsParams base;
  base.b1 = opts.b1;
  base.b2 = opts.b2;
  base.b3 = opts.b3;
  base.p1 = 1.0 - 2.0 / opts.alpha;
  base.p2 = 1.0 + 2.0 / opts.alpha;
  base.p3 = 0.0;
  base.T_p = opts.T_p;
  base.K_p = gain_Kp(base, c);

  IntegratorConfig icfg;
  icfg.method = StepMethod::RK45;
  icfg.t_end = opts.T_p;
  icfg.stop_residual = std::max(1e-11, 0.7 * std::sqrt(threshold) * (1.0 - c));

  std::vector<std::future<CellRun>> jobs;
  jobs.reserve(cells.size());
  for (const auto& [b3, p3] : cells) {
    jobs.push_back(std::async(std::launch::async, [&, b3 = b3, p3 = p3] {
      return run_cell(core.instance, core.z0, base, b3, p3, icfg);
    }));
  }

  SweepResult sr;
  sr.seed = seed;
  sr.threshold = threshold;
  sr.gamma = core.gamma;
  sr.c = c;
  sr.K_p = base.K_p;
  sr.T_p = opts.T_p;

  std::vector<CellRun> runs;
  runs.reserve(jobs.size());
  for (auto& j : jobs) runs.push_back(j.get());

  double t_max = 0.0;
  for (auto& r : runs) {
    if (!r.times.empty()) t_max = std::max(t_max, r.times.back());
    r.cell.time_to_threshold = first_crossing(r.times, r.errsq, threshold);
    sr.cells.push_back(r.cell);
  }
  if (t_max <= 0.0) t_max = opts.T_p;

  // Shared grid: t = 0 plus ~600 log-spaced points; every column is sampled
  // onto it by log-linear interpolation so the CSV rows line up.
  const int grid_n = 600;
  const double lo = t_max * 1e-6;
  sr.grid_times.push_back(0.0);
  for (int i = 0; i < grid_n; ++i) {
    const double w = static_cast<double>(i) / (grid_n - 1);
    sr.grid_times.push_back(lo * std::pow(t_max / lo, w));
  }
  for (const auto& r : runs) {
    std::vector<double> col;
    col.reserve(sr.grid_times.size());
    if (r.times.empty()) {
      col.assign(sr.grid_times.size(), std::numeric_limits<double>::quiet_NaN());
    } else {
      for (double t : sr.grid_times) col.push_back(interp_log(r.times, r.errsq, t));
    }
    sr.grid_errsq.push_back(std::move(col));
  }
  return sr;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string cell_tag(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

void write_sweep_csv(std::ostream& os, const SweepResult& sr) {
  os << "t";
  for (const auto& cell : sr.cells)
    os << ",errsq_b3_" << cell_tag(cell.b3) << "_p3_" << cell_tag(cell.p3);
  os << "\n";
  for (std::size_t i = 0; i < sr.grid_times.size(); ++i) {
    os << format_double(sr.grid_times[i]);
    for (const auto& col : sr.grid_errsq) os << "," << format_double(col[i]);
    os << "\n";
  }
}

json sweep_report(const SweepResult& sr) {
  json j;
  j["seed"] = sr.seed;
  j["threshold"] = sr.threshold;
  j["gamma"] = sr.gamma;
  j["c"] = sr.c;
  j["K_p"] = sr.K_p;
  j["T_p"] = sr.T_p;
  j["cells"] = json::array();
  for (const auto& cell : sr.cells) {
    json jc;
    jc["b3"] = cell.b3;
    jc["p3"] = cell.p3;
    jc["status"] = cell.status;
    jc["time_to_threshold"] =
        cell.time_to_threshold ? json(*cell.time_to_threshold) : json(nullptr);
    jc["settled_at"] = cell.settled_at ? json(*cell.settled_at) : json(nullptr);
    jc["final_err_sq"] = cell.final_err_sq;
    j["cells"].push_back(std::move(jc));
  }
  return j;
}

json trajectory_to_json(const Trajectory& tr, const Vector* zstar) {
  json j;
  j["t"] = tr.times;
  j["residual_norm"] = tr.residual_norms;
  j["settled_at"] = tr.settled_at ? json(*tr.settled_at) : json(nullptr);
  j["rhs_evals"] = tr.rhs_evals;
  if (zstar) {
    std::vector<double> errsq;
    errsq.reserve(tr.states.size());
    for (const Vector& z : tr.states) errsq.push_back((z - *zstar).squaredNorm());
    j["err_sq"] = errsq;
  }
  json xs = json::array();
  for (const Vector& z : tr.states)
    xs.push_back(std::vector<double>(z.data(), z.data() + z.size()));
  j["x"] = std::move(xs);
  return j;
}

json iterates_to_json(const IterateLog& log) {
  json j;
  j["converged"] = log.converged;
  j["iterations"] = log.iterations;
  j["n_star"] = log.n_star;
  j["M1"] = log.M1;
  j["M2"] = log.M2;
  j["residuals"] = log.residuals;
  j["errors"] = log.errors;
  j["envelopes"] = log.envelopes;
  return j;
}

}  // namespace fbs::bench
