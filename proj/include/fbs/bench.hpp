#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fbs/discrete.hpp"
#include "fbs/integrate.hpp"
#include "fbs/problem.hpp"
#include "fbs/rng.hpp"

namespace fbs::bench {

using nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolveReport {
  std::string solver_id;
  std::optional<double> settled_at;
  long iterations = 0;
  double final_residual = 0.0;
  double T_p = 0.0;
  std::optional<double> bound_statement;
  std::optional<double> bound_polyakov;
  double K_p = 0.0;
  double c = 0.0;
  AssumptionReport assumption;
  double wall_time_s = 0.0;
  json extras;  // gamma, seed, certificates, discrete sub-report, ...
  json to_json() const;
};

// ---- config-driven construction ------------------------------------------
// Top-level keys: problem, dynamics, integrator, discrete (optional),
// output (optional), seed (optional). Unknown keys anywhere raise
// ConfigError with the offending path.

struct BuiltProblem {
  ProblemInstance instance;
  Vector z0;
  std::optional<Vector> zstar;  // set when the solution is known exactly
  json meta;                    // kind, gamma, certificates
};

BuiltProblem build_problem(const json& problem, Rng& rng);
DynamicsParams build_dynamics(const json& dynamics, double c);
IntegratorConfig build_integrator(const json& integrator, const DynamicsParams& params, double c);
DiscreteConfig build_discrete(const json& discrete, const DynamicsParams& params, double c);

struct SolveOutput {
  BuiltProblem problem;
  DynamicsParams params;
  Trajectory trajectory;
  std::optional<IterateLog> iterates;
  SolveReport report;
};

/// Full config-driven run: integrate, then the discrete scheme when a
/// "discrete" section is present (solution oracle via picard_reference if
/// not known exactly).
SolveOutput run_config(const json& cfg);

// ---- canonical benchmark --------------------------------------------------

struct Example1Options {
  int m = 10;
  int n = 8;
  double b1 = 20.0;
  double b2 = 200.0;
  double b3 = 5.0;
  double p3 = 0.0;
  double T_p = 5.0;
  double beta = 0.005;   // first candidate; halved on divergence
  double alpha = 200.0;  // exponent pair p1 = 0.99, p2 = 1.01
  long max_iters = 400000;
};

struct Example1Result {
  ProblemInstance instance;
  Matrix M;
  Vector z0;
  double gamma;
  DynamicsParams params;
  Trajectory trajectory;
  IterateLog iterates;
  double beta_used;
  SolveReport report;
};

/// Random dense M (m x n, standard normal, seeded), G = M^T M, F = identity,
/// solution z* = 0. Integrates the flow with the predefined-time gain and
/// runs the discrete scheme through the divergence-protected halving
/// sequence seeded at opts.beta.
Example1Result run_example1(std::uint64_t seed, const Example1Options& opts = {});

// ---- (b3, p3) sweep --------------------------------------------------------

struct SweepCell {
  double b3 = 0.0;
  double p3 = 0.0;
  std::string status;  // "settled", "t_end", or "partial: <reason>"
  std::optional<double> time_to_threshold;
  std::optional<double> settled_at;
  double final_err_sq = 0.0;
};

struct SweepResult {
  std::uint64_t seed = 0;
  double threshold = 0.0;
  double gamma = 0.0;
  double c = 0.0;
  double K_p = 0.0;
  double T_p = 0.0;
  std::vector<SweepCell> cells;
  std::vector<double> grid_times;                // shared time grid
  std::vector<std::vector<double>> grid_errsq;   // one row of samples per cell
};

/// Shares one instance, one z0 and one K_p (from the base predefined-time
/// tuning) across all cells; only (b3, p3) vary inside omega. Cells run on a
/// small worker pool; per-cell integration failures keep the partial
/// trajectory and are recorded in the cell status instead of aborting.
SweepResult run_sweep(std::uint64_t seed, const std::vector<std::pair<double, double>>& cells,
                      double threshold = 1e-6, const Example1Options& opts = {});

void write_sweep_csv(std::ostream& os, const SweepResult& sr);
json sweep_report(const SweepResult& sr);

// ---- serialization helpers -------------------------------------------------

json trajectory_to_json(const Trajectory& tr, const Vector* zstar = nullptr);
json iterates_to_json(const IterateLog& log);
std::string format_double(double v);  // %.17g, used by every CSV writer

}  // namespace fbs::bench
