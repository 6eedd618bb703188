#pragma once

#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "fbs/dynamics.hpp"
#include "fbs/problem.hpp"

namespace fbs {

// Forward-Euler discretization z_{n+1} = z_n - beta*(K_p/T_p)*omega(|Phi|)*Phi
// with the exponent pair tied to alpha: p1 = 1 - 2/alpha, p2 = 1 + 2/alpha.
struct DiscreteConfig {
  double beta = 0.005;
  double alpha = 200.0;  // > 2
  long max_iters = 100000;
  double tol = 1e-10;      // stop once |Phi(z_n)| <= tol
  double epsilon = 1e-4;   // additive floor of the error envelope
  double p1() const { return 1.0 - 2.0 / alpha; }
  double p2() const { return 1.0 + 2.0 / alpha; }
  void validate() const;
};

struct IterateLog {
  std::vector<double> residuals;             // |Phi(z_n)|, one per recorded n
  std::vector<double> errors;                // |z_n - z*| when the solution is known
  std::vector<double> envelopes;             // envelope_bound(n), when computable
  long n_star = 0;
  double M1 = 0.0, M2 = 0.0;
  bool converged = false;
  long iterations = 0;
  Vector final_state;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& msg, long at_iter, double residual)
      : std::runtime_error(msg), iteration(at_iter), last_residual(residual) {}
  long iteration;
  double last_residual;
};

class IterationFailure : public std::runtime_error {
 public:
  IterationFailure(const std::string& msg, double residual)
      : std::runtime_error(msg), last_residual(residual) {}
  double last_residual;
};

/// Runs the scheme from z0. params supplies b1/b2/b3/p3/T_p/K_p; p1 and p2
/// are overwritten from cfg.alpha. Residual growth beyond 1e6 x initial (or
/// a non-finite state) raises DivergenceError advising a smaller beta.
IterateLog iterate(const ProblemInstance& p, DynamicsParams params, const Vector& z0,
                   const DiscreteConfig& cfg, const Vector* zstar = nullptr);

/// Plain fixed-point iteration z_{k+1} = B(z_k), stopped via the a-posteriori
/// contraction bound so the result is within tol of the true solution.
/// Serves as the solution oracle for error measurements.
Vector picard_reference(const ProblemInstance& p, const Vector& z0, double tol = 1e-10,
                        long max_iters = 2000000);

/// Decrease envelope at iterate n:
///   sqrt(2) * ( sqrt(M1/M2) * tan(pi/2 - sqrt(M1*M2)/alpha * beta * n) )^(alpha/2) + epsilon
/// for n <= n_star, epsilon beyond; +inf where the power overflows (n = 0).
double envelope_bound(long n, const DiscreteConfig& cfg, double M1, double M2);

/// ceil(alpha*pi / (2*beta*sqrt(M1*M2))): iterate count after which the
/// envelope collapses to epsilon.
long envelope_n_star(const DiscreteConfig& cfg, double M1, double M2);

/// Largest beta in {cfg.beta / 2^k} whose run converges with the measured
/// error below the envelope at every recorded iterate. Throws when no
/// candidate within max_halvings works.
double auto_bisect_beta(const ProblemInstance& p, const DynamicsParams& params, const Vector& z0,
                        const DiscreteConfig& cfg, const Vector& zstar, int max_halvings = 40);

/// Columns: n,err,envelope (err requires the solution oracle).
void write_iterates_csv(std::ostream& os, const IterateLog& log);

}  // namespace fbs
