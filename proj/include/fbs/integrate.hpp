#pragma once

#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "fbs/dynamics.hpp"
#include "fbs/problem.hpp"

namespace fbs {

enum class StepMethod { Euler, RK4, RK45 };

struct IntegratorConfig {
  StepMethod method = StepMethod::RK45;
  double t_end = 1.0;
  double stop_residual = 1e-9;  // settle once |Phi(z)| drops below this
  double dt = 1e-3;             // fixed-step methods
  double dt_init = 0.0;         // adaptive; <= 0 picks automatically
  double dt_min = 1e-14;
  double dt_max = 0.0;          // adaptive; <= 0 means T_p / 100
  double rtol = 1e-8;
  double atol = 1e-10;
  void validate() const;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<double> residual_norms;
  std::optional<double> settled_at;  // first time residual <= stop_residual
  long rhs_evals = 0;
  long accepted_steps() const { return static_cast<long>(times.size()) - 1; }
};

// Raised on step-size underflow or a non-finite state; `partial` holds
// everything accepted before the failure.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& msg, Trajectory tr)
      : std::runtime_error(msg), partial(std::move(tr)) {}
  Trajectory partial;
};

// Integrates dz/dt = -(K_p/T_p)*omega(|Phi|)*Phi from z0 until t_end or the
// residual stop. Reaching t_end unsettled is not an error. The adaptive
// method is an embedded 4(5) pair; near the stop band a step that inflates
// the residual more than tenfold is rejected and retried shorter, since the
// field is non-Lipschitz at the equilibrium.
Trajectory integrate(const ProblemInstance& p, const DynamicsParams& params, const Vector& z0,
                     const IntegratorConfig& cfg);

// Columns: t,residual_norm[,err_sq],x_0..x_{n-1}; err_sq appears only when
// the solution is known.
void write_trajectory_csv(std::ostream& os, const Trajectory& tr, const Vector* zstar = nullptr);

}  // namespace fbs
