#pragma once

#include <string>

#include "fbs/operators.hpp"
#include "fbs/vec.hpp"

namespace fbs {

// Strict conditions under which the forward-backward map is a contraction:
//   clause 1:  1 + gamma*eta_F > 0
//   clause 2:  2*(eta_F + eta_G) + gamma*eta_F^2 - gamma*L^2 > 0
struct AssumptionReport {
  bool holds = false;
  int violated_clause = 0;  // 0 = none, else 1 or 2 (first violated)
  double clause1 = 0.0;     // value of 1 + gamma*eta_F
  double clause2 = 0.0;     // value of 2*(eta_F+eta_G) + gamma*eta_F^2 - gamma*L^2
  std::string describe() const;
};

AssumptionReport check_assumption_A(double eta_F, double eta_G, double L, double gamma);

namespace detail {
// c = sqrt(max(0, 1 - 2*gamma*eta_G + gamma^2*L^2)) / (1 + gamma*eta_F),
// evaluated without the feasibility gate (used by the gate equivalence test).
double contraction_value(double eta_F, double eta_G, double L, double gamma);
}  // namespace detail

/// Contraction factor of the forward-backward map. Throws std::domain_error
/// when the feasibility conditions fail; under them the value is < 1.
double contraction_constant(double eta_F, double eta_G, double L, double gamma);

/// Step-size search: scans gamma = 2^k / (1+L) over k in [-60, 20], keeps
/// feasible points, and returns the one minimizing the contraction factor.
/// (First-feasible halting tends to land on the clause-2 boundary where the
/// factor is nearly 1; the argmin is strictly better conditioned.)
double pick_gamma(double eta_F, double eta_G, double L);

/// An inclusion 0 in F(z) + G(z) prepared for splitting: the backward
/// operator F (via resolvent), the forward operator G, a feasible step
/// gamma, and the derived contraction factor. Construction validates the
/// feasibility conditions and throws std::domain_error naming the violated
/// clause otherwise.
class ProblemInstance {
 public:
  ProblemInstance(ResolventOp F, ForwardOp G, double gamma, int dim);

  /// B(z) = J_{gamma F}(z - gamma G(z)); fixed points solve the inclusion.
  Vector forward_backward(const Vector& z) const;
  /// Phi(z) = z - B(z); zero exactly at solutions.
  Vector residual(const Vector& z) const;

  double gamma() const { return gamma_; }
  double contraction() const { return c_; }
  double eta_F() const { return F_.eta; }
  double eta_G() const { return G_.eta; }
  double lipschitz() const { return G_.L; }
  int dim() const { return dim_; }
  const AssumptionReport& assumption() const { return report_; }
  const ForwardOp& forward() const { return G_; }
  const ResolventOp& backward() const { return F_; }

 private:
  ResolventOp F_;
  ForwardOp G_;
  double gamma_;
  int dim_;
  double c_;
  AssumptionReport report_;
};

ProblemInstance make_inclusion(ResolventOp F, ForwardOp G, double gamma, int dim);

/// Composite minimization min h(z) + phi(z): grad_h carries the strong
/// convexity modulus eta and Lipschitz constant L of the gradient, phi enters
/// through its prox. Requires the step gate gamma * L^2 < 2 * eta.
ProblemInstance make_cop(ForwardOp grad_h, ResolventOp phi_prox, double gamma, int dim);

/// Mixed variational inequality with strongly monotone G and convex phi.
/// Requires eta > 0 and gamma in (0, 2*eta / L^2).
ProblemInstance make_mvip(ForwardOp G, ResolventOp phi_prox, double gamma, int dim);

/// Variational inequality over a closed convex set, given by its projector.
/// Same gate as make_mvip.
ProblemInstance make_vip(ForwardOp G, ResolventOp projector, double gamma, int dim);

}  // namespace fbs
