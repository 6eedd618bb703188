#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fbs/problem.hpp"
#include "fbs/vec.hpp"

namespace fbs {

/// Coefficients of the residual-weighted flow
///   dz/dt = -(K_p / T_p) * omega(|Phi(z)|) * Phi(z)
/// with omega(r) = b1*r^(p1-1) + b2*r^(p2-1) + b3*r^(-p3) away from the
/// equilibrium and 0 on it. b3 = 0 drops the third term entirely (the plain
/// fixed-time weight). Predefined-time tuning = {p3 = 0, b3 > 0}: then
/// gain_Kp yields the K_p that makes T_p an upper bound on the settling time.
struct DynamicsParams {
  double b1 = 1.0;
  double b2 = 1.0;
  double b3 = 0.0;
  double p1 = 0.5;  // in (0, 1)
  double p2 = 1.5;  // > 1
  double p3 = 0.0;  // >= 0
  double T_p = 1.0;
  double K_p = 0.0;  // set via gain_Kp or by hand; validate() requires > 0

  bool predefined_time_mode() const { return p3 == 0.0 && b3 > 0.0; }
  void validate_coefficients() const;  // b/p ranges only
  void validate() const;               // coefficients plus T_p > 0, K_p > 0
  std::vector<std::string> warnings() const;
};

/// Residual band treated as "at the equilibrium": |Phi| <= 1e-12 * (1 + |z|).
inline double zero_band(const Vector& z) { return 1e-12 * (1.0 + z.norm()); }

/// omega as above; returns 0 when phi_norm <= zero_tol. phi_norm must be
/// finite and >= 0.
double omega(const DynamicsParams& params, double phi_norm, double zero_tol = 1e-12);

/// Right-hand side of the weighted flow. Exactly zero (all components) once
/// the residual is inside zero_band(z), so equilibria are genuine rest
/// points despite the negative exponents in omega.
Vector vector_field(const ProblemInstance& p, const DynamicsParams& params, const Vector& z);

/// Unweighted flow dz/dt = -mu * Phi(z), mu > 0.
Vector nominal_field(const ProblemInstance& p, double mu, const Vector& z);

/// Gain that turns T_p into a settling-time certificate. Requires
/// predefined-time tuning (p3 = 0, b3 > 0) and c in [0, 1). Uses b1, b2, b3,
/// p1, p2 from params; T_p/K_p are not read.
double gain_Kp(const DynamicsParams& params, double c);

/// Decay-rate constants of the flow around a solution, and the settling-time
/// bounds they imply. The refined bounds require symmetric exponents
/// (p1 + p2 = 2) and are null otherwise; zeta = 1/(1 - p1) in that case.
struct SettlingBounds {
  double M1 = 0.0;
  double M2 = 0.0;
  double r1 = 0.0;  // (1 + p1)/2
  double r2 = 0.0;  // (1 + p2)/2
  double T_max = 0.0;  // 1/(M1*(1-r1)) + 1/(M2*(r2-1))
  std::optional<double> zeta;
  std::optional<double> bound_statement;  // pi * zeta / sqrt(b1*b2)
  std::optional<double> bound_polyakov;   // pi * zeta / sqrt(M1*M2)
};

SettlingBounds settling_bounds(const DynamicsParams& params, double c);

}  // namespace fbs
