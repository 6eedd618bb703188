#include "fbs/dynamics.hpp"

#include <cmath>
#include <numbers>

namespace fbs {

namespace {
void fail(const std::string& msg) { throw std::invalid_argument("DynamicsParams: " + msg); }
}  // namespace

void DynamicsParams::validate_coefficients() const {
  if (!(b1 > 0.0) || !std::isfinite(b1)) fail("b1 must be positive");
  if (!(b2 > 0.0) || !std::isfinite(b2)) fail("b2 must be positive");
  if (!(b3 >= 0.0) || !std::isfinite(b3)) fail("b3 must be >= 0");
  if (!(p1 > 0.0 && p1 < 1.0)) fail("p1 must lie in (0, 1)");
  if (!(p2 > 1.0) || !std::isfinite(p2)) fail("p2 must exceed 1");
  if (!(p3 >= 0.0) || !std::isfinite(p3)) fail("p3 must be >= 0");
}

void DynamicsParams::validate() const {
  validate_coefficients();
  if (!(T_p > 0.0) || !std::isfinite(T_p)) fail("T_p must be positive");
  if (!(K_p > 0.0) || !std::isfinite(K_p)) fail("K_p must be positive (compute via gain_Kp or set by hand)");
}

std::vector<std::string> DynamicsParams::warnings() const {
  std::vector<std::string> w;
  if (b3 > 0.0 && p3 >= 1.0)
    w.push_back("p3 >= 1 makes the weight term b3*r^(-p3) discontinuous at the equilibrium; "
                "trajectories are only integrated down to the zero band");
  return w;
}

double omega(const DynamicsParams& params, double phi_norm, double zero_tol) {
  if (!(phi_norm >= 0.0) || !std::isfinite(phi_norm))
    throw std::invalid_argument("omega: phi_norm must be finite and >= 0");
  if (phi_norm <= zero_tol) return 0.0;
  double w = params.b1 * std::pow(phi_norm, params.p1 - 1.0) +
             params.b2 * std::pow(phi_norm, params.p2 - 1.0);
  if (params.b3 > 0.0) w += params.b3 * std::pow(phi_norm, -params.p3);
  return w;
}

Vector vector_field(const ProblemInstance& p, const DynamicsParams& params, const Vector& z) {
  Vector phi = p.residual(z);
  double r = phi.norm();
  if (r <= zero_band(z)) return Vector::Zero(z.size());
  return Vector((-(params.K_p / params.T_p) * omega(params, r, 0.0)) * phi);
}

Vector nominal_field(const ProblemInstance& p, double mu, const Vector& z) {
  if (!(mu > 0.0)) throw std::invalid_argument("nominal_field: mu must be positive");
  return Vector(-mu * p.residual(z));
}

double gain_Kp(const DynamicsParams& params, double c) {
  params.validate_coefficients();
  if (!(params.p3 == 0.0 && params.b3 > 0.0))
    throw std::domain_error("gain_Kp: predefined-time tuning requires p3 = 0 and b3 > 0");
  if (!(c >= 0.0 && c < 1.0))
    throw std::domain_error("gain_Kp: contraction factor must lie in [0, 1)");
  double a1 = std::pow(2.0, 0.5 * (1.0 + params.p1)) * params.b1 * (1.0 - c) /
              std::pow(1.0 + c, 1.0 - params.p1);
  double a2 = std::pow(2.0, 0.5 * (1.0 + params.p2)) * params.b2 * std::pow(1.0 - c, params.p2);
  double a3 = 2.0 * params.b3 * (1.0 - c);
  return 2.0 / (a3 * (1.0 - params.p1)) * std::log1p(a3 / a1) +
         2.0 / (a3 * (params.p2 - 1.0)) * std::log1p(a3 / a2);
}

SettlingBounds settling_bounds(const DynamicsParams& params, double c) {
  params.validate();
  if (!(c >= 0.0 && c < 1.0))
    throw std::domain_error("settling_bounds: contraction factor must lie in [0, 1)");
  SettlingBounds sb;
  double rate = params.K_p / params.T_p;
  sb.M1 = std::pow(2.0, 0.5 * (1.0 + params.p1)) * rate * params.b1 * (1.0 - c) /
          std::pow(1.0 + c, 1.0 - params.p1);
  sb.M2 = std::pow(2.0, 0.5 * (1.0 + params.p2)) * rate * std::pow(1.0 - c, params.p2) * params.b2;
  sb.r1 = 0.5 * (1.0 + params.p1);
  sb.r2 = 0.5 * (1.0 + params.p2);
  sb.T_max = 1.0 / (sb.M1 * (1.0 - sb.r1)) + 1.0 / (sb.M2 * (sb.r2 - 1.0));
  if (std::abs((1.0 - params.p1) - (params.p2 - 1.0)) <= 1e-12) {
    double zeta = 1.0 / (1.0 - params.p1);
    sb.zeta = zeta;
    sb.bound_statement = std::numbers::pi * zeta / std::sqrt(params.b1 * params.b2);
    sb.bound_polyakov = std::numbers::pi * zeta / std::sqrt(sb.M1 * sb.M2);
  }
  return sb;
}

}  // namespace fbs
