#include "fbs/problem.hpp"

#include <cmath>
#include <limits>

namespace fbs {

std::string AssumptionReport::describe() const {
  if (holds) return "feasibility conditions hold";
  if (violated_clause == 1)
    return "clause 1 violated: 1 + gamma*eta_F = " + std::to_string(clause1) + " <= 0";
  return "clause 2 violated: 2*(eta_F+eta_G) + gamma*eta_F^2 - gamma*L^2 = " +
         std::to_string(clause2) + " <= 0";
}

AssumptionReport check_assumption_A(double eta_F, double eta_G, double L, double gamma) {
  AssumptionReport r;
  r.clause1 = 1.0 + gamma * eta_F;
  r.clause2 = 2.0 * (eta_F + eta_G) + gamma * eta_F * eta_F - gamma * L * L;
  if (!(r.clause1 > 0.0))
    r.violated_clause = 1;
  else if (!(r.clause2 > 0.0))
    r.violated_clause = 2;
  r.holds = r.violated_clause == 0;
  return r;
}

namespace detail {
double contraction_value(double eta_F, double eta_G, double L, double gamma) {
  double rad = 1.0 - 2.0 * gamma * eta_G + gamma * gamma * L * L;
  return std::sqrt(std::max(0.0, rad)) / (1.0 + gamma * eta_F);
}
}  // namespace detail

double contraction_constant(double eta_F, double eta_G, double L, double gamma) {
  AssumptionReport r = check_assumption_A(eta_F, eta_G, L, gamma);
  if (!r.holds) throw std::domain_error("contraction_constant: " + r.describe());
  return detail::contraction_value(eta_F, eta_G, L, gamma);
}

double pick_gamma(double eta_F, double eta_G, double L) {
  double base = 1.0 / (1.0 + L);
  double best_gamma = 0.0;
  double best_c = std::numeric_limits<double>::infinity();
  for (int k = 20; k >= -60; --k) {
    double g = std::ldexp(base, k);
    AssumptionReport r = check_assumption_A(eta_F, eta_G, L, g);
    if (!r.holds) continue;
    double c = detail::contraction_value(eta_F, eta_G, L, g);
    if (c < best_c) {
      best_c = c;
      best_gamma = g;
    }
  }
  if (best_gamma == 0.0)
    throw std::domain_error("pick_gamma: no feasible step size on the search grid");
  return best_gamma;
}

ProblemInstance::ProblemInstance(ResolventOp F, ForwardOp G, double gamma, int dim)
    : F_(std::move(F)), G_(std::move(G)), gamma_(gamma), dim_(dim) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw std::invalid_argument("ProblemInstance: gamma must be positive and finite");
  if (dim <= 0) throw std::invalid_argument("ProblemInstance: dim must be positive");
  if (!F_.resolvent || !G_.eval)
    throw std::invalid_argument("ProblemInstance: operators must be callable");
  report_ = check_assumption_A(F_.eta, G_.eta, G_.L, gamma_);
  if (!report_.holds) throw std::domain_error("ProblemInstance: " + report_.describe());
  c_ = detail::contraction_value(F_.eta, G_.eta, G_.L, gamma_);
}

Vector ProblemInstance::forward_backward(const Vector& z) const {
  require_finite(z, "forward_backward");
  return F_.resolvent(gamma_, z - gamma_ * G_.eval(z));
}

Vector ProblemInstance::residual(const Vector& z) const { return z - forward_backward(z); }

ProblemInstance make_inclusion(ResolventOp F, ForwardOp G, double gamma, int dim) {
  return ProblemInstance(std::move(F), std::move(G), gamma, dim);
}

ProblemInstance make_cop(ForwardOp grad_h, ResolventOp phi_prox, double gamma, int dim) {
  if (!(gamma * grad_h.L * grad_h.L < 2.0 * grad_h.eta))
    throw std::domain_error("make_cop: step gate gamma*L^2 < 2*eta violated (gamma*L^2 = " +
                            std::to_string(gamma * grad_h.L * grad_h.L) + ", 2*eta = " +
                            std::to_string(2.0 * grad_h.eta) + ")");
  return ProblemInstance(std::move(phi_prox), std::move(grad_h), gamma, dim);
}

namespace {
void require_vi_gate(const ForwardOp& G, double gamma, const char* who) {
  if (!(G.eta > 0.0))
    throw std::domain_error(std::string(who) + ": G must be strongly monotone (eta > 0)");
  if (!(gamma > 0.0 && gamma * G.L * G.L < 2.0 * G.eta))
    throw std::domain_error(std::string(who) +
                            ": step gate gamma in (0, 2*eta/L^2) violated (gamma*L^2 = " +
                            std::to_string(gamma * G.L * G.L) + ", 2*eta = " +
                            std::to_string(2.0 * G.eta) + ")");
}
}  // namespace

ProblemInstance make_mvip(ForwardOp G, ResolventOp phi_prox, double gamma, int dim) {
  require_vi_gate(G, gamma, "make_mvip");
  return ProblemInstance(std::move(phi_prox), std::move(G), gamma, dim);
}

ProblemInstance make_vip(ForwardOp G, ResolventOp projector, double gamma, int dim) {
  require_vi_gate(G, gamma, "make_vip");
  return ProblemInstance(std::move(projector), std::move(G), gamma, dim);
}

}  // namespace fbs
