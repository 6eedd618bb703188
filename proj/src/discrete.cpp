#include "fbs/discrete.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

namespace fbs {

void DiscreteConfig::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw std::invalid_argument("DiscreteConfig: beta must be positive");
  if (!(alpha > 2.0) || !std::isfinite(alpha))
    throw std::invalid_argument("DiscreteConfig: alpha must exceed 2");
  if (max_iters <= 0) throw std::invalid_argument("DiscreteConfig: max_iters must be positive");
  if (!(tol > 0.0)) throw std::invalid_argument("DiscreteConfig: tol must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("DiscreteConfig: epsilon must be positive");
}

long envelope_n_star(const DiscreteConfig& cfg, double M1, double M2) {
  return static_cast<long>(
      std::ceil(cfg.alpha * std::numbers::pi / (2.0 * cfg.beta * std::sqrt(M1 * M2))));
}

double envelope_bound(long n, const DiscreteConfig& cfg, double M1, double M2) {
  if (!(M1 > 0.0 && M2 > 0.0))
    throw std::invalid_argument("envelope_bound: M1 and M2 must be positive");
  double arg = std::numbers::pi / 2.0 -
               std::sqrt(M1 * M2) / cfg.alpha * cfg.beta * static_cast<double>(n);
  if (arg <= 0.0) return cfg.epsilon;
  double base = std::sqrt(M1 / M2) * std::tan(arg);
  double v = std::sqrt(2.0) * std::exp(0.5 * cfg.alpha * std::log(base));
  if (std::isnan(v)) return cfg.epsilon;  // base underflowed to 0 right at n_star
  return v + cfg.epsilon;                 // +inf when the power overflows (small n)
}

IterateLog iterate(const ProblemInstance& p, DynamicsParams params, const Vector& z0,
                   const DiscreteConfig& cfg, const Vector* zstar) {
  cfg.validate();
  params.p1 = cfg.p1();
  params.p2 = cfg.p2();
  params.validate();
  require_finite(z0, "iterate");

  SettlingBounds sb = settling_bounds(params, p.contraction());
  IterateLog log;
  log.M1 = sb.M1;
  log.M2 = sb.M2;
  log.n_star = envelope_n_star(cfg, sb.M1, sb.M2);

  double rate = params.K_p / params.T_p;
  Vector z = z0;
  double r0 = 0.0;
  for (long n = 0; n <= cfg.max_iters; ++n) {
    Vector phi = p.residual(z);
    double r = phi.norm();
    if (n == 0) r0 = r;

    log.residuals.push_back(r);
    if (zstar) log.errors.push_back((z - *zstar).norm());
    log.envelopes.push_back(envelope_bound(n, cfg, sb.M1, sb.M2));
    log.iterations = n;

    if (!std::isfinite(r) || r > 1e6 * std::max(r0, 1e-30))
      throw DivergenceError(
          "iterate: residual grew past 1e6 x initial at n = " + std::to_string(n) +
              "; reduce beta",
          n, r);
    if (r <= cfg.tol) {
      log.converged = true;
      break;
    }
    if (n == cfg.max_iters) break;
    z -= (cfg.beta * rate * omega(params, r, zero_band(z))) * phi;
  }
  log.final_state = std::move(z);
  return log;
}

Vector picard_reference(const ProblemInstance& p, const Vector& z0, double tol, long max_iters) {
  require_finite(z0, "picard_reference");
  double c = p.contraction();
  double threshold =
      c > 1e-12 ? tol * (1.0 - c) / c : std::numeric_limits<double>::infinity();
  Vector z = z0;
  double step = std::numeric_limits<double>::infinity();
  for (long k = 0; k < max_iters; ++k) {
    Vector znext = p.forward_backward(z);
    step = (znext - z).norm();
    z = std::move(znext);
    if (step <= threshold) return z;
  }
  throw IterationFailure("picard_reference: tolerance not reached within " +
                             std::to_string(max_iters) + " iterations (last step " +
                             std::to_string(step) + ")",
                         step);
}

double auto_bisect_beta(const ProblemInstance& p, const DynamicsParams& params, const Vector& z0,
                        const DiscreteConfig& cfg, const Vector& zstar, int max_halvings) {
  for (int k = 0; k <= max_halvings; ++k) {
    DiscreteConfig trial = cfg;
    trial.beta = std::ldexp(cfg.beta, -k);
    IterateLog log;
    try {
      log = iterate(p, params, z0, trial, &zstar);
    } catch (const DivergenceError&) {
      continue;
    }
    if (!log.converged) continue;
    bool bounded = true;
    for (std::size_t n = 0; n < log.errors.size(); ++n)
      if (log.errors[n] > log.envelopes[n] + trial.epsilon) {
        bounded = false;
        break;
      }
    if (bounded) return trial.beta;
  }
  throw IterationFailure(
      "auto_bisect_beta: no step size in the halving sequence satisfied the envelope", 0.0);
}

namespace {
std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

void write_iterates_csv(std::ostream& os, const IterateLog& log) {
  os << "n,err,envelope\n";
  for (std::size_t n = 0; n < log.residuals.size(); ++n) {
    os << n << ",";
    os << (n < log.errors.size() ? fmt_g(log.errors[n]) : "");
    os << "," << (n < log.envelopes.size() ? fmt_g(log.envelopes[n]) : "") << "\n";
  }
}

}  // namespace fbs
