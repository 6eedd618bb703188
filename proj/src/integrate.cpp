#include "fbs/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace fbs {

void IntegratorConfig::validate() const {
  if (!(t_end > 0.0) || !std::isfinite(t_end))
    throw std::invalid_argument("IntegratorConfig: t_end must be positive");
  if (!(stop_residual >= 1e-11))
    throw std::invalid_argument(
        "IntegratorConfig: stop_residual must be >= 1e-11 (the field is zeroed inside the "
        "1e-12-scale band, so smaller stops can never be reached)");
  if (!(dt > 0.0)) throw std::invalid_argument("IntegratorConfig: dt must be positive");
  if (!(dt_min > 0.0)) throw std::invalid_argument("IntegratorConfig: dt_min must be positive");
  if (dt_max > 0.0 && dt_max < dt_min)
    throw std::invalid_argument("IntegratorConfig: dt_max must be >= dt_min");
  if (!(rtol > 0.0) || !(atol > 0.0))
    throw std::invalid_argument("IntegratorConfig: rtol and atol must be positive");
}

namespace {

struct Recorder {
  Trajectory tr;
  double stop;

  // returns true once settled
  bool push(double t, const Vector& z, double rnorm) {
    tr.times.push_back(t);
    tr.states.push_back(z);
    tr.residual_norms.push_back(rnorm);
    if (rnorm <= stop && !tr.settled_at) {
      tr.settled_at = t;
      return true;
    }
    return false;
  }
};

[[noreturn]] void bail(Recorder& rec, const std::string& msg) {
  throw IntegrationError(msg, std::move(rec.tr));
}

Trajectory run_fixed(const ProblemInstance& p, const DynamicsParams& d, const Vector& z0,
                     const IntegratorConfig& cfg, bool rk4) {
  Recorder rec{{}, cfg.stop_residual};
  auto f = [&](const Vector& z) {
    rec.tr.rhs_evals++;
    return vector_field(p, d, z);
  };
  Vector y = z0;
  double r = p.residual(y).norm();
  if (rec.push(0.0, y, r)) return std::move(rec.tr);

  double t = 0.0;
  while (t < cfg.t_end * (1.0 - 1e-15)) {
    double h = std::min(cfg.dt, cfg.t_end - t);
    Vector ynew;
    if (rk4) {
      Vector k1 = f(y);
      Vector k2 = f(y + (0.5 * h) * k1);
      Vector k3 = f(y + (0.5 * h) * k2);
      Vector k4 = f(y + h * k3);
      ynew = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    } else {
      ynew = y + h * f(y);
    }
    if (!ynew.allFinite()) bail(rec, "integrate: state became non-finite at t = " + std::to_string(t));
    t += h;
    y = std::move(ynew);
    r = p.residual(y).norm();
    if (rec.push(t, y, r)) break;
  }
  return std::move(rec.tr);
}

// Dormand-Prince 5(4) embedded pair, FSAL.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double d1 = 71.0 / 57600, d3 = -71.0 / 16695, d4 = 71.0 / 1920, d5 = -17253.0 / 339200,
                 d6 = 22.0 / 525, d7 = -1.0 / 40;

Trajectory run_adaptive(const ProblemInstance& p, const DynamicsParams& d, const Vector& z0,
                        const IntegratorConfig& cfg) {
  Recorder rec{{}, cfg.stop_residual};
  auto f = [&](const Vector& z) {
    rec.tr.rhs_evals++;
    return vector_field(p, d, z);
  };

  Vector y = z0;
  double r = p.residual(y).norm();
  if (rec.push(0.0, y, r)) return std::move(rec.tr);

  double dt_max = cfg.dt_max > 0.0 ? cfg.dt_max : d.T_p / 100.0;
  Vector k1 = f(y);
  double dt = cfg.dt_init;
  if (dt <= 0.0) dt = 0.01 * (y.norm() + 1.0) / (k1.norm() + 1e-30);
  dt = std::clamp(dt, cfg.dt_min, dt_max);
  if (!std::isfinite(dt))
    bail(rec, "integrate: could not choose a finite initial step (non-finite field at z0)");

  double t = 0.0;
  const auto n = y.size();
  while (t < cfg.t_end * (1.0 - 1e-15)) {
    dt = std::min(dt, cfg.t_end - t);

    Vector k2 = f(y + dt * (a21 * k1));
    Vector k3 = f(y + dt * (a31 * k1 + a32 * k2));
    Vector k4 = f(y + dt * (a41 * k1 + a42 * k2 + a43 * k3));
    Vector k5 = f(y + dt * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    Vector k6 = f(y + dt * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    Vector ynew = y + dt * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);

    auto shrink = [&](double factor, const char* why) {
      dt *= factor;
      if (!(dt >= cfg.dt_min))  // negated so a NaN step size also bails out
        bail(rec, std::string("integrate: step size underflow (") + why +
                      ") at t = " + std::to_string(t));
    };

    if (!ynew.allFinite()) {
      shrink(0.25, "non-finite trial state");
      continue;
    }
    Vector k7 = f(ynew);
    Vector errv = dt * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
    double err = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double sc = cfg.atol + cfg.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      double e = errv[i] / sc;
      err += e * e;
    }
    err = std::sqrt(err / static_cast<double>(n));
    if (!std::isfinite(err)) {
      shrink(0.25, "non-finite error estimate");
      continue;
    }

    double rnew = p.residual(ynew).norm();
    bool near_band = r <= 1e3 * cfg.stop_residual;
    if (near_band && rnew > 10.0 * r) {
      shrink(0.5, "residual overshoot near the stop band");
      continue;
    }
    if (err > 1.0) {
      shrink(std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.5), "error control");
      continue;
    }

    t += dt;
    y = std::move(ynew);
    k1 = std::move(k7);
    r = rnew;
    if (rec.push(t, y, r)) break;
    double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    dt = std::min(dt * std::clamp(grow, 0.2, 5.0), dt_max);
  }
  return std::move(rec.tr);
}

}  // namespace

Trajectory integrate(const ProblemInstance& p, const DynamicsParams& params, const Vector& z0,
                     const IntegratorConfig& cfg) {
  params.validate();
  cfg.validate();
  require_finite(z0, "integrate");
  if (z0.size() != p.dim())
    throw std::invalid_argument("integrate: z0 dimension does not match the problem");
  switch (cfg.method) {
    case StepMethod::Euler:
      return run_fixed(p, params, z0, cfg, false);
    case StepMethod::RK4:
      return run_fixed(p, params, z0, cfg, true);
    case StepMethod::RK45:
    default:
      return run_adaptive(p, params, z0, cfg);
  }
}

namespace {
std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& tr, const Vector* zstar) {
  const Eigen::Index n = tr.states.empty() ? 0 : tr.states.front().size();
  os << "t,residual_norm";
  if (zstar) os << ",err_sq";
  for (Eigen::Index i = 0; i < n; ++i) os << ",x_" << i;
  os << "\n";
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    os << fmt_g(tr.times[k]) << "," << fmt_g(tr.residual_norms[k]);
    if (zstar) os << "," << fmt_g((tr.states[k] - *zstar).squaredNorm());
    for (Eigen::Index i = 0; i < n; ++i) os << "," << fmt_g(tr.states[k][i]);
    os << "\n";
  }
}

}  // namespace fbs
