#include "fbs/operators.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "fbs/rng.hpp"

namespace fbs {

Vector resolvent_identity(double gamma, const Vector& x) {
  if (!(gamma > -1.0))
    throw std::invalid_argument("resolvent_identity: gamma must exceed -1");
  require_finite(x, "resolvent_identity");
  return x / (1.0 + gamma);
}

Vector prox_l1(double gamma, const Vector& x) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("prox_l1: gamma must be >= 0");
  require_finite(x, "prox_l1");
  Vector u(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double a = std::abs(x[i]) - gamma;
    u[i] = a > 0.0 ? (x[i] > 0.0 ? a : -a) : 0.0;
  }
  return u;
}

Vector project_box(const Vector& lo, const Vector& hi, const Vector& x) {
  require_same_size(lo, hi, "project_box");
  require_same_size(lo, x, "project_box");
  require_finite(x, "project_box");
  for (Eigen::Index i = 0; i < lo.size(); ++i)
    if (lo[i] > hi[i])
      throw std::invalid_argument("project_box: lo > hi at component " + std::to_string(i));
  return x.cwiseMax(lo).cwiseMin(hi);
}

ForwardOp forward_zero() {
  return {[](const Vector& z) { return Vector(Vector::Zero(z.size())); }, 0.0, 0.0};
}

ForwardOp forward_diag(const Vector& d) {
  require_finite(d, "forward_diag");
  ForwardOp op;
  Vector dc = d;
  op.eval = [dc](const Vector& z) {
    require_same_size(dc, z, "forward_diag");
    return Vector(dc.cwiseProduct(z));
  };
  op.eta = d.minCoeff();
  op.L = d.cwiseAbs().maxCoeff();
  return op;
}

ForwardOp forward_gram(const Matrix& M) {
  if (M.size() == 0) throw std::invalid_argument("forward_gram: empty matrix");
  Matrix S = M.transpose() * M;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("forward_gram: eigendecomposition failed");
  ForwardOp op;
  auto Sp = std::make_shared<Matrix>(std::move(S));
  op.eval = [Sp](const Vector& z) {
    if (z.size() != Sp->cols())
      throw std::invalid_argument("forward_gram: dimension mismatch");
    return Vector((*Sp) * z);
  };
  op.eta = eig.eigenvalues().minCoeff();
  op.L = eig.eigenvalues().cwiseAbs().maxCoeff();
  return op;
}

ForwardOp forward_symmetric(const Matrix& S, const Vector& b) {
  if (S.rows() != S.cols() || S.rows() != b.size())
    throw std::invalid_argument("forward_symmetric: shape mismatch");
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + S.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("forward_symmetric: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
  ForwardOp op;
  auto Sp = std::make_shared<Matrix>(S);
  auto bp = std::make_shared<Vector>(b);
  op.eval = [Sp, bp](const Vector& z) {
    if (z.size() != Sp->cols())
      throw std::invalid_argument("forward_symmetric: dimension mismatch");
    return Vector((*Sp) * z + (*bp));
  };
  op.eta = eig.eigenvalues().minCoeff();
  op.L = eig.eigenvalues().cwiseAbs().maxCoeff();
  return op;
}

ForwardOp forward_rotation(double s, double theta, int dim) {
  if (dim <= 0 || dim % 2 != 0)
    throw std::invalid_argument("forward_rotation: dim must be positive and even");
  ForwardOp op;
  op.eval = [s, theta, dim](const Vector& z) {
    if (z.size() != dim) throw std::invalid_argument("forward_rotation: dimension mismatch");
    Vector out(dim);
    for (int i = 0; i < dim; i += 2) {
      out[i] = s * z[i] - theta * z[i + 1];
      out[i + 1] = s * z[i + 1] + theta * z[i];
    }
    return out;
  };
  op.eta = s;
  op.L = std::hypot(s, theta);
  return op;
}

ResolventOp resolvent_scaled_identity(double eta) {
  ResolventOp op;
  op.resolvent = [eta](double gamma, const Vector& x) {
    double denom = 1.0 + gamma * eta;
    if (!(denom > 0.0))
      throw std::invalid_argument("resolvent_scaled_identity: 1 + gamma*eta must be positive");
    return Vector(x / denom);
  };
  op.eta = eta;
  return op;
}

ResolventOp resolvent_diag(const Vector& d) {
  require_finite(d, "resolvent_diag");
  ResolventOp op;
  Vector dc = d;
  op.resolvent = [dc](double gamma, const Vector& x) {
    require_same_size(dc, x, "resolvent_diag");
    Vector u(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      double denom = 1.0 + gamma * dc[i];
      if (!(denom > 0.0))
        throw std::invalid_argument("resolvent_diag: 1 + gamma*d_i must be positive");
      u[i] = x[i] / denom;
    }
    return u;
  };
  op.eta = d.minCoeff();
  return op;
}

ResolventOp resolvent_l1(double weight) {
  if (!(weight >= 0.0)) throw std::invalid_argument("resolvent_l1: weight must be >= 0");
  ResolventOp op;
  op.resolvent = [weight](double gamma, const Vector& x) { return prox_l1(gamma * weight, x); };
  op.eta = 0.0;
  return op;
}

ResolventOp resolvent_box(const Vector& lo, const Vector& hi) {
  ResolventOp op;
  Vector l = lo, h = hi;
  op.resolvent = [l, h](double, const Vector& x) { return project_box(l, h, x); };
  op.eta = 0.0;
  return op;
}

namespace {

// Root of psi(u) = subgrad(u) + (u - xi)/gamma, the optimality inclusion of
// one coordinate. psi is nondecreasing with slope at least 1/gamma, so sign
// bisection pins the unique root.
double prox_coordinate(const ScalarConvex& sc, double gamma, double xi) {
  auto psi = [&](double u) { return sc.subgrad(u) + (u - xi) / gamma; };
  double rad = gamma * (std::abs(sc.subgrad(xi)) + 1.0);
  double lo = xi - rad, hi = xi + rad;
  for (int k = 0; k < 64 && psi(lo) > 0.0; ++k) lo -= (rad *= 2.0);
  for (int k = 0; k < 64 && psi(hi) < 0.0; ++k) hi += (rad *= 2.0);
  for (int k = 0; k < 200 && hi - lo > 1e-16 * (1.0 + std::abs(lo) + std::abs(hi)); ++k) {
    double mid = 0.5 * (lo + hi);
    if (psi(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

Vector prox_generic(const ConvexHandle& phi, double gamma, const Vector& x,
                    const ProxOptions& opt) {
  if (!(gamma > 0.0)) throw std::invalid_argument("prox_generic: gamma must be positive");
  require_finite(x, "prox_generic");

  if (phi.coordinate) {
    Vector u(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i)
      u[i] = prox_coordinate(*phi.coordinate, gamma, x[i]);
    return u;
  }

  if (!phi.subgrad) throw std::invalid_argument("prox_generic: handle lacks a subgradient oracle");

  // 0 in subgrad(x) + (x - x)/gamma means x already minimizes.
  if (phi.subgrad(x).norm() == 0.0) return x;

  auto objective = [&](const Vector& u) {
    return phi.value(u) + (u - x).squaredNorm() / (2.0 * gamma);
  };

  Vector u = x;
  double fu = objective(u);
  Vector best = u;
  double best_res = std::numeric_limits<double>::infinity();
  double scale = 1.0 + x.norm();

  for (long k = 0; k < opt.max_iters; ++k) {
    Vector g = phi.subgrad(u) + (u - x) / gamma;
    double res = gamma * g.norm();  // >= distance to the prox point
    if (res < best_res) {
      best = u;
      best_res = res;
    }
    if (res <= opt.tol * scale) return u;

    // Armijo backtracking on the strongly convex objective; when the
    // subgradient direction fails to descend (kink), fall back to a small
    // diminishing step so nonsmooth cases still creep toward the optimum.
    double t = gamma;
    double gg = g.squaredNorm();
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      Vector trial = u - t * g;
      double ft = objective(trial);
      if (ft <= fu - 1e-4 * t * gg) {
        u = std::move(trial);
        fu = ft;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      double t_safe = gamma * 1e-3 / static_cast<double>(k + 1);
      u -= t_safe * g;
      fu = objective(u);
    }
  }
  throw ProxConvergenceError(
      "prox_generic: inner minimization did not reach tolerance " + std::to_string(opt.tol) +
          " within " + std::to_string(opt.max_iters) + " iterations",
      best, best_res);
}

SpotCheck spot_check_forward(const ForwardOp& op, int dim, int pairs, Rng& rng, double tol) {
  SpotCheck r;
  for (int k = 0; k < pairs; ++k) {
    Vector x = rng.normal_vector(dim) * rng.uniform(0.1, 5.0);
    Vector y = rng.normal_vector(dim) * rng.uniform(0.1, 5.0);
    Vector dx = x - y;
    double nd2 = dx.squaredNorm();
    if (nd2 == 0.0) continue;
    Vector dg = op.eval(x) - op.eval(y);
    double mono = dg.dot(dx) - op.eta * nd2;
    double lip = op.L * std::sqrt(nd2) - dg.norm();
    double m = std::min(mono / (1.0 + nd2), lip / (1.0 + std::sqrt(nd2)));
    if (m < r.worst_margin) r.worst_margin = m;
    if (m < -tol && r.ok) {
      r.ok = false;
      r.detail = (mono < lip ? "monotonicity modulus violated" : "Lipschitz bound violated") +
                 std::string(" on sampled pair ") + std::to_string(k);
    }
  }
  return r;
}

SpotCheck spot_check_resolvent(const ResolventOp& op, double gamma, int dim, int pairs, Rng& rng,
                               double tol) {
  SpotCheck r;
  double coco = 1.0 + gamma * op.eta;
  for (int k = 0; k < pairs; ++k) {
    Vector x = rng.normal_vector(dim) * rng.uniform(0.1, 5.0);
    Vector y = rng.normal_vector(dim) * rng.uniform(0.1, 5.0);
    Vector dj = op.resolvent(gamma, x) - op.resolvent(gamma, y);
    double lhs = dj.dot(x - y) - coco * dj.squaredNorm();
    double m = lhs / (1.0 + (x - y).squaredNorm());
    if (m < r.worst_margin) r.worst_margin = m;
    if (m < -tol && r.ok) {
      r.ok = false;
      r.detail = "resolvent cocoercivity violated on sampled pair " + std::to_string(k);
    }
  }
  return r;
}

}  // namespace fbs
