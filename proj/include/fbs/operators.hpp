#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "fbs/vec.hpp"

namespace fbs {

class Rng;

/// Single-valued operator G together with caller-asserted certificates:
/// eta is a monotonicity modulus (may be negative for weakly monotone
/// operators), L a Lipschitz constant. The library trusts the certificates
/// for all derived quantities; spot_check_forward samples them numerically.
struct ForwardOp {
  std::function<Vector(const Vector&)> eval;
  double eta = 0.0;  ///< <G(x)-G(y), x-y> >= eta * |x-y|^2
  double L = 0.0;    ///< |G(x)-G(y)| <= L * |x-y|
};

/// Set-valued operator F accessed only through its resolvent
/// J(gamma, x) = (I + gamma F)^{-1}(x), plus a monotonicity modulus eta.
/// Maximality of F (single-valued, everywhere-defined resolvent) is a
/// caller-asserted certificate, like the moduli.
struct ResolventOp {
  std::function<Vector(double, const Vector&)> resolvent;
  double eta = 0.0;
};

/// Resolvent of the identity operator: solves u + gamma*u = x.
/// Requires gamma > -1 so the map stays well defined.
Vector resolvent_identity(double gamma, const Vector& x);

/// Proximal map of the l1 norm (soft threshold), gamma >= 0:
/// component-wise sign(x_i) * max(|x_i| - gamma, 0).
Vector prox_l1(double gamma, const Vector& x);

/// Euclidean projection onto the box [lo, hi] (component-wise clamp).
/// Throws std::invalid_argument on dimension mismatch or lo > hi.
Vector project_box(const Vector& lo, const Vector& hi, const Vector& x);

// ---- operator factories -------------------------------------------------

ForwardOp forward_zero();
ForwardOp forward_diag(const Vector& d);
/// G(z) = (M^T M) z with certificates eta = lambda_min(M^T M),
/// L = lambda_max(M^T M) computed from the symmetric eigendecomposition.
ForwardOp forward_gram(const Matrix& M);
/// G(z) = S z + b for symmetric S; certificates from the spectrum of S.
ForwardOp forward_symmetric(const Matrix& S, const Vector& b);
/// G = s*I + theta*R with R the block rotation [[0,-1],[1,0]] repeated;
/// dim must be even. eta = s exactly (the skew part is inner-product-free),
/// L = hypot(s, theta).
ForwardOp forward_rotation(double s, double theta, int dim);

ResolventOp resolvent_scaled_identity(double eta);
ResolventOp resolvent_diag(const Vector& d);
ResolventOp resolvent_l1(double weight);
ResolventOp resolvent_box(const Vector& lo, const Vector& hi);

// ---- generic proximal solver --------------------------------------------

/// One-dimensional convex piece: value and an arbitrary subgradient
/// selection. Used per coordinate for separable functions.
struct ScalarConvex {
  std::function<double(double)> value;
  std::function<double(double)> subgrad;
};

/// Convex function on R^n given by a value + subgradient oracle. When the
/// function is separable with one shared scalar piece per coordinate, set
/// `coordinate`; prox_generic then solves each coordinate by bisection of
/// the monotone optimality inclusion, which is exact to machine precision.
struct ConvexHandle {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> subgrad;
  std::optional<ScalarConvex> coordinate;
};

struct ProxOptions {
  double tol = 1e-10;     ///< target distance to the true prox point
  long max_iters = 100000;
};

class ProxConvergenceError : public std::runtime_error {
 public:
  ProxConvergenceError(const std::string& msg, Vector it, double r)
      : std::runtime_error(msg), last_iterate(std::move(it)), residual(r) {}
  Vector last_iterate;
  double residual;
};

/// prox_{gamma*phi}(x) = argmin_u phi(u) + |u - x|^2 / (2*gamma).
/// The objective is 1/gamma-strongly convex, so gamma*|g_total| bounds the
/// distance to the minimizer; that is the convergence measure. Separable
/// handles use per-coordinate bisection; general handles use backtracked
/// descent and raise ProxConvergenceError (carrying the best iterate and
/// its residual) when the oracle cannot reach tol within max_iters.
Vector prox_generic(const ConvexHandle& phi, double gamma, const Vector& x,
                    const ProxOptions& opt = {});

// ---- certificate spot checks --------------------------------------------

struct SpotCheck {
  bool ok = true;
  double worst_margin = 0.0;  ///< most negative slack seen (0 if all clean)
  std::string detail;
};

/// Samples `pairs` random pairs in dimension `dim` and tests the asserted
/// monotonicity modulus and Lipschitz constant up to tolerance.
SpotCheck spot_check_forward(const ForwardOp& op, int dim, int pairs, Rng& rng,
                             double tol = 1e-7);

/// Tests resolvent cocoercivity <J(x)-J(y), x-y> >= (1+gamma*eta)|J(x)-J(y)|^2.
SpotCheck spot_check_resolvent(const ResolventOp& op, double gamma, int dim,
                               int pairs, Rng& rng, double tol = 1e-7);

}  // namespace fbs
