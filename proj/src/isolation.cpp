#include "oqnet/isolation.hpp"

#include <cmath>

#include "oqnet/errors.hpp"

namespace oqnet {

namespace {

constexpr double kIsolationTol = 1e-10;

void require_isolating(const AugmentedModel& model, const Mat& f, const char* who) {
  if (f.cols() != model.n || f.rows() == 0 || f.rows() > model.n) {
    throw DimensionError(std::string(who) + ": F must be s x n with 1 <= s <= n");
  }
  if (!is_isolated(model, f, kIsolationTol)) {
    throw NotIsolatingError(std::string(who) + ": FB != 0, F does not isolate");
  }
}

}  // namespace

std::size_t isolation_dim(const AugmentedModel& model) {
  return model.n - numerical_rank(model.M, kIsolationTol);
}

Mat isolating_f(const AugmentedModel& model, std::size_t s) {
  if (s == 0) throw DomainError("isolating_f: need at least one row");
  const std::size_t d = isolation_dim(model);
  if (s > d) {
    throw InsufficientIsolationError(
        "isolating_f: requested " + std::to_string(s) + " rows, isolation dimension is " +
            std::to_string(d),
        d);
  }
  const Mat null_rows = left_nullspace(model.B, kIsolationTol);
  if (s == null_rows.rows()) return null_rows;

  // C = N Theta N^T is antisymmetric; the leading eigenvectors of
  // C C^T = -C^2 pick the rows with the strongest mutual noncommutativity.
  const Mat c = null_rows * model.Theta * transpose(null_rows);
  const SymmetricEigen eig = symmetric_eigen(sym(c * transpose(c)));
  const std::size_t dn = null_rows.rows();
  Mat u(dn, s);
  for (std::size_t col = 0; col < s; ++col) {
    for (std::size_t i = 0; i < dn; ++i) u(i, col) = eig.vectors(i, dn - 1 - col);
  }
  return transpose(u) * null_rows;
}

IsolationResult decompose(const AugmentedModel& model, const Mat& f) {
  require_isolating(model, f, "decompose");
  const std::size_t n = model.n;
  const std::size_t s = f.rows();
  IsolationResult out;
  out.d = isolation_dim(model);
  out.F = f;
  out.T = left_nullspace(transpose(f), kIsolationTol);
  if (out.T.rows() != n - s) throw DomainError("decompose: F does not have full row rank");
  out.S = Mat(n, n);
  out.S.set_block(0, 0, f);
  if (s < n) out.S.set_block(s, 0, out.T);

  // a = S A S^{-1}, computed as the solution of S^T a^T = (S A)^T.
  const Mat sa = out.S * model.A;
  const Mat a = transpose(solve_linear(transpose(out.S), transpose(sa)).x);
  const std::size_t r = n - s;
  out.a11 = a.block(0, 0, s, s);
  out.a12 = a.block(0, s, s, r);
  out.a21 = a.block(s, 0, r, s);
  out.a22 = a.block(s, s, r, r);
  out.b = out.T * model.B;
  out.G = 2.0 * f * model.Theta * model.R;
  return out;
}

double tau_sqrt(const Mat& f, const Mat& g, const Mat& p, double eps) {
  if (!(eps > 0.0)) throw DomainError("tau_sqrt: fidelity level must be positive");
  if (f.cols() != p.rows() || g.cols() != p.rows() || !p.is_square()) {
    throw DimensionError("tau_sqrt: F, G and P sizes disagree");
  }
  const double fp = std::sqrt(std::max(0.0, trace(f * p * transpose(f))));
  const double gp = std::sqrt(std::max(0.0, trace(g * p * transpose(g))));
  if (!(fp > 0.0)) throw DomainError("tau_sqrt: F sqrt(P) = 0");
  if (!(gp > 1e-12 * frobenius_norm(g) * std::sqrt(std::max(0.0, trace(p))))) {
    throw DegenerateAsymptoticsError(
        "tau_sqrt: G sqrt(P) = 0, the deviation grows beyond quadratic order and the square-root "
        "asymptotics are unavailable");
  }
  return fp / gp * std::sqrt(eps);
}

double isolated_delta_second(const AugmentedModel& model, const MemoryTask& task) {
  if (!is_isolated(model, task.F, kIsolationTol)) {
    throw ModeMismatchError("isolated_delta_second: FB != 0");
  }
  const Mat g = 2.0 * task.F * model.Theta * model.R;
  return 2.0 * trace(g * task.P * transpose(g));
}

}  // namespace oqnet
