#include "oqnet/memmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "oqnet/errors.hpp"

namespace oqnet {

namespace {

constexpr double kGuard = 1e-12;  // keeps initial scan scales finite
constexpr double kClampTol = 1e-12;

// trace(F X F^T) without forming Sigma.
double weighted_trace(const Mat& f, const Mat& x) { return trace(f * x * transpose(f)); }

double clamp_deviation(double value, double scale) {
  if (value >= 0.0) return value;
  if (value >= -kClampTol * std::max(1.0, scale)) return 0.0;
  std::ostringstream os;
  os << "deviation: mean-square value " << value << " is negative beyond roundoff";
  throw NumericalError(os.str());
}

// Tracks (e^{tA}, Lambda(t)) and advances it by a fixed step using the
// semigroup property of the Gramian.
class DeviationStepper {
 public:
  DeviationStepper(const AugmentedModel& model, const MemoryTask& task, double t0, double step,
                   GramianMethod method)
      : task_(task), t_(t0), step_(step) {
    const Mat q = model.B * transpose(model.B);
    phi_ = expm(t0 * model.A);
    lambda_ = gramian(model.A, q, t0, method);
    e_step_ = expm(step * model.A);
    lambda_step_ = gramian(model.A, q, step, method);
    scale_ = delta_star(task);
  }

  double t() const noexcept { return t_; }

  double value() const {
    const Mat alpha = phi_ - Mat::identity(phi_.rows());
    const double v = weighted_trace(task_.F, alpha * task_.P * transpose(alpha)) +
                     weighted_trace(task_.F, lambda_);
    return clamp_deviation(v, scale_);
  }

  void advance() {
    phi_ = e_step_ * phi_;
    lambda_ = e_step_ * lambda_ * transpose(e_step_) + lambda_step_;
    t_ += step_;
  }

 private:
  const MemoryTask& task_;
  double t_;
  double step_;
  double scale_ = 0.0;
  Mat phi_, lambda_, e_step_, lambda_step_;
};

}  // namespace

Mat vacuum_covariance(std::size_t n) { return 0.5 * Mat::identity(n); }

std::vector<std::string> validate_task(const MemoryTask& task, const Mat& theta) {
  std::vector<std::string> out;
  const std::size_t n = theta.rows();
  if (task.F.cols() != n) {
    out.push_back("task: F has " + std::to_string(task.F.cols()) + " columns, expected " +
                  std::to_string(n));
    return out;
  }
  if (task.F.rows() == 0 || task.F.rows() > n) {
    out.push_back("task: F must have between 1 and n rows");
  } else if (numerical_rank(task.F) != task.F.rows()) {
    out.push_back("task: F does not have full row rank");
  }
  if (task.P.rows() != n || task.P.cols() != n) {
    out.push_back("task: P must be " + std::to_string(n) + "x" + std::to_string(n));
    return out;
  }
  if (frobenius_norm(task.P - transpose(task.P)) > 1e-12 * frobenius_norm(task.P)) {
    out.push_back("task: P is not symmetric");
    return out;
  }
  const double lmin = min_symmetric_eigenvalue(hermitian_embedding(sym(task.P), theta));
  if (lmin < -1e-10) {
    std::ostringstream os;
    os << "task: P + i Theta is not positive semidefinite (min eigenvalue " << lmin << ")";
    out.push_back(os.str());
  }
  if (out.empty() && !(delta_star(task) > 0.0)) {
    out.push_back("task: F sqrt(P) = 0, the reference scale Delta_* vanishes");
  }
  for (double eps : task.epsilons) {
    if (!(eps > 0.0)) out.push_back("task: fidelity levels must be positive");
  }
  return out;
}

double delta_star(const MemoryTask& task) { return weighted_trace(task.F, task.P); }

double deviation(const AugmentedModel& model, const MemoryTask& task, double t,
                 GramianMethod method) {
  if (!(t >= 0.0)) throw DomainError("deviation: negative time");
  if (t == 0.0) return 0.0;
  const Mat alpha = expm(t * model.A) - Mat::identity(model.n);
  const Mat lambda = gramian(model.A, model.B * transpose(model.B), t, method);
  const double v = weighted_trace(task.F, alpha * task.P * transpose(alpha)) +
                   weighted_trace(task.F, lambda);
  return clamp_deviation(v, delta_star(task));
}

DeviationDerivatives delta_derivatives0(const AugmentedModel& model, const MemoryTask& task) {
  const Mat fb = task.F * model.B;
  const Mat bbt = model.B * transpose(model.B);
  const Mat ap = model.A * task.P;
  const Mat inner_term = model.A * bbt + bbt * transpose(model.A) + 2.0 * ap * transpose(model.A);
  return {inner(fb, fb), weighted_trace(task.F, inner_term)};
}

DeviationCurve deviation_curve(const AugmentedModel& model, const MemoryTask& task,
                               std::size_t points, double t_end, GramianMethod method) {
  if (points < 2) throw DomainError("deviation_curve: need at least two grid points");
  if (t_end <= 0.0) {
    const double anorm = frobenius_norm(model.A);
    t_end = anorm > 0.0 ? 5.0 / anorm : 1.0;
  }
  DeviationCurve curve;
  const auto d = delta_derivatives0(model, task);
  curve.deriv0 = d.first;
  curve.deriv2_0 = d.second;
  const double h = t_end / static_cast<double>(points - 1);
  DeviationStepper stepper(model, task, 0.0, h, method);
  for (std::size_t i = 0; i < points; ++i) {
    curve.grid.push_back(static_cast<double>(i) * h);
    curve.values.push_back(i == 0 ? 0.0 : stepper.value());
    stepper.advance();
  }
  return curve;
}

DecoherenceTime decoherence_time(const AugmentedModel& model, const MemoryTask& task, double eps,
                                 const HittingOptions& options) {
  if (!(eps > 0.0)) throw DomainError("decoherence_time: fidelity level must be positive");
  const double dstar = delta_star(task);
  if (!(dstar > 0.0)) throw DomainError("decoherence_time: F sqrt(P) = 0");
  const double threshold = eps * dstar;
  const double anorm = frobenius_norm(model.A);
  const double inf = std::numeric_limits<double>::infinity();

  DecoherenceTime result;
  result.horizon = options.t_max > 0.0 ? options.t_max : (anorm > 0.0 ? 50.0 / anorm : inf);
  auto f = [&](double t) { return deviation(model, task, t, options.method) - threshold; };

  if (anorm == 0.0 && frobenius_norm(model.B) == 0.0) return result;  // Delta is identically 0

  const double d1 = delta_derivatives0(model, task).first;
  const double natural = anorm > 0.0 ? 1.0 / anorm : inf;
  double t = std::min({threshold / std::max(d1, kGuard), 1.0 / (anorm + kGuard), result.horizon});

  double lo = 0.0;
  double hi = -1.0;

  if (f(t) >= 0.0) {
    // Already past the threshold at the first scale: halve until below.
    hi = t;
    for (int i = 0; i < 400; ++i) {
      const double half = 0.5 * hi;
      if (half == 0.0) break;
      if (f(half) < 0.0) {
        lo = half;
        break;
      }
      hi = half;
    }
  } else {
    lo = t;
    // Geometric stage up to the natural time scale.
    while (hi < 0.0 && lo < natural && lo < result.horizon) {
      const double next = std::min(2.0 * lo, result.horizon);
      if (!std::isfinite(next) || next > 1e300) break;
      if (f(next) >= 0.0) {
        hi = next;
      } else {
        lo = next;
      }
    }
    // Uniform stage on the natural time scale.
    if (hi < 0.0 && lo < result.horizon && std::isfinite(natural)) {
      const double step = natural / 16.0;
      DeviationStepper stepper(model, task, lo, step, options.method);
      while (stepper.t() < result.horizon) {
        const double prev = stepper.t();
        stepper.advance();
        if (stepper.value() - threshold >= 0.0) {
          lo = prev;
          hi = stepper.t();
          break;
        }
      }
    }
  }
  if (hi < 0.0) return result;

  for (int iter = 0; iter < 400 && hi - lo > 1e-12 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) >= 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  result.reached = true;
  result.tau = 0.5 * (lo + hi);
  if (hi > lo) {
    const double slope = (f(hi) - f(lo)) / (hi - lo);
    result.tangency = slope < 1e-10 * threshold / hi;
  }
  return result;
}

TauTaylor tau_taylor(const AugmentedModel& model, const MemoryTask& task) {
  const double fb = frobenius_norm(task.F * model.B);
  if (!(fb > 1e-12 * frobenius_norm(task.F) * frobenius_norm(model.B))) {
    throw IsolatedRegimeError(
        "tau_taylor: FB = 0, the stored variables are partially isolated; use the square-root "
        "asymptotics instead");
  }
  const auto d = delta_derivatives0(model, task);
  TauTaylor out;
  out.first = delta_star(task) / d.first;
  out.second = -d.second * out.first * out.first / d.first;
  return out;
}

bool noncommutativity_check(const MemoryTask& task, const Mat& theta) {
  const double f = frobenius_norm(task.F);
  return frobenius_norm(task.F * theta * transpose(task.F)) > 1e-12 * f * f * frobenius_norm(theta);
}

bool is_isolated(const AugmentedModel& model, const Mat& f, double tol) {
  return frobenius_norm(f * model.B) <= tol * frobenius_norm(f) * frobenius_norm(model.B);
}

}  // namespace oqnet
