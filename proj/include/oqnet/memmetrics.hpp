#pragma once

// Memory performance of a network: mean-square deviation of the stored
// variables phi = F X from their initial values, and the decoherence time at
// which that deviation reaches a fidelity threshold.

#include <functional>
#include <vector>

#include "oqnet/matkernel.hpp"
#include "oqnet/netmodel.hpp"

namespace oqnet {

struct MemoryTask {
  Mat F;                        // s x n, full row rank
  Mat P;                        // n x n, real part of E[X(0) X(0)^T]
  std::vector<double> epsilons;

  Mat sigma() const { return transpose(F) * F; }
};

/// P = 1/2 I_n, the vacuum-like initial covariance.
Mat vacuum_covariance(std::size_t n);

/// Checks full row rank of F, P + i Theta >= 0 and F sqrt(P) != 0.
std::vector<std::string> validate_task(const MemoryTask& task, const Mat& theta);

double delta_star(const MemoryTask& task);

/// Delta(t); negative roundoff within 1e-12 is clamped to zero.
double deviation(const AugmentedModel& model, const MemoryTask& task, double t,
                 GramianMethod method = GramianMethod::vanloan);

struct DeviationDerivatives {
  double first = 0.0;   // d Delta / dt at 0
  double second = 0.0;  // d^2 Delta / dt^2 at 0
};

DeviationDerivatives delta_derivatives0(const AugmentedModel& model, const MemoryTask& task);

struct DeviationCurve {
  std::vector<double> grid;
  std::vector<double> values;
  double deriv0 = 0.0;
  double deriv2_0 = 0.0;
};

/// Delta on `points` uniform samples of [0, t_end], advanced with the
/// semigroup step Lambda(t + h) = E Lambda(t) E^T + Lambda(h).
/// `t_end` <= 0 selects 5 / ||A||_F.
DeviationCurve deviation_curve(const AugmentedModel& model, const MemoryTask& task,
                               std::size_t points = 200, double t_end = 0.0,
                               GramianMethod method = GramianMethod::vanloan);

struct HittingOptions {
  double t_max = 0.0;  // <= 0: 50 / ||A||_F
  GramianMethod method = GramianMethod::vanloan;
};

struct DecoherenceTime {
  bool reached = false;
  double tau = 0.0;      // valid when reached
  double horizon = 0.0;  // scan limit
  bool tangency = false;
};

/// First time Delta(t) >= eps Delta_*.
DecoherenceTime decoherence_time(const AugmentedModel& model, const MemoryTask& task, double eps,
                                 const HittingOptions& options = {});

struct TauTaylor {
  double first = 0.0;   // tau'(0)
  double second = 0.0;  // tau''(0)
  double operator()(double eps) const { return first * eps + 0.5 * second * eps * eps; }
};

/// High-fidelity expansion of tau. Throws IsolatedRegimeError when FB = 0.
TauTaylor tau_taylor(const AugmentedModel& model, const MemoryTask& task);

/// True when phi contains a noncommuting pair: F Theta F^T != 0.
bool noncommutativity_check(const MemoryTask& task, const Mat& theta);

/// ||FB|| <= tol ||F|| ||B||, the partially isolated regime.
bool is_isolated(const AugmentedModel& model, const Mat& f, double tol = 1e-10);

}  // namespace oqnet
