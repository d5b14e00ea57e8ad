#pragma once

// Partially isolated subsystems: directions phi = F X of the network state
// that the quantum noise does not drive directly (FB = 0).

#include <cstddef>

#include "oqnet/matkernel.hpp"
#include "oqnet/memmetrics.hpp"
#include "oqnet/netmodel.hpp"

namespace oqnet {

struct IsolationResult {
  std::size_t d = 0;  // n - rank M
  Mat F;              // s x n, FB = 0
  Mat T;              // (n - s) x n, orthonormal rows orthogonal to F
  Mat S;              // [F; T]
  Mat a11, a12, a21, a22;  // blocks of S A S^{-1} split at row/col s
  Mat b;              // T B
  Mat G;              // 2 F Theta R
};

std::size_t isolation_dim(const AugmentedModel& model);

/// Orthonormal s x n matrix with FB = 0. When s < d the rows are the
/// s-dimensional subspace of the left null space of B on which F Theta F^T
/// is largest. Throws InsufficientIsolationError when s > d.
Mat isolating_f(const AugmentedModel& model, std::size_t s);

/// Throws NotIsolatingError when FB != 0.
IsolationResult decompose(const AugmentedModel& model, const Mat& f);

/// ||F sqrt(P)|| / ||G sqrt(P)|| sqrt(eps).
/// Throws DegenerateAsymptoticsError when G sqrt(P) = 0.
double tau_sqrt(const Mat& f, const Mat& g, const Mat& p, double eps);

/// Delta''(0) = 2 ||G sqrt(P)||^2 for an isolating F.
double isolated_delta_second(const AugmentedModel& model, const MemoryTask& task);

}  // namespace oqnet
