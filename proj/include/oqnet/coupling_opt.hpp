#pragma once

// Optimal direct energy couplings. With the field couplings and individual
// energies held fixed, maximizing the high-fidelity decoherence time is a
// convex quadratic problem in the edge blocks R0_jk. Its stationarity
// conditions, one per edge,
//
//   g_jk(R0_jk) + K_jk(Rbreve_jk) = 0,
//
// couple neighbouring edges through Rbreve_jk (the energy matrix with the
// (j,k) and (k,j) blocks removed). They are solved either as one stacked
// linear system or by block Gauss-Seidel with per-edge matrices Q_jk.

#include <string>
#include <vector>

#include "oqnet/errors.hpp"
#include "oqnet/matkernel.hpp"
#include "oqnet/memmetrics.hpp"
#include "oqnet/netmodel.hpp"

namespace oqnet {

enum class OptimizerMode { standard, isolated };
enum class OptimizerMethod { global, fixed_point };

const char* to_string(OptimizerMode mode) noexcept;
const char* to_string(OptimizerMethod method) noexcept;

struct EdgeBlock {
  std::string j;
  std::string k;
  Mat block;  // n_j x n_k
};

/// One block per energy edge, oriented and ordered as in the normalized spec.
using EdgeUnknowns = std::vector<EdgeBlock>;

struct OptimizerReport {
  EdgeUnknowns solution;
  std::vector<double> per_edge_residual_norms;
  double objective_before = 0.0;
  double objective_after = 0.0;
  double global_system_rcond = 1.0;
  OptimizerMode mode = OptimizerMode::standard;
  OptimizerMethod method = OptimizerMethod::global;
  /// Set when the stacked system was singular and the minimum-norm
  /// least-squares solution was returned.
  bool non_unique = false;
  std::size_t sweeps = 0;
  std::vector<double> update_history;
};

class FixedPointNonConvergence : public NonConvergenceError {
 public:
  FixedPointNonConvergence(const std::string& what, std::vector<double> history,
                           EdgeUnknowns last_iterate)
      : NonConvergenceError(what, std::move(history)), last_(std::move(last_iterate)) {}
  const EdgeUnknowns& last_iterate() const noexcept { return last_; }

 private:
  EdgeUnknowns last_;
};

/// The self-adjoint, negative semidefinite operator g_jk on n_j x n_k matrices.
Mat g_apply(BlockRange j, BlockRange k, const Mat& n_block, const Mat& sigma, const Mat& p,
            const Mat& theta);

struct QMatrix {
  Mat q;                    // symmetrized, vec(g(N)) = q vec(N)
  double asymmetry = 0.0;   // ||Q - Q^T||_F before symmetrization
};

QMatrix q_matrix(BlockRange j, BlockRange k, const Mat& sigma, const Mat& p, const Mat& theta);

/// Affine part of the stationarity condition for edge (j,k).
/// Throws ModeMismatchError in isolated mode when FB != 0.
Mat k_apply(BlockRange j, BlockRange k, const Mat& r_breve, const AugmentedModel& model,
            const MemoryTask& task, OptimizerMode mode);

/// Edge blocks currently present in the spec.
EdgeUnknowns current_edges(const NetworkSpec& spec);
EdgeUnknowns zero_edges(const NetworkSpec& spec);

/// Copy of `model` with the direct energy edge blocks replaced by `candidate`.
AugmentedModel install(const AugmentedModel& model, const EdgeUnknowns& candidate);

/// Copy of `spec` whose energy edges carry the blocks from `candidate`.
NetworkSpec with_edges(const NetworkSpec& spec, const EdgeUnknowns& candidate);

/// Delta''(0) in standard mode, 2 ||G sqrt(P)||^2 in isolated mode.
double objective(const AugmentedModel& model, const MemoryTask& task, OptimizerMode mode);

/// g_jk(R0_jk) + K_jk(Rbreve_jk) for every edge of `candidate`, evaluated on
/// the model with `candidate` installed.
std::vector<Mat> residuals(const AugmentedModel& model, const MemoryTask& task,
                           const EdgeUnknowns& candidate, OptimizerMode mode);

struct Gradient {
  std::vector<Mat> per_edge;  // d Delta''(0) / d R0_jk
  Mat full;                   // d Delta''(0) / d R over symmetric R
};

Gradient gradient_oracle(const AugmentedModel& model, const MemoryTask& task,
                         const EdgeUnknowns& candidate);

/// 1 + the largest residual norm at the all-zero candidate.
double residual_scale(const AugmentedModel& model, const MemoryTask& task,
                      const EdgeUnknowns& edges, OptimizerMode mode);

OptimizerReport solve_global(const NetworkSpec& spec, const AugmentedModel& model,
                             const MemoryTask& task, OptimizerMode mode);

struct FixedPointOptions {
  std::size_t max_sweeps = 500;
  double tol = 1e-10;
};

OptimizerReport solve_fixed_point(const NetworkSpec& spec, const AugmentedModel& model,
                                  const MemoryTask& task, OptimizerMode mode,
                                  const FixedPointOptions& options = {});

}  // namespace oqnet
