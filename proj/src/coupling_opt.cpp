#include "oqnet/coupling_opt.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace oqnet {

namespace {

Mat sub(const Mat& m, BlockRange r, BlockRange c) { return m.block(r.offset, c.offset, r.size, c.size); }

void check_block_args(BlockRange j, BlockRange k, const Mat& sigma, const Mat& p, const Mat& theta,
                      const char* who) {
  const std::size_t n = theta.rows();
  if (!theta.is_square() || sigma.rows() != n || sigma.cols() != n || p.rows() != n ||
      p.cols() != n || j.offset + j.size > n || k.offset + k.size > n) {
    throw DimensionError(std::string(who) + ": block ranges or operand sizes disagree");
  }
}

// (Theta Sigma Theta)_ab = Theta_a Sigma_ab Theta_b for block-diagonal Theta.
Mat w_block(BlockRange a, BlockRange b, const Mat& sigma, const Mat& theta) {
  return sub(theta, a, a) * sub(sigma, a, b) * sub(theta, b, b);
}

std::size_t unknown_count(const EdgeUnknowns& edges) {
  std::size_t total = 0;
  for (const auto& e : edges) total += e.block.size();
  return total;
}

Mat stack(const std::vector<Mat>& blocks) {
  std::size_t total = 0;
  for (const auto& b : blocks) total += b.size();
  Mat out(total, 1);
  std::size_t at = 0;
  for (const auto& b : blocks) {
    const Mat v = vec(b);
    for (std::size_t i = 0; i < v.rows(); ++i) out(at++, 0) = v(i, 0);
  }
  return out;
}

void unstack(const Mat& x, EdgeUnknowns& edges) {
  std::size_t at = 0;
  for (auto& e : edges) {
    const std::size_t r = e.block.rows();
    const std::size_t c = e.block.cols();
    Mat v(r * c, 1);
    for (std::size_t i = 0; i < r * c; ++i) v(i, 0) = x(at++, 0);
    e.block = unvec(v, r, c);
  }
}

double max_norm(const std::vector<Mat>& blocks) {
  double out = 0.0;
  for (const auto& b : blocks) out = std::max(out, frobenius_norm(b));
  return out;
}

void require_mode(const AugmentedModel& model, const MemoryTask& task, OptimizerMode mode) {
  if (mode == OptimizerMode::isolated && !is_isolated(model, task.F)) {
    throw ModeMismatchError("optimizer: isolated mode requires FB = 0");
  }
}

// The energy matrix with edge (j,k) removed from the current R.
Mat without_edge(const AugmentedModel& model, const EdgeBlock& e) {
  const BlockRange j = model.node(e.j).vars;
  const BlockRange k = model.node(e.k).vars;
  Mat r = model.R;
  r.add_block(j.offset, k.offset, e.block, -1.0);
  r.add_block(k.offset, j.offset, transpose(e.block), -1.0);
  return r;
}

std::vector<double> norms(const std::vector<Mat>& blocks) {
  std::vector<double> out;
  for (const auto& b : blocks) out.push_back(frobenius_norm(b));
  return out;
}

}  // namespace

const char* to_string(OptimizerMode mode) noexcept {
  return mode == OptimizerMode::standard ? "standard" : "isolated";
}

const char* to_string(OptimizerMethod method) noexcept {
  return method == OptimizerMethod::global ? "global" : "fixed_point";
}

Mat g_apply(BlockRange j, BlockRange k, const Mat& n_block, const Mat& sigma, const Mat& p,
            const Mat& theta) {
  check_block_args(j, k, sigma, p, theta, "g_apply");
  if (n_block.rows() != j.size || n_block.cols() != k.size) {
    throw DimensionError("g_apply: N must be n_j x n_k");
  }
  const Mat nt = transpose(n_block);
  const Mat wjk = w_block(j, k, sigma, theta);
  const Mat pjk = sub(p, j, k);
  return w_block(j, j, sigma, theta) * n_block * sub(p, k, k) +
         sub(p, j, j) * n_block * w_block(k, k, sigma, theta) + wjk * nt * pjk + pjk * nt * wjk;
}

QMatrix q_matrix(BlockRange j, BlockRange k, const Mat& sigma, const Mat& p, const Mat& theta) {
  check_block_args(j, k, sigma, p, theta, "q_matrix");
  const Mat tjk = commutation_matrix(j.size, k.size);
  Mat q = kron(sub(p, k, k), w_block(j, j, sigma, theta)) +
          kron(w_block(k, k, sigma, theta), sub(p, j, j)) +
          (kron(sub(p, k, j), w_block(j, k, sigma, theta)) +
           kron(w_block(k, j, sigma, theta), sub(p, j, k))) *
              tjk;
  QMatrix out;
  out.asymmetry = frobenius_norm(q - transpose(q));
  out.q = q.empty() ? q : sym(q);
  return out;
}

Mat k_apply(BlockRange j, BlockRange k, const Mat& r_breve, const AugmentedModel& model,
            const MemoryTask& task, OptimizerMode mode) {
  require_mode(model, task, mode);
  const Mat sigma = task.sigma();
  const Mat ts = model.Theta * sigma;
  Mat full = 2.0 * sym(ts * model.Theta * r_breve * task.P);
  if (mode == OptimizerMode::standard) {
    const Mat inner_term =
        transpose(model.B) + 2.0 * model.Jmat * model.M * task.P;
    full += 0.5 * sym(ts * model.B * inner_term);
  }
  return sub(full, j, k);
}

EdgeUnknowns current_edges(const NetworkSpec& spec) {
  EdgeUnknowns out;
  for (const auto& e : normalize_edges(spec).energy_edges) out.push_back({e.j, e.k, e.R0});
  return out;
}

EdgeUnknowns zero_edges(const NetworkSpec& spec) {
  EdgeUnknowns out = current_edges(spec);
  for (auto& e : out) e.block = Mat(e.block.rows(), e.block.cols());
  return out;
}

AugmentedModel install(const AugmentedModel& model, const EdgeUnknowns& candidate) {
  AugmentedModel out = model;
  for (const auto& e : candidate) {
    const BlockRange j = model.node(e.j).vars;
    const BlockRange k = model.node(e.k).vars;
    if (e.block.rows() != j.size || e.block.cols() != k.size) {
      throw DimensionError("install: block for edge " + e.j + "-" + e.k + " has wrong shape");
    }
    const Mat delta = e.block - sub(model.R0, j, k);
    out.R.add_block(j.offset, k.offset, delta);
    out.R.add_block(k.offset, j.offset, transpose(delta));
    out.R0.set_block(j.offset, k.offset, e.block);
    out.R0.set_block(k.offset, j.offset, transpose(e.block));
  }
  refresh_drift(out);
  return out;
}

NetworkSpec with_edges(const NetworkSpec& spec, const EdgeUnknowns& candidate) {
  NetworkSpec out = normalize_edges(spec);
  if (out.energy_edges.size() != candidate.size()) {
    throw DimensionError("with_edges: candidate does not match the energy edges");
  }
  for (std::size_t i = 0; i < candidate.size(); ++i) out.energy_edges[i].R0 = candidate[i].block;
  return out;
}

double objective(const AugmentedModel& model, const MemoryTask& task, OptimizerMode mode) {
  if (mode == OptimizerMode::standard) return delta_derivatives0(model, task).second;
  const Mat g = 2.0 * task.F * model.Theta * model.R;
  return 2.0 * trace(g * task.P * transpose(g));
}

std::vector<Mat> residuals(const AugmentedModel& model, const MemoryTask& task,
                           const EdgeUnknowns& candidate, OptimizerMode mode) {
  require_mode(model, task, mode);
  const AugmentedModel installed = install(model, candidate);
  const Mat sigma = task.sigma();
  std::vector<Mat> out;
  for (const auto& e : candidate) {
    const BlockRange j = installed.node(e.j).vars;
    const BlockRange k = installed.node(e.k).vars;
    out.push_back(g_apply(j, k, e.block, sigma, task.P, installed.Theta) +
                  k_apply(j, k, without_edge(installed, e), installed, task, mode));
  }
  return out;
}

Gradient gradient_oracle(const AugmentedModel& model, const MemoryTask& task,
                         const EdgeUnknowns& candidate) {
  const AugmentedModel installed = install(model, candidate);
  const Mat s = sym(installed.Theta * task.sigma() *
                    (installed.B * transpose(installed.B) + 2.0 * installed.A * task.P));
  Gradient out;
  out.full = -4.0 * s;
  for (const auto& e : candidate) {
    out.per_edge.push_back(-8.0 * sub(s, installed.node(e.j).vars, installed.node(e.k).vars));
  }
  return out;
}

double residual_scale(const AugmentedModel& model, const MemoryTask& task,
                      const EdgeUnknowns& edges, OptimizerMode mode) {
  EdgeUnknowns zero = edges;
  for (auto& e : zero) e.block = Mat(e.block.rows(), e.block.cols());
  return 1.0 + max_norm(residuals(model, task, zero, mode));
}

OptimizerReport solve_global(const NetworkSpec& spec, const AugmentedModel& model,
                             const MemoryTask& task, OptimizerMode mode) {
  require_mode(model, task, mode);
  OptimizerReport report;
  report.mode = mode;
  report.method = OptimizerMethod::global;
  report.objective_before = objective(model, task, mode);

  EdgeUnknowns edges = zero_edges(spec);
  const std::size_t count = unknown_count(edges);
  if (count == 0) {
    report.solution = edges;
    report.objective_after = report.objective_before;
    return report;
  }

  // The stacked residual is affine in the unknowns: r(x) = H x + c.
  const Mat c = stack(residuals(model, task, edges, mode));
  Mat h(count, count);
  std::size_t col = 0;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    for (std::size_t idx = 0; idx < edges[e].block.size(); ++idx, ++col) {
      EdgeUnknowns probe = edges;
      const std::size_t r = edges[e].block.rows();
      probe[e].block(idx % r, idx / r) = 1.0;  // column-major, matching vec
      const Mat rc = stack(residuals(model, task, probe, mode)) - c;
      for (std::size_t i = 0; i < count; ++i) h(i, col) = rc(i, 0);
    }
  }

  Mat x;
  try {
    const LinearSolution sol = solve_linear(h, -1.0 * c);
    x = sol.x;
    report.global_system_rcond = sol.rcond;
  } catch (const SingularMatrixError& err) {
    report.global_system_rcond = err.rcond();
    const LeastSquaresSolution ls = lstsq_min_norm(h, -1.0 * c);
    x = ls.x;
    report.non_unique = true;
    if (ls.rank == 0 && frobenius_norm(c) > 0.0) {
      std::ostringstream os;
      os << "solve_global: stacked system is numerically zero (||H|| = " << frobenius_norm(h)
         << ", ||c|| = " << frobenius_norm(c) << ")";
      throw OptimizationError(os.str());
    }
  }
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw OptimizationError("solve_global: non-finite solution");
  }
  unstack(x, edges);

  report.solution = edges;
  report.per_edge_residual_norms = norms(residuals(model, task, edges, mode));
  report.objective_after = objective(install(model, edges), task, mode);
  return report;
}

OptimizerReport solve_fixed_point(const NetworkSpec& spec, const AugmentedModel& model,
                                  const MemoryTask& task, OptimizerMode mode,
                                  const FixedPointOptions& options) {
  require_mode(model, task, mode);
  OptimizerReport report;
  report.mode = mode;
  report.method = OptimizerMethod::fixed_point;
  report.objective_before = objective(model, task, mode);

  EdgeUnknowns edges = zero_edges(spec);
  const Mat sigma = task.sigma();
  std::vector<LuFactorization> factors;
  double worst_rcond = 1.0;
  for (const auto& e : edges) {
    const BlockRange j = model.node(e.j).vars;
    const BlockRange k = model.node(e.k).vars;
    const Mat q = q_matrix(j, k, sigma, task.P, model.Theta).q;
    const SymmetricEigen eig = symmetric_eigen(q);
    double min_abs = std::abs(eig.values.front());
    for (double v : eig.values) min_abs = std::min(min_abs, std::abs(v));
    if (!(min_abs > 1e-10 * frobenius_norm(q))) {
      throw PreconditionError("solve_fixed_point: Q for edge " + e.j + "-" + e.k +
                              " is singular");
    }
    factors.emplace_back(q);
    worst_rcond = std::min(worst_rcond, factors.back().rcond());
  }
  report.global_system_rcond = worst_rcond;

  const double scale = residual_scale(model, task, edges, mode);
  bool converged = edges.empty();
  std::size_t sweep = 0;
  while (!converged && sweep < options.max_sweeps) {
    ++sweep;
    double max_update = 0.0;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const AugmentedModel installed = install(model, edges);
      const BlockRange j = installed.node(edges[i].j).vars;
      const BlockRange k = installed.node(edges[i].k).vars;
      const Mat kv = vec(k_apply(j, k, without_edge(installed, edges[i]), installed, task, mode));
      const Mat next = unvec(-1.0 * factors[i].solve(kv), j.size, k.size);
      max_update = std::max(max_update, frobenius_norm(next - edges[i].block) /
                                            (1.0 + frobenius_norm(next)));
      edges[i].block = next;
    }
    report.update_history.push_back(max_update);
    const double res = max_norm(residuals(model, task, edges, mode));
    converged = max_update <= options.tol || res <= options.tol * scale;
  }
  report.sweeps = sweep;
  if (!converged) {
    std::ostringstream os;
    os << "solve_fixed_point: no convergence after " << sweep << " sweeps (last update "
       << (report.update_history.empty() ? 0.0 : report.update_history.back()) << ")";
    throw FixedPointNonConvergence(os.str(), report.update_history, edges);
  }

  report.solution = edges;
  report.per_edge_residual_norms = norms(residuals(model, task, edges, mode));
  const double worst = report.per_edge_residual_norms.empty()
                           ? 0.0
                           : *std::max_element(report.per_edge_residual_norms.begin(),
                                               report.per_edge_residual_norms.end());
  if (worst > 1e-7 * scale) {
    std::ostringstream os;
    os << "solve_fixed_point: iteration stalled with residual " << worst;
    throw FixedPointNonConvergence(os.str(), report.update_history, edges);
  }
  report.objective_after = objective(install(model, edges), task, mode);
  return report;
}

}  // namespace oqnet
