#include "oqnet/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <utility>

#include "oqnet/errors.hpp"

namespace oqnet {

namespace {

std::string dims(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

std::string dims(const Mat& a) { return dims(a.rows(), a.cols()); }

bool near(const Mat& a, const Mat& target) {
  return frobenius_norm(a - target) <= kStructuralTol * std::max(1.0, frobenius_norm(target));
}

bool is_coordinate_row(const Mat& d, std::size_t row) {
  int ones = 0;
  for (std::size_t c = 0; c < d.cols(); ++c) {
    const double x = d(row, c);
    if (x == 1.0) {
      ++ones;
    } else if (x != 0.0) {
      return false;
    }
  }
  return ones == 1;
}

const NodeSpec& find_node(const NetworkSpec& spec, const std::string& id) {
  return spec.nodes[node_index(spec, id)];
}

Mat field_ccr(std::size_t m) { return symplectic_block_diag(m); }
Mat node_ccr(std::size_t n) { return symplectic_block_diag(n, 0.5); }

}  // namespace

const NodeLayout& AugmentedModel::node(const std::string& id) const {
  const auto it = layout.find(id);
  if (it == layout.end()) throw LookupError("unknown node id '" + id + "'");
  return it->second;
}

std::size_t node_index(const NetworkSpec& spec, const std::string& id) {
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    if (spec.nodes[i].id == id) return i;
  }
  throw LookupError("unknown node id '" + id + "'");
}

ValidationReport validate_spec(const NetworkSpec& spec) {
  ValidationReport report;
  auto fail = [&](const std::string& where, const std::string& what) {
    report.violations.push_back(where + ": " + what);
  };

  if (spec.nodes.empty()) fail("network", "no nodes");

  std::map<std::string, const NodeSpec*> by_id;
  for (const auto& node : spec.nodes) {
    const std::string where = "node '" + node.id + "'";
    if (node.id.empty()) fail("node", "empty id");
    if (!by_id.emplace(node.id, &node).second) fail(where, "duplicate node id");
    if (node.n < 2 || node.n % 2 != 0) {
      fail(where, "n must be even and >= 2 (got " + std::to_string(node.n) + ")");
    }
    if (node.m % 2 != 0) fail(where, "m must be even (got " + std::to_string(node.m) + ")");
    if (node.R.rows() != node.n || node.R.cols() != node.n) {
      fail(where, "R is " + dims(node.R) + ", expected " + dims(node.n, node.n));
    } else if (!node.R.all_finite()) {
      fail(where, "R has non-finite entries");
    } else if (frobenius_norm(node.R - transpose(node.R)) > 1e-12 * frobenius_norm(node.R)) {
      fail(where, "R is not symmetric");
    }
    if (node.M.rows() != node.m || node.M.cols() != node.n) {
      fail(where, "M is " + dims(node.M) + ", expected " + dims(node.m, node.n));
    } else if (!node.M.all_finite()) {
      fail(where, "M has non-finite entries");
    }
  }

  std::set<std::pair<std::string, std::string>> seen_edges;
  for (const auto& e : spec.energy_edges) {
    const std::string where = "energy edge " + e.j + "--" + e.k;
    const auto ij = by_id.find(e.j);
    const auto ik = by_id.find(e.k);
    if (ij == by_id.end()) fail(where, "unknown node id '" + e.j + "'");
    if (ik == by_id.end()) fail(where, "unknown node id '" + e.k + "'");
    if (e.j == e.k) fail(where, "self edge");
    if (!seen_edges.emplace(std::min(e.j, e.k), std::max(e.j, e.k)).second) {
      fail(where, "duplicate edge for this node pair");
    }
    if (ij != by_id.end() && ik != by_id.end()) {
      const std::size_t nj = ij->second->n;
      const std::size_t nk = ik->second->n;
      if (e.R0.rows() != nj || e.R0.cols() != nk) {
        fail(where, "R0 is " + dims(e.R0) + ", expected " + dims(nj, nk));
      } else if (!e.R0.all_finite()) {
        fail(where, "R0 has non-finite entries");
      }
    }
  }

  // Links grouped by sender for the channel-selection checks.
  std::map<std::string, std::vector<const FieldLink*>> outgoing;
  std::set<std::pair<std::string, std::string>> seen_links;
  for (const auto& link : spec.field_links) {
    const std::string where = "field link " + link.from + "->" + link.to;
    const auto ifrom = by_id.find(link.from);
    const auto ito = by_id.find(link.to);
    bool shape_ok = true;
    if (ifrom == by_id.end()) {
      fail(where, "unknown node id '" + link.from + "'");
      shape_ok = false;
    }
    if (ito == by_id.end()) {
      fail(where, "unknown node id '" + link.to + "'");
      shape_ok = false;
    }
    if (link.from == link.to) fail(where, "self link");
    if (!seen_links.emplace(link.from, link.to).second) fail(where, "duplicate field link");
    if (link.r == 0 || link.r % 2 != 0) {
      fail(where, "r must be even and positive (got " + std::to_string(link.r) + ")");
      shape_ok = false;
    }
    if (shape_ok) {
      const std::size_t mj = ifrom->second->m;
      const std::size_t nk = ito->second->n;
      if (link.D.rows() != link.r || link.D.cols() != mj) {
        fail(where, "D is " + dims(link.D) + ", expected " + dims(link.r, mj));
        shape_ok = false;
      } else if (!link.D.all_finite()) {
        fail(where, "D has non-finite entries");
        shape_ok = false;
      }
      if (link.N.rows() != link.r || link.N.cols() != nk) {
        fail(where, "N is " + dims(link.N) + ", expected " + dims(link.r, nk));
      } else if (!link.N.all_finite()) {
        fail(where, "N has non-finite entries");
      }
    }
    if (shape_ok) outgoing[link.from].push_back(&link);
  }

  for (const auto& [from, links] : outgoing) {
    const NodeSpec& node = *by_id.at(from);
    const std::string where = "node '" + from + "' outputs";
    std::size_t total = 0;
    for (const FieldLink* l : links) total += l->r;
    if (total > node.m) {
      fail(where, "total output channels " + std::to_string(total) + " exceed m = " +
                      std::to_string(node.m));
    }
    Mat stacked(total, node.m);
    std::size_t row = 0;
    for (const FieldLink* l : links) {
      stacked.set_block(row, 0, l->D);
      row += l->r;
    }
    if (!near(stacked * transpose(stacked), Mat::identity(total))) {
      fail(where, "stacked D_j violates D_j D_j^T = I (Ito matrix of the outputs)");
    }
    const Mat jj = field_ccr(node.m);
    for (std::size_t a = 0; a < links.size(); ++a) {
      const FieldLink& la = *links[a];
      if (!near(la.D * jj * transpose(la.D), symplectic_block_diag(la.r))) {
        fail("field link " + la.from + "->" + la.to,
             "D J_j D^T differs from the canonical output CCR matrix");
      }
      for (std::size_t b = a + 1; b < links.size(); ++b) {
        const FieldLink& lb = *links[b];
        if (!near(la.D * jj * transpose(lb.D), Mat(la.r, lb.r))) {
          fail("field links " + la.from + "->" + la.to + " and " + lb.from + "->" + lb.to,
               "cross block D_jk J_j D_jl^T is not zero (output channels do not commute)");
        }
      }
      bool coordinate = true;
      for (std::size_t r = 0; r < la.D.rows(); ++r) coordinate = coordinate && is_coordinate_row(la.D, r);
      if (!coordinate) {
        report.notes.push_back("field link " + la.from + "->" + la.to +
                               ": D is not a selection of permutation-matrix rows");
      }
    }
  }
  return report;
}

NetworkSpec normalize_edges(const NetworkSpec& spec) {
  NetworkSpec out = spec;
  for (auto& e : out.energy_edges) {
    if (node_index(spec, e.j) > node_index(spec, e.k)) {
      std::swap(e.j, e.k);
      e.R0 = transpose(e.R0);
    }
  }
  return out;
}

Mat direct_energy_matrix(const NetworkSpec& spec) {
  std::size_t n = 0;
  std::vector<std::size_t> offset;
  for (const auto& node : spec.nodes) {
    offset.push_back(n);
    n += node.n;
  }
  Mat r0(n, n);
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    r0.set_block(offset[i], offset[i], sym(spec.nodes[i].R));
  }
  for (const auto& e : spec.energy_edges) {
    const std::size_t j = node_index(spec, e.j);
    const std::size_t k = node_index(spec, e.k);
    r0.set_block(offset[j], offset[k], e.R0);
    r0.set_block(offset[k], offset[j], transpose(e.R0));
  }
  return r0;
}

AugmentedModel assemble(const NetworkSpec& raw) {
  const ValidationReport report = validate_spec(raw);
  if (!report.ok()) {
    throw ValidationError("assemble: network spec rejected (" + report.violations.front() + ")",
                          report.violations);
  }
  const NetworkSpec spec = normalize_edges(raw);

  AugmentedModel model;
  for (const auto& node : spec.nodes) {
    model.node_ids.push_back(node.id);
    model.layout[node.id] = NodeLayout{{model.n, node.n}, {model.m, node.m}};
    model.n += node.n;
    model.m += node.m;
  }
  model.Theta = node_ccr(model.n);
  model.Jmat = field_ccr(model.m);

  model.M = Mat(model.m, model.n);
  for (const auto& node : spec.nodes) {
    const NodeLayout& lj = model.layout.at(node.id);
    model.M.set_block(lj.fields.offset, lj.vars.offset, node.M);
  }
  for (const auto& link : spec.field_links) {
    const NodeLayout& lj = model.layout.at(link.from);
    const NodeLayout& lk = model.layout.at(link.to);
    model.M.set_block(lj.fields.offset, lk.vars.offset, transpose(link.D) * link.N);
  }

  model.R0 = direct_energy_matrix(spec);
  model.R = model.R0;

  // Field-mediated off-diagonal energy blocks. Each ordered link j->k
  // contributes -M_j^T J_j M_jk to block (j,k) and its transpose to (k,j);
  // this is the N_j^+ term of R_jk and, seen from k, the N_k^- term of R_kj.
  for (const auto& link : spec.field_links) {
    const NodeSpec& sender = find_node(spec, link.from);
    const NodeLayout& lj = model.layout.at(link.from);
    const NodeLayout& lk = model.layout.at(link.to);
    const Mat mjk = transpose(link.D) * link.N;
    const Mat block = -1.0 * (transpose(sender.M) * field_ccr(sender.m) * mjk);
    model.R.add_block(lj.vars.offset, lk.vars.offset, block);
    model.R.add_block(lk.vars.offset, lj.vars.offset, transpose(block));
  }

  model.MJM = transpose(model.M) * model.Jmat * model.M;
  model.B = 2.0 * model.Theta * transpose(model.M);
  refresh_drift(model);
  return model;
}

void refresh_drift(AugmentedModel& model) {
  model.A = 2.0 * model.Theta * (model.R + model.MJM);
}

ComponentQsde component_qsde(const NetworkSpec& spec, const std::string& j) {
  const NodeSpec& node = find_node(spec, j);
  const Mat theta = node_ccr(node.n);
  const Mat jj = field_ccr(node.m);

  ComponentQsde q;
  Mat energy = node.R + transpose(node.M) * jj * node.M;
  for (const auto& link : spec.field_links) {
    if (link.to != j) continue;
    const NodeSpec& sender = find_node(spec, link.from);
    const Mat jtilde = link.D * field_ccr(sender.m) * transpose(link.D);
    energy += transpose(link.N) * jtilde * link.N;
    q.E_in[link.from] = 2.0 * theta * transpose(link.N);
  }
  q.A_self = 2.0 * theta * energy;
  q.B_self = 2.0 * theta * transpose(node.M);
  for (const auto& e : spec.energy_edges) {
    if (e.j == j) q.A_energy[e.k] = 2.0 * theta * e.R0;
    if (e.k == j) q.A_energy[e.j] = 2.0 * theta * transpose(e.R0);
  }
  for (const auto& link : spec.field_links) {
    if (link.from != j) continue;
    q.C_out[link.to] = 2.0 * link.D * jj * node.M;
    q.D_out[link.to] = link.D;
  }
  return q;
}

Mat gamma_matrix(const NetworkSpec& spec) {
  std::size_t n = 0;
  std::map<std::string, std::size_t> offset;
  for (const auto& node : spec.nodes) {
    offset[node.id] = n;
    n += node.n;
  }
  Mat gamma(n, n);
  for (const auto& node : spec.nodes) {
    const std::size_t o = offset.at(node.id);
    gamma.add_block(o, o, transpose(node.M) * field_ccr(node.m) * node.M);
  }
  for (const auto& link : spec.field_links) {
    // Link k -> j seen from the receiver j: M_kj = D_kj^T N_jk.
    const NodeSpec& sender = find_node(spec, link.from);
    const std::size_t oj = offset.at(link.to);
    const std::size_t ok = offset.at(link.from);
    const Mat mkj = transpose(link.D) * link.N;
    const Mat jk = field_ccr(sender.m);
    gamma.add_block(oj, oj, transpose(mkj) * jk * mkj);
    gamma.add_block(oj, ok, 2.0 * transpose(mkj) * jk * sender.M);
  }
  return gamma;
}

double pr_residual(const AugmentedModel& model) {
  const Mat r = model.A * model.Theta + model.Theta * transpose(model.A) +
                model.B * model.Jmat * transpose(model.B);
  return frobenius_norm(r);
}

}  // namespace oqnet
