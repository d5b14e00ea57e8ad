#pragma once

// Oscillator network description and assembly of the augmented linear QSDE
// dX = A X dt + B dW for the whole network.

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "oqnet/matkernel.hpp"

namespace oqnet {

struct NodeSpec {
  std::string id;
  std::size_t n = 2;  // internal variables (even)
  std::size_t m = 0;  // external input field channels (even)
  Mat R;              // n x n symmetric individual energy matrix
  Mat M;              // m x n coupling to the node's external field
};

/// Direct energy coupling 1/2 X_j^T R0 X_k between two nodes.
struct EnergyEdge {
  std::string j;
  std::string k;
  Mat R0;  // n_j x n_k
};

/// Output field channels travelling from node `from` to node `to`.
struct FieldLink {
  std::string from;
  std::string to;
  std::size_t r = 2;  // channel count (even)
  Mat D;              // r x m_from channel selection
  Mat N;              // r x n_to coupling of the receiver to these channels
};

struct NetworkSpec {
  std::vector<NodeSpec> nodes;
  std::vector<EnergyEdge> energy_edges;
  std::vector<FieldLink> field_links;
};

struct ValidationReport {
  std::vector<std::string> violations;
  /// Informational remarks that do not make the spec invalid.
  std::vector<std::string> notes;

  bool ok() const noexcept { return violations.empty(); }
};

inline constexpr double kStructuralTol = 1e-10;

ValidationReport validate_spec(const NetworkSpec& spec);

struct BlockRange {
  std::size_t offset = 0;
  std::size_t size = 0;
};

struct NodeLayout {
  BlockRange vars;    // rows/cols of the node in the n-dimensional state
  BlockRange fields;  // rows of the node in the m-dimensional input
};

struct AugmentedModel {
  std::size_t n = 0;
  std::size_t m = 0;
  Mat Theta;  // 1/2 I_{n/2} (x) bJ
  Mat Jmat;   // I_{m/2} (x) bJ
  Mat M;      // m x n network-field coupling
  Mat R;      // n x n network energy matrix
  Mat A;
  Mat B;
  /// Energy matrix without field-mediated contributions: diagonal R_j plus
  /// the direct energy edges.
  Mat R0;
  /// M^T J M, kept so that A can be rebuilt cheaply when R changes.
  Mat MJM;
  std::vector<std::string> node_ids;
  std::map<std::string, NodeLayout> layout;

  const NodeLayout& node(const std::string& id) const;
};

/// Block-order and index lookups shared by spec-level routines.
std::size_t node_index(const NetworkSpec& spec, const std::string& id);

/// Returns a copy with every energy edge oriented j before k in node order.
NetworkSpec normalize_edges(const NetworkSpec& spec);

/// Throws ValidationError when `validate_spec` reports violations.
AugmentedModel assemble(const NetworkSpec& spec);

/// Rebuilds A from R using the cached M^T J M.
void refresh_drift(AugmentedModel& model);

/// Coefficients of one node's QSDE
///   dX_j = (A_j X_j + sum A_jk X_k) dt + B_j dW_j + sum E_jk dY_kj,
///   dY_jk = C_jk X_j dt + D_jk dW_j.
struct ComponentQsde {
  Mat A_self;
  std::map<std::string, Mat> A_energy;   // k in N_j^0
  Mat B_self;
  std::map<std::string, Mat> C_out;      // k in N_j^+
  std::map<std::string, Mat> D_out;      // k in N_j^+
  std::map<std::string, Mat> E_in;       // k in N_j^-
};

ComponentQsde component_qsde(const NetworkSpec& spec, const std::string& j);

/// Auxiliary matrix whose antisymmetric part is M^T J M and whose symmetric
/// part carries the field-mediated energy.
Mat gamma_matrix(const NetworkSpec& spec);

/// Block matrix of diagonal R_j and direct-energy edges.
Mat direct_energy_matrix(const NetworkSpec& spec);

/// Frobenius norm of A Theta + Theta A^T + B J B^T.
double pr_residual(const AugmentedModel& model);

}  // namespace oqnet
