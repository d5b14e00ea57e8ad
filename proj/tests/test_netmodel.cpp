#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oqnet/errors.hpp"
#include "oqnet/netmodel.hpp"
#include "support.hpp"

using namespace oqnet;
using namespace oqnet::testing;

namespace {

const Mat bJ = symplectic_unit();

NetworkSpec linked_pair(const Mat& n21) {
  NetworkSpec spec;
  spec.nodes.push_back({"1", 2, 2, Mat(2, 2), Mat::identity(2)});
  spec.nodes.push_back({"2", 2, 2, Mat(2, 2), Mat::identity(2)});
  spec.field_links.push_back({"1", "2", 2, Mat::identity(2), n21});
  return spec;
}

bool has_violation(const ValidationReport& r, const std::string& needle) {
  for (const auto& v : r.violations)
    if (v.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("canonical node validates and assembles") {
  const NetworkSpec spec = canonical_node();
  CHECK(validate_spec(spec).ok());
  const AugmentedModel model = assemble(spec);
  CHECK(model.Theta == 0.5 * bJ);
  CHECK(model.Jmat == bJ);
  CHECK(model.B == bJ);
  CHECK(model.A == -1.0 * Mat::identity(2));
  CHECK(pr_residual(model) <= 1e-12);

  const ComponentQsde q = component_qsde(spec, "a");
  CHECK(q.A_self == -1.0 * Mat::identity(2));
  CHECK(q.B_self == bJ);
  CHECK(gamma_matrix(spec) == bJ);
}

TEST_CASE("validation catches structural problems") {
  NetworkSpec bad_d = linked_pair(Mat::identity(2));
  bad_d.field_links[0].D = Mat{{1, 0}, {0, 0}};
  CHECK_FALSE(validate_spec(bad_d).ok());

  NetworkSpec overlap = linked_pair(Mat::identity(2));
  overlap.nodes.push_back({"3", 2, 0, Mat(2, 2), Mat(0, 2)});
  overlap.field_links.push_back({"1", "3", 2, Mat::identity(2), Mat::identity(2)});
  CHECK_FALSE(validate_spec(overlap).ok());

  NetworkSpec unknown = canonical_node();
  unknown.energy_edges.push_back({"a", "zz", Mat(2, 2)});
  const auto r = validate_spec(unknown);
  CHECK(has_violation(r, "zz"));
  CHECK_THROWS_AS(assemble(unknown), ValidationError);

  NetworkSpec odd = canonical_node();
  odd.nodes[0].n = 3;
  odd.nodes[0].R = Mat(3, 3);
  odd.nodes[0].M = Mat(2, 3);
  CHECK_FALSE(validate_spec(odd).ok());

  NetworkSpec asym = canonical_node();
  asym.nodes[0].R = Mat{{0, 1}, {0, 0}};
  CHECK_FALSE(validate_spec(asym).ok());

  NetworkSpec dup_ids = canonical_node();
  dup_ids.nodes.push_back(dup_ids.nodes[0]);
  CHECK_FALSE(validate_spec(dup_ids).ok());

  NetworkSpec self_edge = canonical_node();
  self_edge.energy_edges.push_back({"a", "a", Mat(2, 2)});
  CHECK_FALSE(validate_spec(self_edge).ok());

  NetworkSpec dup_edge = linked_pair(Mat::identity(2));
  dup_edge.energy_edges.push_back({"1", "2", Mat(2, 2)});
  dup_edge.energy_edges.push_back({"2", "1", Mat(2, 2)});
  CHECK_FALSE(validate_spec(dup_edge).ok());

  NetworkSpec dup_link = linked_pair(Mat::identity(2));
  dup_link.nodes[0].m = 4;
  dup_link.nodes[0].M = Mat(4, 2);
  dup_link.field_links[0].D = Mat{{1, 0, 0, 0}, {0, 1, 0, 0}};
  dup_link.field_links.push_back({"1", "2", 2, Mat{{0, 0, 1, 0}, {0, 0, 0, 1}}, Mat::identity(2)});
  CHECK(has_violation(validate_spec(dup_link), "duplicate"));
}

TEST_CASE("rotated channel rows are accepted with a note") {
  NetworkSpec spec = linked_pair(Mat::identity(2));
  const double c = std::cos(0.3), s = std::sin(0.3);
  spec.field_links[0].D = Mat{{c, s}, {-s, c}};
  const auto r = validate_spec(spec);
  CHECK(r.ok());
  CHECK_FALSE(r.notes.empty());
}

TEST_CASE("field link between two nodes") {
  Rng rng(21);
  const Mat n21 = random_mat(rng, 2, 2);
  const NetworkSpec spec = linked_pair(n21);
  const AugmentedModel model = assemble(spec);
  CHECK(model.M.block(0, 2, 2, 2) == n21);  // fields of node 1 reach node 2 through N_21
  CHECK(model.M.block(2, 0, 2, 2) == Mat(2, 2));
  const Mat r12 = -1.0 * bJ * n21;  // -M_1^T J_1 M_12 with M_1 = I
  CHECK(max_abs(model.R.block(0, 2, 2, 2) - r12) <= 1e-15);
  CHECK(max_abs(model.R.block(2, 0, 2, 2) - transpose(r12)) <= 1e-15);
  CHECK(pr_residual(model) <= 1e-12);

  const ComponentQsde q1 = component_qsde(spec, "1");
  CHECK(q1.C_out.at("2") == 2.0 * bJ);

  // gamma_21 = 2 N_21^T D_12 J_1 M_1 = 2 N_21^T bJ.
  const Mat gam = gamma_matrix(spec);
  CHECK(max_abs(gam.block(2, 0, 2, 2) - 2.0 * transpose(n21) * bJ) <= 1e-15);
  CHECK(rebuild_drift(spec) == model.A);
}

TEST_CASE("uncoupled network has zero drift") {
  NetworkSpec spec;
  spec.nodes.push_back({"x", 2, 2, Mat(2, 2), Mat(2, 2)});
  spec.nodes.push_back({"y", 4, 0, Mat(4, 4), Mat(0, 4)});
  const AugmentedModel model = assemble(spec);
  CHECK(model.A == Mat(6, 6));
  CHECK(model.B == Mat(6, 2));
  CHECK(pr_residual(model) == 0.0);
  CHECK(gamma_matrix(spec) == Mat(6, 6));
}

TEST_CASE("corrupted drift breaks realizability") {
  AugmentedModel model = assemble(canonical_node());
  model.A += Mat::identity(2);
  CHECK(pr_residual(model) == doctest::Approx(frobenius_norm(2.0 * model.Theta)));
}

TEST_CASE("isolated node drift") {
  Rng rng(22);
  NetworkSpec spec;
  spec.nodes.push_back({"z", 4, 2, random_sym(rng, 4), random_mat(rng, 2, 4)});
  const auto q = component_qsde(spec, "z");
  const Mat theta = 0.5 * kron(Mat::identity(2), bJ);
  const Mat m = spec.nodes[0].M;
  CHECK(max_abs(q.A_self - 2.0 * theta * (spec.nodes[0].R + transpose(m) * bJ * m)) <= 1e-14);
}

TEST_CASE("random networks: realizability, component rebuild, gamma identities") {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const NetworkSpec spec = random_network(rng);
    const auto report = validate_spec(spec);
    REQUIRE(report.ok());
    const AugmentedModel model = assemble(spec);

    CHECK(pr_residual(model) <=
          1e-10 * (1 + frobenius_norm(model.A)) * (1 + frobenius_norm(model.Theta)));
    CHECK(model.R == transpose(model.R));
    CHECK(max_abs(rebuild_drift(spec) - model.A) <= 1e-10);

    const Mat gam = gamma_matrix(spec);
    const Mat mjm = transpose(model.M) * model.Jmat * model.M;
    const double mnorm = frobenius_norm(model.M);
    CHECK(max_abs(antisym(gam) - mjm) <= 1e-12 * (1 + mnorm * mnorm));
    CHECK(max_abs(model.R - direct_energy_matrix(spec) - sym(gam)) <= 1e-12 * (1 + mnorm * mnorm));
    CHECK(max_abs(2.0 * model.Theta * (direct_energy_matrix(spec) + gam) - model.A) <= 1e-10);

    // M block (j,k) vanishes unless k = j or j sends a field to k.
    for (const auto& from : spec.nodes) {
      for (const auto& to : spec.nodes) {
        if (from.id == to.id) continue;
        bool linked = false;
        for (const auto& l : spec.field_links) linked |= (l.from == from.id && l.to == to.id);
        if (linked) continue;
        const auto& lf = model.node(from.id);
        const auto& lt = model.node(to.id);
        CHECK(max_abs(model.M.block(lf.fields.offset, lt.vars.offset, lf.fields.size,
                                    lt.vars.size)) == 0.0);
      }
    }
  }
}

TEST_CASE("edge orientation does not change the assembly") {
  Rng rng(24);
  NetworkSpec spec = fieldless_pair(rng);
  const AugmentedModel a = assemble(spec);
  std::swap(spec.energy_edges[0].j, spec.energy_edges[0].k);
  spec.energy_edges[0].R0 = transpose(spec.energy_edges[0].R0);
  const AugmentedModel b = assemble(spec);
  CHECK(a.R == b.R);
  CHECK(a.A == b.A);
}
