#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oqnet/coupling_opt.hpp"
#include "oqnet/errors.hpp"
#include "oqnet/isolation.hpp"
#include "support.hpp"

using namespace oqnet;
using namespace oqnet::testing;

namespace {

NetworkSpec closed_pair(Rng& rng) {
  NetworkSpec spec;
  spec.nodes.push_back({"a", 2, 0, random_sym(rng, 2), Mat(0, 2)});
  spec.nodes.push_back({"b", 4, 0, random_sym(rng, 4), Mat(0, 4)});
  spec.energy_edges.push_back({"a", "b", random_mat(rng, 2, 4)});
  return spec;
}

void check_invariants(const AugmentedModel& model, const IsolationResult& r) {
  const std::size_t s = r.F.rows();
  CHECK(frobenius_norm(r.F * model.B) <= 1e-10 * std::max(1.0, frobenius_norm(model.B)));
  CHECK(max_abs(r.S * transpose(r.S) - Mat::identity(model.n)) <= 1e-12);
  const Mat sb = r.S * model.B;
  CHECK(max_abs(sb.block(0, 0, s, sb.cols())) <= 1e-10 * std::max(1.0, frobenius_norm(model.B)));
  Mat a(model.n, model.n);
  a.set_block(0, 0, r.a11);
  a.set_block(0, s, r.a12);
  a.set_block(s, 0, r.a21);
  a.set_block(s, s, r.a22);
  CHECK(frobenius_norm(transpose(r.S) * a * r.S - model.A) <= 1e-10 * (1 + frobenius_norm(model.A)));
}

}  // namespace

TEST_CASE("isolation dimension") {
  CHECK(isolation_dim(assemble(canonical_node())) == 0);
  Rng rng(61);
  const AugmentedModel closed = assemble(closed_pair(rng));
  CHECK(isolation_dim(closed) == closed.n);
  const AugmentedModel pair = assemble(fieldless_pair(rng));
  CHECK(isolation_dim(pair) >= 2);
}

TEST_CASE("isolating_f") {
  Rng rng(62);
  const AugmentedModel closed = assemble(closed_pair(rng));
  const Mat f = isolating_f(closed, closed.n);
  CHECK(max_abs(f * transpose(f) - Mat::identity(closed.n)) <= 1e-12);

  const AugmentedModel pair = assemble(fieldless_pair(rng));
  const Mat g = isolating_f(pair, 2);
  CHECK(frobenius_norm(g * pair.B) <= 1e-12);
  CHECK(max_abs(g.block(0, 2, 2, 2)) <= 1e-12);  // supported on node a

  try {
    (void)isolating_f(assemble(canonical_node()), 1);
    FAIL("expected insufficient isolation");
  } catch (const InsufficientIsolationError& err) {
    CHECK(err.available() == 0);
  }
  CHECK_THROWS_AS(isolating_f(pair, 0), DomainError);
}

TEST_CASE("partial selection favours noncommuting directions") {
  Rng rng(63);
  const AugmentedModel closed = assemble(closed_pair(rng));
  const Mat f = isolating_f(closed, 2);
  CHECK(noncommutativity_check(MemoryTask{f, vacuum_covariance(closed.n), {}}, closed.Theta));
}

TEST_CASE("decompose") {
  Rng rng(64);
  const AugmentedModel pair = assemble(fieldless_pair(rng));
  const IsolationResult r = decompose(pair, isolating_f(pair, 2));
  check_invariants(pair, r);
  CHECK(r.b.rows() == 2);
  // With F the node-a coordinates, a11 is node a's self-drift rotated.
  const Mat fa = r.F.block(0, 0, 2, 2);
  CHECK(max_abs(r.a11 - fa * pair.A.block(0, 0, 2, 2) * transpose(fa)) <= 1e-12);

  const AugmentedModel closed = assemble(closed_pair(rng));
  const IsolationResult full = decompose(closed, isolating_f(closed, closed.n));
  check_invariants(closed, full);
  CHECK(full.b.rows() == 0);
  CHECK(full.a22.rows() == 0);

  const AugmentedModel canon = assemble(canonical_node());
  CHECK_THROWS_AS(decompose(canon, Mat::identity(2)), NotIsolatingError);

  NetworkSpec flat = fieldless_pair(rng);
  flat.nodes[0].R = Mat(2, 2);
  flat.nodes[1].R = Mat(2, 2);
  flat.energy_edges.clear();
  flat.nodes[1].M = Mat(2, 2);
  const AugmentedModel zero = assemble(flat);
  const IsolationResult zr = decompose(zero, isolating_f(zero, 2));
  CHECK(max_abs(zr.G) == 0.0);
  CHECK_THROWS_AS(tau_sqrt(zr.F, zr.G, vacuum_covariance(4), 1e-3), DegenerateAsymptoticsError);
}

TEST_CASE("tau_sqrt homogeneity") {
  Rng rng(65);
  const Mat f = random_mat(rng, 2, 4);
  const Mat g = random_mat(rng, 2, 4);
  const Mat p = vacuum_covariance(4);
  const double base = tau_sqrt(f, g, p, 1e-3);
  CHECK(tau_sqrt(f, g, p, 4e-3) == doctest::Approx(2 * base).epsilon(1e-14));
  CHECK(tau_sqrt(f, 3.0 * g, p, 1e-3) == doctest::Approx(base / 3).epsilon(1e-14));
  CHECK_THROWS_AS(tau_sqrt(f, g, p, 0.0), DomainError);
}

TEST_CASE("isolated second derivative") {
  Rng rng(66);
  const AugmentedModel pair = assemble(fieldless_pair(rng));
  const MemoryTask task{isolating_f(pair, 2), random_task(rng, 4).P, {1e-3}};
  const double v = isolated_delta_second(pair, task);
  CHECK(v == doctest::Approx(delta_derivatives0(pair, task).second).epsilon(1e-10));
  CHECK(v == doctest::Approx(trace(task.sigma() * 2.0 * pair.A * task.P * transpose(pair.A))).epsilon(1e-10));

  AugmentedModel doubled = pair;
  doubled.R = 2.0 * pair.R;
  CHECK(isolated_delta_second(doubled, task) == doctest::Approx(4 * v).epsilon(1e-12));
  doubled.R = Mat(4, 4);
  CHECK(isolated_delta_second(doubled, task) == 0.0);

  CHECK_THROWS_AS(isolated_delta_second(pair, full_task(4)), ModeMismatchError);
}

TEST_CASE("square-root law of the decoherence time") {
  Rng rng(67);
  for (int trial = 0; trial < 5; ++trial) {
    const AugmentedModel model = assemble(fieldless_pair(rng));
    const IsolationResult iso = decompose(model, isolating_f(model, 2));
    const MemoryTask task{iso.F, random_task(rng, 4).P, {}};
    CHECK(delta_derivatives0(model, task).first <= 1e-20);

    const double anorm = frobenius_norm(model.A);
    const double gp2 = trace(iso.G * task.P * transpose(iso.G));
    const double t = 1e-4 / anorm;
    CHECK(std::abs(deviation(model, task, t) / (t * t) / gp2 - 1) <= 0.01);

    std::vector<double> taus;
    for (double eps : {1e-4, 1e-5, 1e-6}) {
      const auto h = decoherence_time(model, task, eps);
      REQUIRE(h.reached);
      taus.push_back(h.tau);
    }
    CHECK(std::abs(taus[0] / taus[1] / std::sqrt(10.0) - 1) <= 0.02);
    CHECK(std::abs(taus[1] / taus[2] / std::sqrt(10.0) - 1) <= 0.02);
    CHECK(std::abs(taus[1] / tau_sqrt(iso.F, iso.G, task.P, 1e-5) - 1) <= 0.05);
  }
}

TEST_CASE("isolated optimizer") {
  Rng rng(68);
  for (int trial = 0; trial < 5; ++trial) {
    const NetworkSpec spec = fieldless_pair(rng);
    const AugmentedModel model = assemble(spec);
    const MemoryTask task{isolating_f(model, 2), random_task(rng, 4).P, {1e-3}};
    const OptimizerReport iso = solve_global(spec, model, task, OptimizerMode::isolated);
    const OptimizerReport std_mode = solve_global(spec, model, task, OptimizerMode::standard);
    CHECK(iso.objective_after <= iso.objective_before + 1e-12);
    CHECK(max_abs(iso.solution[0].block - std_mode.solution[0].block) <= 1e-8);
    CHECK(iso.objective_after == doctest::Approx(isolated_delta_second(install(model, iso.solution), task)));

    // phi = 1/2 ||F Theta R sqrt(P)||^2 has a vanishing gradient at the solution.
    auto phi = [&](const EdgeUnknowns& c) {
      const AugmentedModel m = install(model, c);
      const Mat x = task.F * m.Theta * m.R;
      return 0.5 * trace(x * task.P * transpose(x));
    };
    const double h = 1e-6;
    const AugmentedModel opt = install(model, iso.solution);
    const Mat grad = sym(opt.Theta * task.sigma() * opt.Theta * opt.R * task.P);
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 2; ++c) {
        EdgeUnknowns up = iso.solution, dn = iso.solution;
        up[0].block(r, c) += h;
        dn[0].block(r, c) -= h;
        const double fd = (phi(up) - phi(dn)) / (2 * h);
        CHECK(std::abs(fd) <= 1e-5 * (1 + std::abs(phi(iso.solution))));
        CHECK(std::abs(-2 * grad(r, 2 + c)) <= 1e-8);
      }
  }
}
