#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oqnet/errors.hpp"
#include "oqnet/memmetrics.hpp"
#include "support.hpp"

using namespace oqnet;
using namespace oqnet::testing;

namespace {

struct Canonical {
  AugmentedModel model = assemble(canonical_node());
  MemoryTask task = full_task(2);
};

}  // namespace

TEST_CASE("delta_star") {
  CHECK(delta_star(full_task(2)) == doctest::Approx(1.0));
  MemoryTask t{Mat{{1, 0}}, Mat{{3, 0}, {0, 5}}, {0.1}};
  CHECK(delta_star(t) == doctest::Approx(3.0));
}

TEST_CASE("validate_task") {
  const Mat theta = assemble(canonical_node()).Theta;
  CHECK(validate_task(full_task(2), theta).empty());
  CHECK_FALSE(validate_task(MemoryTask{Mat::identity(2), Mat(2, 2), {0.1}}, theta).empty());
  CHECK_FALSE(validate_task(MemoryTask{Mat{{1, 0}, {2, 0}}, vacuum_covariance(2), {0.1}}, theta).empty());
  CHECK_FALSE(validate_task(MemoryTask{Mat::identity(2), 0.1 * Mat::identity(2), {0.1}}, theta).empty());
  CHECK_FALSE(validate_task(MemoryTask{Mat::identity(2), vacuum_covariance(2), {-0.1}}, theta).empty());
  CHECK_FALSE(validate_task(MemoryTask{Mat::identity(3), vacuum_covariance(3), {0.1}}, theta).empty());
}

TEST_CASE("canonical deviation closed form") {
  Canonical c;
  CHECK(deviation(c.model, c.task, 0.0) == 0.0);
  for (double t : {1e-3, 0.1, 1.0, 4.0}) {
    CHECK(std::abs(deviation(c.model, c.task, t) - 2 * (1 - std::exp(-t))) <= 1e-12);
    CHECK(std::abs(deviation(c.model, c.task, t, GramianMethod::ode) - 2 * (1 - std::exp(-t))) <= 1e-9);
  }
  const auto d = delta_derivatives0(c.model, c.task);
  CHECK(d.first == 2.0);
  CHECK(d.second == -2.0);

  const DeviationCurve curve = deviation_curve(c.model, c.task);
  REQUIRE(curve.grid.size() == 200);
  CHECK(curve.grid.back() == doctest::Approx(5.0 / std::sqrt(2.0)));
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    CHECK(std::abs(curve.values[i] - 2 * (1 - std::exp(-curve.grid[i]))) <= 1e-8);
  }
}

TEST_CASE("deviation without noise") {
  Rng rng(31);
  AugmentedModel model = assemble(canonical_node());
  model.A = random_mat(rng, 2, 2);
  model.B = Mat(2, 2);
  const MemoryTask task = random_task(rng, 2);
  const double t = 0.7;
  const Mat alpha = expm(t * model.A) - Mat::identity(2);
  CHECK(deviation(model, task, t) ==
        doctest::Approx(trace(task.F * alpha * task.P * transpose(alpha) * transpose(task.F))));
  const auto d = delta_derivatives0(model, task);
  CHECK(d.first == 0.0);
  CHECK(d.second == doctest::Approx(trace(task.sigma() * 2.0 * model.A * task.P * transpose(model.A))));

  model.A = Mat(2, 2);
  const auto z = delta_derivatives0(model, task);
  CHECK(z.first == 0.0);
  CHECK(z.second == 0.0);
  CHECK_FALSE(decoherence_time(model, task, 0.5).reached);
}

TEST_CASE("canonical decoherence time and high-fidelity expansion") {
  Canonical c;
  const auto tau = decoherence_time(c.model, c.task, 0.01);
  REQUIRE(tau.reached);
  CHECK(std::abs(tau.tau - (-std::log(0.995))) <= 1e-10);
  CHECK_FALSE(tau.tangency);

  CHECK_FALSE(decoherence_time(c.model, c.task, 2.5).reached);

  const TauTaylor tt = tau_taylor(c.model, c.task);
  CHECK(std::abs(tt.first - 0.5) <= 1e-12);
  CHECK(std::abs(tt.second - 0.25) <= 1e-12);
  CHECK(tt(0.01) == doctest::Approx(0.0050125).epsilon(1e-12));

  for (double eps : {0.3, 1.0, 1.9}) {
    const auto r = decoherence_time(c.model, c.task, eps);
    REQUIRE(r.reached);
    CHECK(std::abs(r.tau - (-std::log(1 - eps / 2))) <= 1e-9 * r.tau);
  }

  // (tau - tau_hat) / eps^3 stays bounded.
  double lo = INFINITY, hi = 0.0;
  for (double eps : {1e-1, 3e-2, 1e-2, 3e-3, 1e-3}) {
    const double r = std::abs(decoherence_time(c.model, c.task, eps).tau - tt(eps)) / (eps * eps * eps);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  CHECK(hi / lo < 3.0);
}

TEST_CASE("tau_taylor is invariant under scaling F and rejects FB = 0") {
  Rng rng(32);
  const AugmentedModel model = assemble(random_network(rng, {.min_nodes = 2, .allow_fieldless = false}));
  MemoryTask task = random_task(rng, model.n);
  const TauTaylor a = tau_taylor(model, task);
  task.F = -3.0 * task.F;
  const TauTaylor b = tau_taylor(model, task);
  CHECK(a.first == doctest::Approx(b.first).epsilon(1e-12));
  CHECK(a.second == doctest::Approx(b.second).epsilon(1e-12));

  AugmentedModel quiet = model;
  quiet.B = Mat(model.n, model.m);
  CHECK_THROWS_AS(tau_taylor(quiet, task), IsolatedRegimeError);
}

TEST_CASE("noncommutativity check") {
  const Mat theta = assemble(canonical_node()).Theta;
  CHECK(noncommutativity_check(full_task(2), theta));
  CHECK_FALSE(noncommutativity_check(MemoryTask{Mat{{1, 0}}, vacuum_covariance(2), {}}, theta));
}

TEST_CASE("random models: imaginary Gramian identity, derivatives, hitting property") {
  Rng rng(33);
  for (int trial = 0; trial < 30; ++trial) {
    const AugmentedModel model = assemble(random_network(rng));
    const double anorm = frobenius_norm(model.A);
    if (anorm == 0.0) continue;
    const MemoryTask task = random_task(rng, model.n);

    const double t = 3.0 * frac(rng) / anorm;
    const Mat im = gramian(model.A, model.B * model.Jmat * transpose(model.B), t);
    const Mat e = expm(t * model.A);
    const Mat expected = model.Theta - e * model.Theta * transpose(e);
    CHECK(frobenius_norm(im - expected) <= 1e-8 * std::max(1.0, frobenius_norm(expected)));

    // First derivative against Richardson-extrapolated one-sided differences.
    const auto d = delta_derivatives0(model, task);
    const double h1 = 1e-5 / anorm, h2 = 1e-6 / anorm;
    const double fd1 = deviation(model, task, h1) / h1;
    const double fd2 = deviation(model, task, h2) / h2;
    const double rich = (h1 * fd2 - h2 * fd1) / (h1 - h2);
    CHECK(std::abs(rich - d.first) <= 1e-5 * std::max(1.0, std::abs(d.first)) + 1e-6 * d.second / anorm);

    if (d.first <= 0.0) continue;
    const double eps = 0.05;
    const auto hit = decoherence_time(model, task, eps);
    if (!hit.reached) continue;
    const double thr = eps * delta_star(task);
    CHECK(std::abs(deviation(model, task, hit.tau) - thr) <= 1e-8 * thr);
    for (int i = 1; i < 20; ++i) {
      CHECK(deviation(model, task, hit.tau * i / 20.0) < thr);
    }
    double prev = 0.0;
    for (double e2 : {0.01, 0.02, 0.04, 0.05}) {
      const auto h = decoherence_time(model, task, e2);
      REQUIRE(h.reached);
      CHECK(h.tau >= prev);
      prev = h.tau;
    }
  }
}

TEST_CASE("Taylor remainder of the deviation") {
  Rng rng(34);
  int checked = 0;
  while (checked < 20) {
    const AugmentedModel model = assemble(random_network(rng, {.min_nodes = 1, .max_nodes = 3}));
    const double anorm = frobenius_norm(model.A);
    if (anorm == 0.0) continue;
    const MemoryTask task = random_task(rng, model.n);
    const auto d = delta_derivatives0(model, task);
    double lo = INFINITY, hi = 0.0;
    for (double s : {1e-1, 3e-2, 1e-2, 3e-3, 1e-3}) {
      const double t = s / anorm;
      const double r = std::abs(deviation(model, task, t) - d.first * t - 0.5 * d.second * t * t) / (t * t * t);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    CHECK(hi <= 3.0 * lo);
    ++checked;
  }
}
