#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <stdexcept>

#include "visco/diagnostics.hpp"
#include "visco/errors.hpp"

using namespace visco;

namespace {

CoefficientVector random_state(BasisPtr b, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  auto c = CoefficientVector::zeros(b);
  for (auto& v : c.d) v = scale * g(rng) / std::sqrt(static_cast<double>(c.d.size()));
  return c;
}

TrajectoryRecord synthetic(const std::function<double(double)>& l2, double t0, double t1, int n) {
  TrajectoryRecord tr;
  for (int k = 0; k <= n; ++k) {
    const double t = t0 + (t1 - t0) * k / n;
    RecordScalars s;
    s.t = t;
    s.l2 = l2(t);
    tr.times.push_back(t);
    tr.scalars.push_back(s);
  }
  return tr;
}

// int G(|D(u)|) with the unregularized potential.
double j_direct(const CoefficientVector& u, const ViscosityModel& model) {
  const GridField D = synthesize(u, FieldKind::sym_gradient);
  double s = 0.0;
  for (std::size_t x = 0; x < D.points(); ++x) {
    double d2 = 0.0;
    for (const auto& c : D.comps) d2 += c[x] * c[x];
    s += eval_G(model, std::sqrt(d2), 0.0);
  }
  return s * u.basis->cell_volume();
}

}  // namespace

TEST_CASE("energy inequality: pure Stokes single mode") {
  const auto b = build_basis(2, 2);
  const auto i = *b->find({1, 0, 0}, Phase::cos);
  IntegratorConfig cfg;
  cfg.t_end = 2.0;
  const auto r = run(CoefficientVector::unit(b, i), cfg, ViscosityModel::constant(0.0), 0.0, {});
  const auto rep = energy_inequality_check(r.trajectory, 1.0);
  REQUIRE(rep.margins.size() == r.trajectory.size());
  for (std::size_t k = 0; k < rep.margins.size(); ++k) {
    // ||u||^2 = e^-t and int ||u||^2_{H1} = 1 - e^-t.
    const double t = r.trajectory.times[k];
    CHECK(rep.margins[k] == doctest::Approx(0.5 * (1.0 - std::exp(-t))).epsilon(1e-7));
  }
  CHECK(std::abs(rep.worst_sharp_margin) <= 1e-6);
  CHECK(rep.balance_residual_max <= 1e-8);
}

TEST_CASE("energy inequality: zero trajectory and unforced runs") {
  const auto b = build_basis(2, 3);
  IntegratorConfig cfg;
  const auto z = run(CoefficientVector::zeros(b), cfg, ViscosityModel::power_law(1.0), 1e-6, {});
  const auto rz = energy_inequality_check(z.trajectory, 0.0);
  CHECK(rz.worst_inequality_margin == 0.0);
  CHECK(energy_inequality_check(z.trajectory, 0.5).worst_inequality_margin == doctest::Approx(0.25));

  const auto u0 = random_state(b, 11, 1.5);
  cfg.t_end = 0.5;
  cfg.dt_max = 2e-3;
  const auto r = run(u0, cfg, ViscosityModel::carreau(1.0, 1.0), 1e-4, {});
  const auto rep = energy_inequality_check(r.trajectory, norms(u0).l2);
  CHECK(rep.worst_inequality_margin >= -1e-8);
  // Without forcing the sharp margin is twice the integrated j' pairing.
  double jp = 0.0;
  const auto& s = r.trajectory.scalars;
  for (std::size_t k = 1; k < s.size(); ++k)
    jp += 0.5 * (s[k].t - s[k - 1].t) * (s[k].jprime_pairing + s[k - 1].jprime_pairing);
  CHECK(rep.worst_sharp_margin >= -1e-8);
  const double final_sharp = norms(u0).l2 * norms(u0).l2 - s.back().l2 * s.back().l2 - s.back().int_h1_sq;
  CHECK(final_sharp == doctest::Approx(2.0 * jp).epsilon(5e-4));
}

TEST_CASE("jprime bound: zero trajectory and constant F reduction") {
  const auto b = build_basis(2, 3);
  IntegratorConfig cfg;
  cfg.t_end = 0.3;
  const auto z = run(CoefficientVector::zeros(b), cfg, ViscosityModel::constant(2.0), 0.0, {});
  CHECK(jprime_bound_check(z.trajectory, ViscosityModel::constant(2.0), 0.0).lhs == 0.0);

  const double c = 2.0;
  const auto r = run(random_state(b, 12), cfg, ViscosityModel::constant(c), 0.0, {});
  const auto jb = jprime_bound_check(r.trajectory, ViscosityModel::constant(c), 0.0);
  // ||j'||_{H-1} = c ||u||_{H1} / 2; p = 4/N = 2.
  double integral = 0.0;
  const auto& s = r.trajectory.scalars;
  for (std::size_t k = 1; k < s.size(); ++k) {
    const double a = 0.5 * s[k - 1].h1, bb = 0.5 * s[k].h1;
    integral += 0.5 * (s[k].t - s[k - 1].t) * (a * a + bb * bb);
  }
  CHECK(jb.lhs == doctest::Approx(c * std::sqrt(integral)).epsilon(1e-10));
  for (std::size_t k = 0; k < s.size(); ++k) CHECK(jb.dual_norms[k] == doctest::Approx(0.5 * c * s[k].h1).epsilon(1e-10));
}

TEST_CASE("jprime bound: power law alpha = 1 under eps refinement") {
  const auto b = build_basis(2, 3);
  const auto u0 = random_state(b, 13);
  IntegratorConfig cfg;
  cfg.t_end = 0.2;
  const auto model = ViscosityModel::power_law(1.0);
  std::vector<double> lhs;
  for (double eps : {1e-4, 5e-5, 2.5e-5}) {
    const auto r = run(u0, cfg, model, eps, {});
    lhs.push_back(jprime_bound_check(r.trajectory, model, eps).lhs);
  }
  CHECK(uniformly_bounded(lhs, 0.1));
  CHECK_FALSE(uniformly_bounded({1.0, 1.2}, 0.1));
  CHECK(uniformly_bounded({0.0, 0.0}, 0.1));
}

TEST_CASE("gn_ratio: unit mode closed form, scaling, boundedness") {
  const auto b = build_basis(2, 4);
  const auto i = *b->find({1, 0, 0}, Phase::cos);
  // l4^4 = c^4 int cos^4 = c^4 3 pi^2 / 2 with c^2 = 2 / (4 pi^2); h1 = l2 = 1.
  const double expected = std::sqrt(3.0 / 8.0) / std::numbers::pi;
  CHECK(gn_ratio(CoefficientVector::unit(b, i)) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(gn_ratio(CoefficientVector::unit(b, i, 7.0)) == doctest::Approx(expected).epsilon(1e-12));
  CHECK_THROWS_AS(gn_ratio(CoefficientVector::zeros(b)), DiagnosticError);

  for (int N : {2, 3}) {
    const auto bn = build_basis(N, 3);
    std::vector<double> ratios;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto u = random_state(bn, 100 + seed);
      const double r = gn_ratio(u);
      for (double c : {0.1, 10.0}) {
        auto v = u;
        for (double& x : v.d) x *= c;
        CHECK(std::abs(gn_ratio(v) - r) <= 1e-12 * r);
      }
      ratios.push_back(r);
    }
    std::sort(ratios.begin(), ratios.end());
    CHECK(std::isfinite(ratios.back()));
    CHECK(ratios.back() <= 10.0 * ratios[ratios.size() / 2]);
  }
}

TEST_CASE("j_gap") {
  const auto b = build_basis(2, 3);
  const auto u = random_state(b, 14, 2.0);
  const auto carreau = ViscosityModel::carreau(1.0, 1.0);
  CHECK(j_gap(carreau, u, 0.0) == 0.0);
  CHECK(j_gap(carreau, CoefficientVector::zeros(b), 1e-3) == 0.0);

  // Carreau alpha = 1: G_eps(t) = sqrt(mu + eps + t^2) - sqrt(mu + eps).
  const GridField D = synthesize(u, FieldKind::sym_gradient);
  auto j_closed = [&](double eps) {
    double s = 0.0;
    for (std::size_t x = 0; x < D.points(); ++x) {
      double d2 = 0.0;
      for (const auto& c : D.comps) d2 += c[x] * c[x];
      s += std::sqrt(1.0 + eps + d2) - std::sqrt(1.0 + eps);
    }
    return s * b->cell_volume();
  };
  double prev = INFINITY;
  for (double eps : {1e-2, 1e-4, 1e-6}) {
    const double g = j_gap(carreau, u, eps);
    CHECK(g == doctest::Approx(j_closed(0.0) - j_closed(eps)).epsilon(1e-9));
    CHECK(std::abs(g) < prev);
    prev = std::abs(g);
  }
  CHECK(prev <= 1e-4);
  CHECK(j_gap(ViscosityModel::power_law(0.5), u, 1e-6) > 0.0);
}

TEST_CASE("power_sum_margin scalar inequality") {
  std::mt19937_64 rng(15);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> scale(-6.0, 6.0);
  for (double gamma : {0.5, 1.0, 2.0}) {
    for (int k = 0; k < 1000; ++k) {
      double a = 0.0, bb = 0.0, s = 0.0;
      const double su = std::exp(scale(rng)), sv = std::exp(scale(rng));
      for (int d = 0; d < 5; ++d) {
        const double u = su * g(rng), v = sv * g(rng);
        a += u * u;
        bb += v * v;
        s += (u + v) * (u + v);
      }
      a = std::sqrt(a);
      bb = std::sqrt(bb);
      s = std::sqrt(s);
      const double scale_ref = std::pow(2.0, gamma - 0.5) * (std::pow(a, gamma) + std::pow(bb, gamma));
      CHECK(power_sum_margin(a, bb, s, gamma) >= -1e-14 * scale_ref);
    }
  }
  // u = v, gamma = 1/2 is the tight case: |2u|^(1/2) = sqrt(2) |u|^(1/2) < 2 |u|^(1/2).
  CHECK(power_sum_margin(1.0, 1.0, 2.0, 0.5) == doctest::Approx(2.0 - std::sqrt(2.0)));
  // gamma = 2, u = v: 4 |u|^2 against 2^(3/2) 2 |u|^2.
  CHECK(power_sum_margin(1.0, 1.0, 2.0, 2.0) == doctest::Approx(4.0 * std::sqrt(2.0) - 4.0));
  CHECK_THROWS_AS(power_sum_margin(1.0, 1.0, 2.0, 0.4), DiagnosticError);
}

TEST_CASE("energy equality: theta identity on random states") {
  const auto b = build_basis(2, 4);
  for (double alpha : {0.3, 0.5, 0.9, 1.0}) {
    const auto model = ViscosityModel::power_law(alpha);
    const double theta = theta_for_power_law(alpha);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto u = random_state(b, 200 + seed);
      auto tu = u;
      for (double& x : tu.d) x *= theta;
      const double lhs = j_direct(u, model);
      CHECK(jprime_pairing_unregularized(tu, u, model) == doctest::Approx(lhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("energy equality: eta on computed trajectories") {
  const auto b = build_basis(2, 3);
  const auto u0 = random_state(b, 16);
  IntegratorConfig cfg;
  cfg.t_end = 0.3;

  {
    const auto model = ViscosityModel::power_law(1.0);
    const double eps = 1e-10;
    const auto r = run(u0, cfg, model, eps, {});
    const auto eta = energy_equality_eta(r.trajectory, model, theta_for_power_law(1.0));
    REQUIRE(eta.size() == r.trajectory.size());
    for (std::size_t k = 0; k < eta.size(); ++k) {
      CHECK(eta[k].eta == 1.0);
      // phi(1) = int |D|; the residual is the regularization gap, and
      // s - s^2 / sqrt(eps + s^2) <= sqrt(eps) / 2 pointwise.
      const GridField D = synthesize(r.trajectory.states[k], FieldKind::sym_gradient);
      double absD = 0.0;
      for (std::size_t x = 0; x < D.points(); ++x) {
        double d2 = 0.0;
        for (const auto& c : D.comps) d2 += c[x] * c[x];
        absD += std::sqrt(d2);
      }
      absD *= b->cell_volume();
      CHECK(eta[k].residual == doctest::Approx(absD - r.trajectory.scalars[k].jprime_pairing).epsilon(1e-9));
      CHECK(eta[k].residual >= 0.0);
      CHECK(eta[k].residual <= 0.5 * std::sqrt(eps) * b->volume());
    }
  }
  {
    const double alpha = 0.5;
    const auto model = ViscosityModel::power_law(alpha);
    const double theta = theta_for_power_law(alpha);
    CHECK(theta == doctest::Approx(4.0 / 9.0).epsilon(1e-15));
    const auto r = run(u0, cfg, model, 1e-8, {});
    const auto eta = energy_equality_eta(r.trajectory, model, theta);
    for (std::size_t k = 0; k < eta.size(); ++k) {
      const auto& u = r.trajectory.states[k];
      CHECK(eta[k].bracketed);
      CHECK(eta[k].eta >= theta);
      CHECK(eta[k].eta <= 1.0);
      // Homogeneity: phi(eta) = eta^(1 - alpha) <j'(u), u>.
      const double tau0 = jprime_pairing_unregularized(u, u, model);
      const double oracle = std::pow(r.trajectory.scalars[k].jprime_pairing / tau0, 1.0 / (1.0 - alpha));
      CHECK(eta[k].eta == doctest::Approx(oracle).epsilon(1e-9));
      CHECK(std::abs(eta[k].residual) <= 1e-12 * tau0);
    }
  }

  TrajectoryRecord zero;
  zero.times = {0.0};
  zero.scalars.resize(1);
  zero.states = {CoefficientVector::zeros(b)};
  const auto ez = energy_equality_eta(zero, ViscosityModel::power_law(0.5), 4.0 / 9.0);
  CHECK(ez[0].eta == 1.0);
  CHECK(ez[0].residual == 0.0);

  // A drain larger than phi(1) has no root on [theta, 1].
  TrajectoryRecord off;
  off.times = {0.0};
  off.scalars.resize(1);
  off.states = {u0};
  off.scalars[0].jprime_pairing = 10.0 * jprime_pairing_unregularized(u0, u0, ViscosityModel::power_law(0.5));
  const auto eo = energy_equality_eta(off, ViscosityModel::power_law(0.5), 4.0 / 9.0);
  CHECK_FALSE(eo[0].bracketed);
  CHECK(eo[0].eta == 1.0);
  CHECK(eo[0].residual < 0.0);
  CHECK_THROWS_AS(energy_equality_eta(off, ViscosityModel::power_law(0.5), 0.0), DiagnosticError);
}

TEST_CASE("continuity surrogate") {
  const auto b = build_basis(2, 3);
  IntegratorConfig cfg;
  cfg.t_end = 0.6;
  ForcingSpec spec;
  spec.T1 = 0.3;
  ForcingTerm f;
  f.xi = {1, 1, 0};
  f.amplitude = 2.0;
  spec.terms.push_back(f);
  const auto r = run(random_state(b, 17), cfg, ViscosityModel::carreau(1.0, 1.0), 1e-4, spec);
  const auto c = continuity_check(r.trajectory);
  CHECK(c.lipschitz > 0.0);
  CHECK(c.worst_ratio <= 1.0);
}

TEST_CASE("alpha_decay_fit synthetic series") {
  const auto lin = synthetic([](double t) { return std::pow(std::max(0.0, 1.0 - t), 2.0); }, 0.0, 1.5, 150);
  const auto f = alpha_decay_fit(lin, 0.5, 0.0, 0.99);
  CHECK(f.slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(alpha_decay_fit(lin, 0.25, 0.0, 0.99).r2 < f.r2);

  // e^-t on [0, 1]: regression of an exponential against t.
  const auto ex = synthetic([](double t) { return std::exp(-t); }, 0.0, 1.0, 100);
  const auto fe = alpha_decay_fit(ex, 1.0, 0.0, 1.0);
  CHECK(fe.r2 < 0.999);
  CHECK(fe.slope < 0.0);

  CHECK_THROWS_AS(alpha_decay_fit(lin, 0.5, 0.0, 0.05), DiagnosticError);
  const auto w = late_window(lin, 0.0, 0.5);
  CHECK(w.first == doctest::Approx(0.5));
  CHECK(w.second == doctest::Approx(0.95));
}

TEST_CASE("stopping_bound") {
  const auto lin = synthetic([](double t) { return std::pow(std::max(0.0, 1.0 - t), 2.0); }, 0.0, 1.5, 150);
  const auto f = alpha_decay_fit(lin, 0.5, 0.0, 0.99);
  const auto rep = stopping_bound(lin, 0.0, 0.5, f, detect_stopping(lin, 1e-10));
  CHECK(rep.T0_bound == doctest::Approx(1.0).epsilon(1e-12));
  REQUIRE(rep.T0_measured);
  CHECK(*rep.T0_measured == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.bound_ok);

  const auto ex = synthetic([](double t) { return std::exp(-t); }, 0.0, 5.0, 100);
  const auto re = stopping_bound(ex, 0.0, 1.0, alpha_decay_fit(ex, 1.0, 0.0, 5.0), detect_stopping(ex, 1e-10));
  CHECK_FALSE(re.T0_measured);
  CHECK(re.T0_bound > 0.0);

  DecayFit up;
  up.slope = 0.1;
  CHECK_THROWS_AS(stopping_bound(ex, 0.0, 1.0, up), DiagnosticError);

  StoppingEvent late{2.0, 0.0};
  CHECK_FALSE(stopping_bound(lin, 0.0, 0.5, f, late).bound_ok);
}

TEST_CASE("eps extrapolation") {
  const std::vector<std::pair<double, double>> t = {{1e-6, 2.0 + 3e-6}, {1e-7, 2.0 + 3e-7}, {1e-8, 2.0 + 3e-8}};
  CHECK(extrapolate_T0(t) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(monotone_in_eps(t));
  CHECK_FALSE(monotone_in_eps({{1e-6, 1.0}, {1e-7, 1.2}, {1e-8, 1.1}}));
  CHECK_THROWS_AS(extrapolate_T0({{1e-6, 1.0}}), DiagnosticError);
  CHECK_THROWS_AS(extrapolate_T0({{1e-6, 1.0}, {1e-6, 2.0}}), DiagnosticError);
}

TEST_CASE("convergence study: constant F control and validation") {
  RunSetup setup;
  setup.model = ViscosityModel::constant(1.0);
  setup.u0 = [](BasisPtr b) { return project_function(taylor_green(), b); };
  setup.integrator.t_end = 0.2;
  ForcingTerm f;
  f.xi = {1, 2, 0};
  f.amplitude = 0.5;
  setup.forcing.terms.push_back(f);
  const auto tab = convergence_study(setup, {1e-2, 1e-3, 1e-4}, {2, 3, 4}, 8, 2);
  for (const auto& row : tab.eps_diff)
    for (double d : row) CHECK(d == 0.0);
  CHECK(tab.eps_monotone);
  CHECK(tab.sample_times.size() == 9);

  CHECK_THROWS_AS(convergence_study(setup, {1e-2, 1e-3}, {2, 3, 4}), ConfigurationError);
  CHECK_THROWS_AS(convergence_study(setup, {1e-2, 1e-3, 1e-4}, {4}), ConfigurationError);
  CHECK_THROWS_AS(convergence_study(setup, {1e-4, 1e-3, 1e-2}, {2, 3, 4}), ConfigurationError);
}

TEST_CASE("l2l2_difference against a closed form") {
  const auto b = build_basis(2, 2);
  const auto i = *b->find({1, 0, 0}, Phase::cos);
  std::vector<double> times;
  std::vector<CoefficientVector> a, z;
  for (int k = 0; k <= 4; ++k) {
    times.push_back(0.25 * k);
    a.push_back(CoefficientVector::unit(b, i, 2.0));
    z.push_back(CoefficientVector::zeros(b));
  }
  // int_0^1 |2|^2 dt = 4.
  CHECK(l2l2_difference(a, z, times) == doctest::Approx(2.0).epsilon(1e-15));
  const auto fine = build_basis(2, 3);
  std::vector<CoefficientVector> af;
  for (const auto& c : a) af.push_back(CoefficientVector::unit(fine, *fine->find({1, 0, 0}, Phase::cos), 2.0));
  CHECK(l2l2_difference(a, af, times) == 0.0);
}

TEST_CASE("parallel_for and sweep threads") {
  std::vector<int> hit(50, 0);
  parallel_for(hit.size(), 3, [&](std::size_t i) { hit[i] += 1; });
  CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t i) {
                                 if (i == 4) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
  ::setenv("VISCO_THREADS", "3", 1);
  CHECK(sweep_threads() == 3);
  ::setenv("VISCO_THREADS", "zero", 1);
  CHECK(sweep_threads() >= 1);
  ::unsetenv("VISCO_THREADS");
}
