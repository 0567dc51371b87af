#include <doctest.h>

#include <cmath>
#include <fstream>
#include <filesystem>
#include <functional>

#include "visco/errors.hpp"
#include "visco/viscosity.hpp"

using namespace visco;

namespace {

// Composite Simpson on [0, t] with n panels; independent of the library quadrature.
double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

bool has_witness(const ConditionReport& r, const std::string& c) {
  for (const auto& w : r.witnesses)
    if (w.condition == c) return true;
  return false;
}

}  // namespace

TEST_CASE("eval_F closed forms") {
  CHECK(eval_F(ViscosityModel::power_law(1.0), 2.0) == doctest::Approx(0.5));
  CHECK(eval_F(ViscosityModel::carreau(1.0, 1.0), 0.0) == doctest::Approx(1.0));
  CHECK(eval_F(ViscosityModel::cross(2.0, 1.0), 1.0) == doctest::Approx(3.0));
  CHECK_THROWS_AS(eval_F(ViscosityModel::power_law(1.0), 0.0), DomainError);
  CHECK_THROWS_AS(eval_F(ViscosityModel::power_law(1.0), -1.0), DomainError);
}

TEST_CASE("eval_Gprime") {
  const auto pl = ViscosityModel::power_law(1.0);
  CHECK(eval_Gprime(pl, 5.0, 0.0) == doctest::Approx(1.0));
  CHECK(eval_Gprime(pl, 1.0, 1.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  for (const auto& [name, m] : model_catalog()) CHECK(eval_Gprime(m, 0.0, 1.0) == 0.0);
  CHECK_THROWS_AS(eval_Gprime(pl, 0.0, 0.0), DomainError);
}

TEST_CASE("eval_G examples") {
  CHECK(eval_G(ViscosityModel::power_law(1.0), 3.0, 0.0) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(eval_G(ViscosityModel::carreau(1.0, 1.0), 1.0, 0.0) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-14));
  CHECK(eval_G(ViscosityModel::power_law(1.0), 1.0, 1.0) == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-14));
  CHECK(eval_G(ViscosityModel::cross(1.0, 1.0), 2.0, 0.0) == doctest::Approx(4.0).epsilon(1e-14));
  for (const auto& [name, m] : model_catalog()) CHECK(eval_G(m, 0.0, 1e-4) == 0.0);
}

TEST_CASE("closed-form G agrees with quadrature of G'") {
  const std::vector<ViscosityModel> models{ViscosityModel::power_law(0.5), ViscosityModel::power_law(1.0),
                                           ViscosityModel::carreau(1.0, 1.0), ViscosityModel::cross(1.0, 1.0),
                                           ViscosityModel::constant(2.0)};
  for (const auto& m : models) {
    for (double eps : {1e-4, 1e-2, 1.0}) {
      for (double t : {1e-3, 0.1, 1.0, 7.5}) {
        const double closed = eval_G(m, t, eps);
        const double quad = integrate_Gprime(m, t, eps);
        CHECK(std::abs(closed - quad) <= std::max(1e-10, 1e-8 * std::abs(closed)));
        // Independent Simpson oracle after s = sqrt(eps) sinh(u), which smooths the sqrt(eps) layer.
        const double r = std::sqrt(eps);
        const double simp = simpson([&](double u) { return r * std::sinh(u) * eval_F(m, r * std::cosh(u)) * r * std::cosh(u); },
                                    0.0, std::asinh(t / r), 2000);
        CHECK(closed == doctest::Approx(simp).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("log_power G by quadrature matches Simpson across the kink") {
  const auto m = ViscosityModel::log_power(0.5, 0.25, 0.5);
  for (double t : {0.2, 0.5, 2.0}) {
    const double g = eval_G(m, t, 1e-2);
    const double kink = std::sqrt(0.25 - 1e-2);
    auto f = [&](double s) { return s * eval_F(m, std::sqrt(1e-2 + s * s)); };
    const double simp = t <= kink ? simpson(f, 0.0, t, 4000) : simpson(f, 0.0, kink, 4000) + simpson(f, kink, t, 4000);
    CHECK(g == doctest::Approx(simp).epsilon(1e-8));
  }
}

TEST_CASE("G is convex and G' non-decreasing for catalog models") {
  const auto grid = log_grid(1e-3, 1e2, 60);
  for (const auto& [name, m] : model_catalog()) {
    for (double eps : {0.0, 1e-4, 1e-2}) {
      double prev = -1.0;
      for (double t : grid) {
        const double gp = eval_Gprime(m, t, eps);
        CHECK(gp >= prev - 1e-12 * std::abs(gp));
        prev = gp;
        const double h = 1e-4 * t;
        const double second = (eval_G(m, t + h, eps) - 2.0 * eval_G(m, t, eps) + eval_G(m, t - h, eps)) / (h * h);
        // Second difference noise scales like G(t) * machine eps / h^2.
        const double tol = 1e-6 * std::max(1.0, eval_G(m, t, eps) / (t * t)) + 64.0 * 2.2e-16 * eval_G(m, t, eps) / (h * h);
        CHECK_MESSAGE(second >= -tol, name, " eps=", eps, " t=", t);
      }
    }
  }
}

TEST_CASE("check_conditions on the catalog") {
  const auto grid = log_grid();
  for (const auto& [name, m] : model_catalog()) {
    const auto r = check_conditions(m, grid);
    CHECK_MESSAGE(r.all_passed(), name);
    CHECK(r.witnesses.empty());
  }
}

TEST_CASE("check_conditions negative controls") {
  const auto grid = log_grid();
  const auto bad = check_conditions(ViscosityModel::power_law(1.5), grid);
  CHECK_FALSE(bad.c3);
  CHECK(has_witness(bad, "C3"));

  const auto tg = log_grid(1e-7, 1e4, 200);
  std::vector<double> F;
  for (double t : tg) F.push_back(1.0 + t);
  const auto table = std::make_shared<const TabulatedLaw>(tg, F);
  const auto r = check_conditions(ViscosityModel::tabulated(table), grid);
  CHECK_FALSE(r.c4);
  CHECK(r.c1);
  CHECK(r.c3);
  CHECK(has_witness(r, "C4"));
}

TEST_CASE("check_conditions rejects bad grids and beta") {
  const auto m = ViscosityModel::power_law(1.0);
  CHECK_THROWS_AS(check_conditions(m, std::vector<double>{}), ParameterError);
  CHECK_THROWS_AS(check_conditions(m, log_grid(1e-3, 1e3)), ParameterError);
  CHECK_THROWS_AS(check_conditions(m, log_grid(), 0.7), ParameterError);
}

TEST_CASE("tabulated law interpolates and keeps tF monotone") {
  const auto tg = log_grid(1e-6, 1e3, 40);
  std::vector<double> F;
  for (double t : tg) F.push_back(std::pow(1.0 + t * t, -0.25));
  const TabulatedLaw law(tg, F);
  for (double t : {1e-5, 0.3, 2.0, 500.0}) CHECK(law(t) == doctest::Approx(std::pow(1.0 + t * t, -0.25)).epsilon(1e-3));
  const auto fine = log_grid(1e-7, 1e4, 2000);
  double prev = 0.0;
  for (double t : fine) {
    const double v = t * law(t);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK_THROWS_AS(TabulatedLaw({1.0, 1.0}, {1.0, 2.0}), ParameterError);
}

TEST_CASE("tabulated law loads from CSV") {
  const auto path = std::filesystem::temp_directory_path() / "visco_table_test.csv";
  {
    std::ofstream out(path);
    out << "t,F\n0.5,2\n1,1\n2,0.5\n4,0.25\n";
  }
  const auto law = load_tabulated_law(path.string());
  CHECK(law->size() == 4);
  CHECK((*law)(1.0) == doctest::Approx(1.0));
  CHECK((*law)(3.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  std::filesystem::remove(path);
}

TEST_CASE("theta_for_power_law") {
  CHECK(theta_for_power_law(1.0) == 1.0);
  CHECK(theta_for_power_law(0.5) == doctest::Approx(4.0 / 9.0).epsilon(1e-15));
  CHECK(theta_for_power_law(0.9) == doctest::Approx(std::pow(1.1, -10.0)).epsilon(1e-14));
  CHECK_THROWS_AS(theta_for_power_law(0.0), DomainError);
  CHECK_THROWS_AS(theta_for_power_law(1.2), DomainError);
  for (double alpha : {0.3, 0.5, 0.9, 1.0}) {
    const auto m = ViscosityModel::power_law(alpha);
    const double th = theta_for_power_law(alpha);
    for (double t : log_grid(1e-3, 1e3, 25)) {
      const double lhs = eval_G(m, t, 0.0);
      const double rhs = th * t * t * eval_F(m, th * t);
      CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, t * t));
    }
  }
}

TEST_CASE("make_model parameters") {
  const auto m = make_model("carreau", {{"mu", 2.0}, {"alpha", 0.5}});
  CHECK(m.kind == ViscosityKind::carreau);
  CHECK(m.mu == 2.0);
  CHECK(m.alpha == 0.5);
  CHECK_THROWS_AS(make_model("nope"), ParameterError);
  CHECK_THROWS_AS(make_model("carreau", {{"zeta", 1.0}}), ParameterError);
  CHECK(make_model("bingham").alpha == 1.0);
}

TEST_CASE("lower bound check") {
  const auto grid = log_grid();
  CHECK(check_lower_bound(ViscosityModel::power_law(1.0), grid).empty());
  CHECK_FALSE(check_lower_bound(ViscosityModel::carreau(1.0, 1.0), grid).empty());
}
