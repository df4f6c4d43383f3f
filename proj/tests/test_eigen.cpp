#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "tlab/config.hpp"
#include "tlab/eigen.hpp"

using namespace tlab;
using nlohmann::json;

namespace {

Profile zero_base(const ReactionModel& m, std::size_t n = 128) { return Profile::constant(0.0, m.period(), n); }

}  // namespace

TEST_SUITE("eigen") {
  TEST_CASE("homogeneous closed forms") {
    const auto kpp = resolve_model("kpp", json::object());
    const auto at_one = principal_eigenvalue(kpp, Profile::constant(1.0, 1.0, 64), 0.0);
    CHECK(at_one.mu == doctest::Approx(1.0).epsilon(1e-10));
    const auto at_zero = principal_eigenvalue(kpp, Profile::constant(0.0, 1.0, 64), 0.7);
    CHECK(at_zero.mu == doctest::Approx(-1.0).epsilon(1e-10));
    for (double v : at_zero.eigenfunction.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-8));
  }

  TEST_CASE("direct and variational agree in a periodic medium") {
    const auto per = resolve_model("periodic-allen-cahn", json::object());
    const auto base = zero_base(per);
    for (double lambda : {0.0, 0.3, 0.8}) {
      CAPTURE(lambda);
      const double direct = principal_eigenvalue(per, base, lambda).mu;
      const auto var = nadin_variational(per, base, lambda);
      CHECK(std::abs(direct - var.mu) <= 1e-4);
      CHECK_FALSE(var.floor_active);
    }
  }

  TEST_CASE("quotient at a constant test function") {
    // eta = 1 makes the lambda term vanish and leaves -mean(V).
    std::vector<double> eta(100, 1.0), V(100);
    for (std::size_t i = 0; i < V.size(); ++i) V[i] = std::sin(0.0628 * i) + 0.5;
    double mean = 0.0;
    for (double v : V) mean += v;
    mean /= static_cast<double>(V.size());
    CHECK(nadin_quotient(eta, V, 0.01, 0.9) == doctest::Approx(-mean).epsilon(1e-12));
  }

  TEST_CASE("eigenfunction positivity and evenness in lambda") {
    for (std::string name : {"periodic-kpp", "periodic-allen-cahn"}) {
      CAPTURE(name);
      const auto m = resolve_model(name, json::object());
      const auto base = zero_base(m);
      for (double lambda : {0.2, 0.6, 1.5}) {
        const auto plus = principal_eigenvalue(m, base, lambda);
        const auto minus = principal_eigenvalue(m, base, -lambda);
        CHECK(plus.mu == doctest::Approx(minus.mu).epsilon(1e-9));
        CHECK(plus.eigenfunction.min() > 0.0);
        CHECK(plus.eigenfunction.max() == doctest::Approx(1.0));
      }
    }
  }

  TEST_CASE("second-order convergence under grid refinement") {
    const auto m = resolve_model("periodic-kpp", json::object());
    const double ref = principal_eigenvalue(m, zero_base(m, 1024), 0.5).mu;
    const double e32 = std::abs(principal_eigenvalue(m, zero_base(m, 32), 0.5).mu - ref);
    const double e64 = std::abs(principal_eigenvalue(m, zero_base(m, 64), 0.5).mu - ref);
    CHECK(std::log2(e32 / e64) >= 1.9);
  }

  TEST_CASE("curvature fit") {
    std::vector<double> lambdas, quadratic, quartic;
    for (int k = -4; k <= 4; ++k) {
      const double l = 0.05 * k;
      lambdas.push_back(l);
      quadratic.push_back(-0.3 + 0.7 * l * l);
      quartic.push_back(-0.3 + l * l * l * l);
    }
    const auto good = fit_curvature(lambdas, quadratic);
    CHECK(good.pass);
    CHECK(good.c2 == doctest::Approx(0.7).epsilon(1e-10));
    CHECK_FALSE(fit_curvature(lambdas, quartic).pass);

    const auto per = resolve_model("periodic-allen-cahn", json::object());
    const auto fit = mu_curvature_check(per, zero_base(per), lambdas);
    CHECK(fit.pass);
    CHECK(fit.c2 > 0.0);
  }

  TEST_CASE("dirichlet eigenvalues") {
    const double pi = std::numbers::pi;
    const auto flat = make_preset("custom", json{{"expr", "0*u"}});
    const auto base = zero_base(flat, 64);
    CHECK(dirichlet_eigenvalue(flat, base, pi / 2).mu == doctest::Approx(1.0).epsilon(1e-3));

    const auto linear = make_preset("custom", json{{"expr", "0.3*u"}});
    for (double R : {1.0, 3.0}) {
      const double expected = std::pow(pi / (2 * R), 2) - 0.3;
      CHECK(dirichlet_eigenvalue(linear, base, R).mu == doctest::Approx(expected).epsilon(1e-3));
    }

    const auto per = resolve_model("periodic-kpp", json::object());
    double prev = 1e300;
    for (double R : {1.0, 2.0, 4.0, 8.0, 16.0}) {
      const auto e = dirichlet_eigenvalue(per, zero_base(per), R);
      CHECK(e.mu < prev);
      CHECK(e.eigenfunction.min() >= 0.0);
      prev = e.mu;
    }
  }

  TEST_CASE("linear spreading speed") {
    CHECK(linear_spreading_speed(resolve_model("kpp", json::object())).c_star_linear ==
          doctest::Approx(2.0).epsilon(1e-6));
    CHECK(linear_spreading_speed(make_preset("custom", json{{"expr", "4*u*(1-u)"}})).c_star_linear ==
          doctest::Approx(4.0).epsilon(1e-6));
    // A periodic medium can only be faster than its mean would suggest.
    const auto s = linear_spreading_speed(resolve_model("periodic-kpp", json::object()));
    CHECK(s.determinate);
    CHECK(s.c_star_linear >= 2.0 - 1e-9);
    CHECK(s.lambda_star > 0.0);
  }
}
