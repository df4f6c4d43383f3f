#include <doctest.h>

#include <cmath>
#include <random>

#include "tlab/config.hpp"
#include "tlab/error.hpp"
#include "tlab/reaction.hpp"

using namespace tlab;
using nlohmann::json;

TEST_SUITE("reaction") {
  TEST_CASE("closed forms") {
    const auto kpp = make_preset("kpp", json{{"r", 1.0}});
    CHECK(kpp.f(0.0, 0.5) == doctest::Approx(0.25).epsilon(1e-15));

    const auto ac = make_preset("allen_cahn", json{{"a", 0.25}});
    for (int i = 0; i < 50; ++i) CHECK(ac.f(0.37 * i - 5.0, 0.0) == 0.0);

    const auto per = make_preset("allen_cahn", json{{"a", {{"mean", 0.5}, {"amp", 0.3}}}});
    CHECK(per.f(0.25, 0.5) == doctest::Approx(-0.075).epsilon(1e-12));
    CHECK_FALSE(per.homogeneous());
  }

  TEST_CASE("lipschitz bound") {
    CHECK(make_preset("kpp", json::object()).lipschitz() == doctest::Approx(1.0).epsilon(1e-12));

    // Dense scan of f(u)/u on (0, 1] with step 1e-4.
    const auto ac = make_preset("allen_cahn", json{{"a", 0.25}});
    double oracle = 0.0;
    for (int j = 1; j <= 10000; ++j) {
      const double u = j * 1e-4;
      oracle = std::max(oracle, ac.f(0.0, u) / u);
    }
    CHECK(lipschitz_bound(ac, 1.0) == doctest::Approx(oracle).epsilon(1e-5));
    CHECK(oracle == doctest::Approx(0.140625).epsilon(1e-6));

    const auto zero = make_preset("custom", json{{"expr", "0*u"}});
    CHECK(zero.lipschitz() == doctest::Approx(1e-6));
  }

  TEST_CASE("validation of every preset") {
    for (const auto& p : preset_catalog()) {
      CAPTURE(p.name);
      const auto m = resolve_model(p.name, json::object());
      SamplingSpec spec;
      spec.random_probes = 1000;
      const auto rep = validate(m, spec);
      CHECK(rep.pass());
      CHECK(rep.find("periodicity")->violation <= 1e-12);
      CHECK(rep.find("f(.,0)!=0")->violation == 0.0);
      CHECK(rep.fd_order >= 1.9);
    }
  }

  TEST_CASE("planted faults") {
    const auto shifted = make_preset("custom", json{{"expr", "u*(1-u) + 0.01"}});
    const auto r1 = validate(shifted);
    CHECK_FALSE(r1.pass());
    CHECK(r1.find("f(.,0)!=0")->violation == doctest::Approx(0.01));

    const auto aperiodic = make_preset("custom", json{{"expr", "x*u*(1-u)"}});
    const auto r2 = validate(aperiodic);
    CHECK_FALSE(r2.find("periodicity")->pass());
  }

  TEST_CASE("parameter errors name the field") {
    try {
      make_preset("allen_cahn", json{{"a", 1.3}});
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.fields().front() == "a");
    }
    CHECK_THROWS_AS(make_preset("combustion", json::object()), ConfigError);
    CHECK_THROWS_AS(make_preset("nonsense", json::object()), ConfigError);
  }

  TEST_CASE("tristable pieces share the glue point") {
    const auto m = make_preset("tristable", json::object());
    const double th = m.params()["theta"].get<double>();
    CHECK(m.f(0.0, 0.0) == 0.0);
    CHECK(std::abs(m.f(0.0, th)) <= 1e-15);
    CHECK(std::abs(m.f(0.0, 1.0)) <= 1e-15);
    CHECK(m.f_u(0.0, th - 1e-9) == doctest::Approx(m.f_u(0.0, th + 1e-9)).epsilon(1e-6));
  }

  TEST_CASE("derivative against centered differences") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ux(0.0, 1.0);
    for (const auto& p : preset_catalog()) {
      const auto m = resolve_model(p.name, json::object());
      for (int k = 0; k < 200; ++k) {
        const double x = ux(rng), u = 0.02 + 0.96 * ux(rng);
        const double h = 1e-5;
        const double fd = (m.f(x, u + h) - m.f(x, u - h)) / (2 * h);
        // Kinks of the glued presets sit exactly at theta; skip a thin band.
        if (std::abs(u - 0.5) < 1e-4 || std::abs(u - 0.3) < 1e-4) continue;
        CHECK(m.f_u(x, u) == doctest::Approx(fd).epsilon(1e-6));
      }
    }
  }
}
