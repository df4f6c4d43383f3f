#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "tlab/config.hpp"
#include "tlab/error.hpp"
#include "tlab/evolve.hpp"

using namespace tlab;
using nlohmann::json;

namespace {

Domain make_domain(double lo, double hi, double dx) {
  Domain d;
  d.x_left = lo;
  d.x_right = hi;
  d.dx = dx;
  return d;
}

/// Rightmost x with u >= level, linearly interpolated.
double level_position(const Profile& u, double level) {
  for (std::size_t i = u.size() - 1; i > 0; --i)
    if (u[i - 1] >= level && u[i] < level) return u.x(i - 1) + u.dx * (u[i - 1] - level) / (u[i - 1] - u[i]);
  return u.x(0);
}

/// Random piecewise-linear field in [0, 1] with fixed ends.
std::vector<double> random_field(std::mt19937_64& rng, const Domain& d, double left, double right) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int knots = 6;
  std::vector<double> kv(knots + 1);
  for (auto& v : kv) v = U(rng);
  kv.front() = left;
  kv.back() = right;
  std::vector<double> u(d.nodes());
  const double span = d.x_right - d.x_left;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double s = (d.x(i) - d.x_left) / span * knots;
    const int k = std::min(knots - 1, static_cast<int>(s));
    u[i] = kv[k] + (s - k) * (kv[k + 1] - kv[k]);
  }
  return u;
}

}  // namespace

TEST_SUITE("evolve") {
  TEST_CASE("heaviside data") {
    const Profile one = Profile::constant(1.0, 1.0, 64);
    const auto d = make_domain(-20, 20, 1.0 / 64);
    const auto u0 = make_initial(one, 0.0, d);
    CHECK(u0[d.index_of(0.0)] == 1.0);
    CHECK(u0[d.index_of(0.0) + 1] == 0.0);
    CHECK_THROWS_AS(make_initial(one, 15.0, d), ConfigError);
  }

  TEST_CASE("constants are preserved without reaction") {
    const auto zero = make_preset("custom", json{{"expr", "0*u"}});
    const auto d = make_domain(-5, 5, 1.0 / 32);
    std::vector<double> u(d.nodes(), 0.4);
    for (int s = 0; s < 500; ++s) imex_step(zero, d, 0.01, u);
    for (double v : u) CHECK(v == doctest::Approx(0.4).epsilon(1e-13));
  }

  TEST_CASE("heat kernel") {
    const auto zero = make_preset("custom", json{{"expr", "0*u"}});
    const Profile one = Profile::constant(1.0, 1.0, 64);
    const auto d = make_domain(-20, 20, 1.0 / 64);
    const auto traj = run(zero, one, 0.0, d, 1.0, {}, 1e-3, RecordPolicy{1.0, {}});
    const auto& u = traj.snapshots.back();
    CHECK(u.t == doctest::Approx(1.0));
    double err = 0.0;
    for (std::size_t i = 0; i < u.field.size(); ++i) {
      const double x = u.field.x(i);
      // Heaviside with H(0) = 1 sits half a cell to the right of the node at 0.
      err = std::max(err, std::abs(u.field[i] - 0.5 * std::erfc((x - 0.5 * d.dx) / 2.0)));
    }
    CHECK(err <= 1e-3);
  }

  TEST_CASE("kpp front speed") {
    const auto kpp = resolve_model("kpp", json::object());
    const Profile one = Profile::constant(1.0, 1.0, 64);
    const auto d = make_domain(-20, 160, 1.0 / 64);
    const auto traj = run(kpp, one, -5.0, d, 60.0, {}, 0.0, RecordPolicy{0.0, {40.0, 60.0}});
    REQUIRE(traj.snapshots.size() == 2);
    const auto& s40 = traj.snapshots[traj.snapshots.size() - 2];
    const auto& s60 = traj.snapshots.back();
    const double c = (level_position(s60.field, 0.5) - level_position(s40.field, 0.5)) / (s60.t - s40.t);
    CHECK(c == doctest::Approx(2.0).epsilon(0.03));
  }

  TEST_CASE("comparison on random ordered pairs") {
    const auto m = resolve_model("periodic-allen-cahn", json::object());
    const auto d = make_domain(-10, 10, 1.0 / 32);
    const double dt = default_dt(m, 1.0);
    std::mt19937_64 rng(99);
    double worst = 0.0;
    for (int pair = 0; pair < 50; ++pair) {
      auto u = random_field(rng, d, 1.0, 0.0);
      auto v = random_field(rng, d, 1.0, 0.0);
      for (std::size_t i = 0; i < u.size(); ++i) v[i] = std::max(u[i], v[i]);
      for (int s = 0; s < 300; ++s) {
        imex_step(m, d, dt, u);
        imex_step(m, d, dt, v);
      }
      for (std::size_t i = 0; i < u.size(); ++i) worst = std::max(worst, u[i] - v[i]);
    }
    CHECK(worst <= 0.0);
  }

  TEST_CASE("shift identity") {
    const auto m = resolve_model("periodic-kpp", json::object());
    const double L = m.period();
    const Profile one = Profile::constant(1.0, L, 64);
    const auto d = make_domain(-30, 60, L / 64);
    const auto a = run(m, one, 0.0, d, 10.0, {}, 0.005, RecordPolicy{0.0, {10.0}});
    const auto b = run(m, one, -L, d, 10.0, {}, 0.005, RecordPolicy{0.0, {10.0}});
    const auto& ua = a.snapshots.back().field;
    const auto& ub = b.snapshots.back().field;
    const std::size_t M = 64;
    double err = 0.0;
    for (std::size_t i = 0; i + M < ua.size(); ++i) {
      const double x = ua.x(i);
      if (x < d.x_left + 10 * L || x > d.x_right - 10 * L) continue;
      err = std::max(err, std::abs(ub[i] - ua[i + M]));
    }
    CHECK(err <= 1e-8);
  }

  TEST_CASE("solutions stay between 0 and the roof") {
    const auto m = resolve_model("periodic-allen-cahn", json::object());
    const Profile one = Profile::constant(1.0, m.period(), 64);
    const auto d = make_domain(-20, 40, m.period() / 64);
    const auto traj = run(m, one, 0.0, d, 20.0, {}, 0.0, RecordPolicy{1.0, {}});
    for (const auto& s : traj.snapshots) {
      CHECK(s.field.min() >= 0.0);
      CHECK(s.field.max() <= 1.0 + 1e-12);
    }
  }

  TEST_CASE("spreading monitor") {
    const auto kpp = resolve_model("kpp", json::object());
    const Profile one = Profile::constant(1.0, 1.0, 64);
    const auto d = make_domain(-80, 200, 1.0 / 32);
    const auto traj = run(kpp, one, -5.0, d, 60.0, {}, 0.0, RecordPolicy{0.5, {}});
    const auto rep = spreading_monitor(traj, kpp, one);
    CHECK(rep.pass);
    CHECK(rep.c_upper_bound == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(rep.c_lower_emp > 1.8);
    CHECK(rep.supersolution_excess <= 1e-8);

    // Without reaction the supersolution is flat and the bound holds trivially.
    const auto zero = make_preset("custom", json{{"expr", "0*u"}});
    const auto heat = run(zero, one, -5.0, d, 20.0, {}, 0.0, RecordPolicy{0.5, {}});
    CHECK(spreading_monitor(heat, zero, one).supersolution_excess <= 1e-8);
  }

  TEST_CASE("time step above the monotone limit is rejected") {
    const auto kpp = resolve_model("kpp", json::object());
    const Profile one = Profile::constant(1.0, 1.0, 64);
    const auto d = make_domain(-20, 20, 1.0 / 64);
    const double limit = max_monotone_dt(kpp, 0.0, 1.0);
    CHECK(limit == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(default_dt(kpp, 1.0) <= 0.5 * limit + 1e-12);
    try {
      Simulation sim(kpp, one, d, 1.5 * limit, make_initial(one, 0.0, d));
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.fields().front() == "dt");
    }
  }

  TEST_CASE("bump invasion") {
    const auto kpp = resolve_model("kpp", json::object());
    const Profile one = Profile::constant(1.0, 1.0, 64);
    const auto rep = bump_invasion_check(kpp, one, 3.0, 30.0, 10.0);
    CHECK(rep.holds);
    // A small bump of bistable type dies out.
    const auto ac = resolve_model("bistable", json::object());
    CHECK_FALSE(bump_invasion_check(ac, one, 0.2, 30.0, 5.0).holds);
  }
}
