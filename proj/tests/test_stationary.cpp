#include <doctest.h>

#include <cmath>
#include <string>

#include "tlab/config.hpp"
#include "tlab/eigen.hpp"
#include "tlab/evolve.hpp"
#include "tlab/stationary.hpp"

using namespace tlab;
using nlohmann::json;

namespace {

/// Max deviation from the start after evolving a periodic state for time T on
/// a block of periods, measured on the middle period.
double drift_under_flow(const ReactionModel& m, const Profile& q, double T) {
  const double L = m.period();
  Domain d;
  d.dx = q.dx;
  d.x_left = -20 * L;
  d.x_right = 20 * L;
  std::vector<double> u(d.nodes());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = q.at(d.x(i));
  const double dt = default_dt(m, q.max());
  const long steps = std::lround(T / dt);
  for (long s = 0; s < steps; ++s) imex_step(m, d, dt, u);
  double err = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (std::abs(d.x(i)) <= L) err = std::max(err, std::abs(u[i] - q.at(d.x(i))));
  return err;
}

std::vector<double> scan_roots(const ReactionModel& m, double step) {
  std::vector<double> roots{0.0};
  double prev = m.f(0.0, step);
  const int n = static_cast<int>(std::lround(1.0 / step));
  for (int j = 2; j <= n; ++j) {
    const double u = j * step;
    const double cur = m.f(0.0, u);
    if (cur == 0.0) {
      roots.push_back(u);
    } else if ((prev > 0) != (cur > 0) && prev != 0.0) {
      roots.push_back(u - 0.5 * step);
    }
    prev = cur;
  }
  return roots;
}

}  // namespace

TEST_SUITE("stationary") {
  TEST_CASE("constant roofs") {
    const auto kpp = resolve_model("kpp", json::object());
    auto s = solve_periodic(kpp, Profile::constant(0.9, 1.0, 64));
    CHECK(s.residual <= 1e-12);
    for (double v : s.profile.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));

    const auto per = resolve_model("periodic-allen-cahn", json::object());
    auto one = solve_periodic(per, Profile::constant(1.0, 1.0, 64));
    for (double v : one.profile.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(one.stability.below == Verdict::stable);
  }

  TEST_CASE("nonconstant intermediate state in a periodic medium") {
    const auto per = resolve_model("allen_cahn", json{{"a", {{"mean", 0.5}, {"amp", 0.3}}}});
    const double tol = 1e-10;
    auto q = solve_periodic(per, Profile::constant(0.5, 1.0, 64), tol);
    CHECK(q.residual <= tol);
    CHECK(q.profile.max() - q.profile.min() > 1e-3);
    CHECK(q.stability.mu0 < 0);  // unstable from both sides
    // The flow leaves it in place to within the instability's amplification.
    CHECK(drift_under_flow(per, q.profile, 1.0) <= 10 * tol);
  }

  TEST_CASE("constant states of homogeneous presets") {
    const auto kpp = resolve_model("kpp", json::object());
    auto ks = enumerate_constant_states(kpp, 1.0);
    REQUIRE(ks.size() == 2);
    CHECK(ks[0].profile.max() == 0.0);
    CHECK(ks[0].stability.above == Verdict::unstable);
    CHECK(ks[1].profile.max() == doctest::Approx(1.0));
    CHECK(ks[1].stability.below == Verdict::stable);

    const auto ac = resolve_model("bistable", json::object());
    auto as = enumerate_constant_states(ac, 1.0);
    REQUIRE(as.size() == 3);
    CHECK(as[1].profile.max() == doctest::Approx(0.25).epsilon(1e-10));

    const auto tri = resolve_model("tristable", json{{"a2", 0.7}});
    auto ts = enumerate_constant_states(tri, 1.0);
    const auto planted = tri.params()["roots"].get<std::vector<double>>();
    REQUIRE(ts.size() == planted.size());
    for (std::size_t k = 0; k < ts.size(); ++k) CHECK(ts[k].profile.max() == doctest::Approx(planted[k]).epsilon(1e-10));

    const auto comb = resolve_model("combustion", json::object());
    auto cs = enumerate_constant_states(comb, 1.0);
    REQUIRE(cs.size() == 3);
    CHECK(cs[1].profile.max() == doctest::Approx(0.3).epsilon(1e-10));
  }

  TEST_CASE("enumeration agrees with a dense scan") {
    for (std::string name : {"kpp", "bistable", "tristable", "stacked"}) {
      CAPTURE(name);
      const auto m = resolve_model(name, json::object());
      const auto scan = scan_roots(m, 1e-5);
      const auto states = enumerate_constant_states(m, 1.0);
      REQUIRE(states.size() == scan.size());
      for (std::size_t k = 0; k < scan.size(); ++k) CHECK(std::abs(states[k].profile.max() - scan[k]) <= 1e-5);
    }
  }

  TEST_CASE("mu0 matches the eigen module") {
    for (std::string name : {"kpp", "bistable", "tristable", "periodic-allen-cahn"}) {
      CAPTURE(name);
      const auto m = resolve_model(name, json::object());
      for (const auto& s : {solve_periodic(m, Profile::constant(1.0, 1.0, 64))}) {
        const double direct = principal_eigenvalue(m, s.profile, 0.0).mu;
        CHECK(s.stability.mu0 == doctest::Approx(direct).epsilon(1e-8));
      }
    }
    const auto tri = resolve_model("tristable", json::object());
    for (const auto& s : enumerate_constant_states(tri, 1.0)) {
      const double direct = principal_eigenvalue(tri, s.profile, 0.0).mu;
      CHECK(std::abs(s.stability.mu0 - direct) <= 1e-8);
    }
  }

  TEST_CASE("isolation") {
    const auto ac = resolve_model("bistable", json::object());
    auto one = solve_periodic(ac, Profile::constant(1.0, 1.0, 64));
    CHECK(is_isolated_below(one, ac).verdict == Isolation::isolated);

    const auto kpp = resolve_model("kpp", json::object());
    auto k1 = solve_periodic(kpp, Profile::constant(1.0, 1.0, 64));
    CHECK(is_isolated_below(k1, kpp).verdict == Isolation::isolated);

    const auto comb = resolve_model("combustion", json::object());
    auto states = enumerate_constant_states(comb, 1.0);
    CHECK(is_isolated_below(states[1], comb).verdict == Isolation::accumulation_suspected);
  }
}
