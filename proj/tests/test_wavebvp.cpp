#include <doctest.h>

#include <cmath>
#include <numbers>

#include "tlab/config.hpp"
#include "tlab/error.hpp"
#include "tlab/stationary.hpp"
#include "tlab/wavebvp.hpp"

using namespace tlab;
using nlohmann::json;

namespace {

double bistable_speed(double a) { return (1.0 - 2.0 * a) / std::numbers::sqrt2; }

StationaryState constant_state(const ReactionModel& m, double v) {
  return solve_periodic(m, Profile::constant(v, m.period(), 64));
}

}  // namespace

TEST_SUITE("wavebvp") {
  TEST_CASE("shooting matches the closed form") {
    for (double a : {0.1, 0.25, 0.4}) {
      CAPTURE(a);
      const auto m = make_preset("allen_cahn", json{{"a", a}});
      const auto s = homogeneous_shoot(m, 0.0, 1.0);
      CHECK(std::abs(s.c - bistable_speed(a)) <= 1e-6);
      // Exact front 1 / (1 + exp(z / sqrt 2)), centered at the half level.
      double err = 0.0;
      for (std::size_t i = 0; i < s.profile.size(); ++i) {
        const double z = s.profile.x(i);
        if (std::abs(z) > 15) continue;
        err = std::max(err, std::abs(s.profile[i] - 1.0 / (1.0 + std::exp(z / std::numbers::sqrt2))));
      }
      CHECK(err <= 1e-3);
    }
    const auto balanced = make_preset("allen_cahn", json{{"a", 0.5}});
    CHECK(std::abs(homogeneous_shoot(balanced, 0.0, 1.0).c) <= 1e-6);
    CHECK_THROWS_AS(homogeneous_shoot(balanced, 1.0, 0.0), ConfigError);
  }

  TEST_CASE("tristable pieces are ordered") {
    const auto m = resolve_model("tristable", json::object());
    const double theta = m.params()["theta"].get<double>();
    const double lower = homogeneous_shoot(m, 0.0, theta).c;
    const double upper = homogeneous_shoot(m, theta, 1.0).c;
    CHECK(lower > upper);
    CHECK(upper > 0.0);
  }

  TEST_CASE("strip solver in a homogeneous medium") {
    const auto m = resolve_model("bistable", json::object());
    WaveOptions o;
    o.c_guess = 0.3;
    const auto w = solve_pulsating(m, constant_state(m, 0.0), constant_state(m, 1.0), o);
    CHECK(w.speed_c == doctest::Approx(bistable_speed(0.25)).epsilon(1e-3));
    CHECK(homogeneous_reduction_residual(w) <= 1e-3);
    CHECK(w.monotonicity_defect <= 1e-8);
    CHECK(w.strip_residual <= 1e-8);
    CHECK(strip_residual(m, w) == doctest::Approx(w.strip_residual).epsilon(1e-6));
  }

  TEST_CASE("pulsating front in a periodic medium") {
    const auto m = make_preset("allen_cahn", json{{"a", {{"mean", 0.3}, {"amp", 0.1}}}});
    const auto lo = constant_state(m, 0.0), hi = constant_state(m, 1.0);
    WaveOptions o;
    o.c_guess = 0.25;
    const auto w = solve_pulsating(m, lo, hi, o);
    CHECK(w.speed_c > 0.0);
    CHECK(w.period_T == doctest::Approx(m.period() / w.speed_c));
    CHECK(w.monotonicity_defect <= 1e-8);
    CHECK(homogeneous_reduction_residual(w) > 1e-4);  // genuinely x-dependent

    const double rec = pulsating_recurrence_residual(w);
    CHECK(rec <= 1e-2);
    // The wrong speed breaks the recurrence by an order of magnitude.
    CHECK(pulsating_recurrence_residual(w, 1.1 * w.speed_c) >= 10 * rec);

    // Different seeds land on the same speed.
    WaveOptions wide = o;
    wide.seed_width = 4.0;
    wide.c_guess = 0.15;
    const auto w2 = solve_pulsating(m, lo, hi, wide);
    CHECK(std::abs(w2.speed_c - w.speed_c) <= 1e-4);
  }

  TEST_CASE("column values clamp to the end states") {
    const auto m = resolve_model("bistable", json::object());
    const auto w = solve_pulsating(m, constant_state(m, 0.0), constant_state(m, 1.0));
    CHECK(w.column_value(w.z_min - 100.0, 0) == doctest::Approx(1.0));
    CHECK(w.column_value(w.z(w.nz - 1) + 100.0, 0) == doctest::Approx(0.0));
    CHECK(w.column_value(0.0, 0) == doctest::Approx(0.5).epsilon(1e-6));
  }
}
