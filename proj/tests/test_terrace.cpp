#include <doctest.h>

#include <cmath>
#include <vector>

#include "tlab/config.hpp"
#include "tlab/evolve.hpp"
#include "tlab/terrace.hpp"

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

std::vector<LevelCrossing> synthetic(int n, double c, double L, double (*m)(int)) {
  std::vector<LevelCrossing> out;
  for (int j = 0; j < n; ++j) {
    LevelCrossing lc;
    lc.k = j;
    lc.tau = j * L / c + m(j);
    out.push_back(lc);
  }
  return out;
}

double late_increment(const std::vector<LevelCrossing>& cr, int count) {
  return (cr.back().tau - cr[cr.size() - 1 - count].tau) / count;
}

}  // namespace

TEST_SUITE("terrace") {
  TEST_CASE("kpp crossing increments") {
    const auto kpp = resolve_model("kpp", json::object());
    const Profile one = Profile::constant(1.0, 1.0, 64);
    const auto cr = crossing_times(kpp, one, 0.0, 0.5, -5.0, 40, 30.0, make_domain(-20, 80, 1.0 / 32));
    REQUIRE(cr.size() == 41);
    for (std::size_t k = 1; k < cr.size(); ++k) CHECK(cr[k].tau > cr[k - 1].tau);
    CHECK(late_increment(cr, 10) == doctest::Approx(0.5).epsilon(0.05));
  }

  TEST_CASE("shifted media share the front speed") {
    const auto m = resolve_model("periodic-kpp", json::object());
    const Profile one = Profile::constant(1.0, m.period(), 64);
    const auto d = make_domain(-20, 80, m.period() / 32);
    const auto a = crossing_times(m, one, 0.0, 0.5, -5.0, 40, 30.0, d);
    const auto b = crossing_times(m.shifted(0.37), one, 0.0, 0.5, -5.0, 40, 30.0, d);
    CHECK(late_increment(b, 10) == doctest::Approx(late_increment(a, 10)).epsilon(0.01));
  }

  TEST_CASE("drift estimates") {
    auto constant = synthetic(60, 2.0, 1.0, [](int) { return 0.3; });
    const auto dc = drift_estimate(constant, 2.0, 1.0);
    CHECK(dc.decaying);
    for (double v : dc.m) CHECK(v == doctest::Approx(0.3).epsilon(1e-12));

    auto harmonic = synthetic(60, 2.0, 1.0, [](int j) { return 0.2 * std::sin(0.7 * j); });
    CHECK(drift_estimate(harmonic, 2.0, 1.0).decaying);

    // Crossings at the wrong speed: m grows linearly.
    auto linear = synthetic(60, 2.0, 1.0, [](int j) { return 0.05 * j; });
    const auto dl = drift_estimate(linear, 2.0, 1.0);
    CHECK_FALSE(dl.decaying);
    CHECK(dl.tail_ratio == doctest::Approx(0.1).epsilon(1e-9));
  }

  TEST_CASE("synthetic classification") {
    CrossingData data;
    data.L = 1.0;
    data.dt = 0.01;
    data.alpha = 0.5;
    for (int k = 0; k < 30; ++k) {
      data.crossings.push_back({0.0, 0.5, k, 0.5 * k + 1.0});
      data.u_t.push_back(0.3);
      data.periodicity.push_back(0.2);
      data.flatness.push_back(0.3);
    }
    const auto w = classify_limit(data);
    CHECK(w.classification == WaveKind::pulsating_wave);
    CHECK(w.frame_speed_c == doctest::Approx(2.0));
    CHECK(w.tau_spread == doctest::Approx(0.0));

    auto flat = data;
    for (std::size_t k = 0; k < flat.u_t.size(); ++k) {
      flat.u_t[k] = 1e-9;
      flat.periodicity[k] = 1e-4;
      flat.flatness[k] = 1e-4;
    }
    CHECK(classify_limit(flat).classification == WaveKind::stationary);

    auto few = data;
    few.crossings.resize(5);
    CHECK(classify_limit(few).classification == WaveKind::undecided);

    auto jitter = data;
    for (std::size_t k = 0; k < jitter.crossings.size(); ++k) jitter.crossings[k].tau += (k % 2) * 0.05;
    CHECK(classify_limit(jitter).classification == WaveKind::undecided);
  }

  TEST_CASE("level at the intermediate state is stationary") {
    const auto m = resolve_model("tristable", json::object());
    const double theta = m.params()["theta"].get<double>();
    const Profile one = Profile::constant(1.0, 1.0, 64);
    const auto d = make_domain(-20, 120, 1.0 / 32);
    CrossingObserver obs(d, 0.0, 1.0, theta, 60, 1.0);
    Observer* list[] = {&obs};
    run(m, one, -5.0, d, 250.0, list);
    ClassifyOptions co;
    co.c_upper = 2.0;
    // The plateau at theta trails the faster lower front; late crossings sit on it.
    const auto w = classify_limit(obs.data(), co);
    CHECK(w.classification == WaveKind::stationary);
    REQUIRE(w.stationary_profile.size() > 0);
    CHECK(w.stationary_profile.max() == doctest::Approx(theta).epsilon(1e-2));
  }

  TEST_CASE("plateau detection") {
    const auto kpp = resolve_model("kpp", json::object());
    const Profile one = Profile::constant(1.0, 1.0, 64);
    const auto traj = run(kpp, one, -5.0, make_domain(-40, 80, 1.0 / 32), 20.0, {}, 0.0, RecordPolicy{1.0, {}});
    const auto found = detect_plateaus(traj, 20.0, 1.0);
    REQUIRE(found.size() >= 2);
    bool top = false, bottom = false;
    for (const auto& c : found) {
      CHECK(c.x_end - c.x_begin >= 3.0);
      top |= std::abs(c.max_value - 1.0) <= 1e-2 && c.x_end < 30.0;
      bottom |= c.max_value <= 1e-2 && c.x_begin > 25.0;
    }
    CHECK(top);
    CHECK(bottom);
  }

  TEST_CASE("assembled terraces") {
    const auto kpp = resolve_model("kpp", json::object());
    TerraceOptions o;
    o.t_final = 60.0;
    o.dx = 1.0 / 32;
    o.check_isolation = false;
    const auto rep = assemble(kpp, Profile::constant(1.0, 1.0, 64), o);
    CHECK(rep.complete);
    REQUIRE(rep.N() == 1);
    CHECK(rep.plateaus.size() == 2);
    CHECK(rep.plateaus.back().state.profile.max() == 0.0);
    CHECK(rep.speeds[0] == doctest::Approx(2.0).epsilon(0.03));

    const auto ac = resolve_model("bistable", json::object());
    o.t_final = 120.0;
    const auto two = assemble(ac, Profile::constant(1.0, 1.0, 64), o);
    CHECK(two.complete);
    REQUIRE(two.N() == 1);
    CHECK(two.speeds[0] == doctest::Approx(0.5 / std::sqrt(2.0)).epsilon(0.01));
    CHECK(two.verdicts.ordering_ok);
  }
}
