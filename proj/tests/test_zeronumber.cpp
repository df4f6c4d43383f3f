#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "tlab/config.hpp"
#include "tlab/evolve.hpp"
#include "tlab/zeronumber.hpp"

using namespace tlab;
using nlohmann::json;

namespace {

std::vector<double> sample(double (*fn)(double), double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = fn(lo + (hi - lo) * i / (n - 1));
  return v;
}

/// Brute-force embedding test: try every increasing choice of positions.
bool embeds(const std::vector<Sign>& a, const std::vector<Sign>& b, std::size_t ia, std::size_t ib) {
  if (ib == b.size()) return true;
  for (std::size_t k = ia; k < a.size(); ++k)
    if (a[k] == b[ib] && embeds(a, b, k + 1, ib + 1)) return true;
  return false;
}

SignWord random_word(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> len(0, 6), bit(0, 1);
  SignWord w;
  const int n = len(rng);
  if (n == 0) return w;
  w.letters.push_back(bit(rng) ? Sign::plus : Sign::minus);
  for (int k = 1; k < n; ++k) w.letters.push_back(w.letters.back() == Sign::plus ? Sign::minus : Sign::plus);
  return w;
}

Domain make_domain(double lo, double hi, double dx) {
  Domain d;
  d.x_left = lo;
  d.x_right = hi;
  d.dx = dx;
  return d;
}

}  // namespace

TEST_SUITE("zeronumber") {
  TEST_CASE("sign words of simple functions") {
    const auto parabola = sample([](double x) { return x * x - 1.0; }, -3, 3, 601);
    CHECK(sign_word(parabola, 1e-12).str() == "[+ - +]");
    CHECK(sign_word(parabola, 1e-12).z_count() == 2);

    const std::vector<double> zero(50, 0.0);
    CHECK(sign_word(zero, 1e-12).z_count() == -1);
    CHECK(sign_word(zero, 1e-12).str() == "[]");

    const auto line = sample([](double x) { return x; }, -1, 1, 101);
    CHECK(sign_word(line, 1e-12) == SignWord::parse("-+"));
  }

  TEST_CASE("parse round trip") {
    for (const char* s : {"[]", "[+]", "[- +]", "[+ - + -]"}) CHECK(SignWord::parse(s).str() == s);
  }

  TEST_CASE("subwords") {
    CHECK(is_subword(SignWord::parse("+-+"), SignWord::parse("+")));
    CHECK(is_subword(SignWord::parse("+-+"), SignWord::parse("+-")));
    CHECK(is_subword(SignWord::parse("+-+"), SignWord::parse("-+")));
    CHECK_FALSE(is_subword(SignWord::parse("+-"), SignWord::parse("-+")));
    CHECK(is_subword(SignWord::parse("+-"), SignWord::parse("[]")));
    CHECK_FALSE(is_subword(SignWord::parse("[]"), SignWord::parse("+")));

    std::mt19937_64 rng(5);
    for (int k = 0; k < 2000; ++k) {
      const auto a = random_word(rng), b = random_word(rng);
      CHECK(is_subword(a, b) == embeds(a.letters, b.letters, 0, 0));
    }
  }

  TEST_CASE("reparametrization invariance") {
    // Same function on a warped grid gives the same word.
    auto f = [](double x) { return std::sin(3 * x) + 0.2; };
    std::vector<double> even, warped;
    for (int i = 0; i < 800; ++i) {
      const double s = -2.0 + 4.0 * i / 799;
      even.push_back(f(s));
      warped.push_back(f(2.0 * std::tanh(s)));
    }
    CHECK(sign_word(even, 1e-10) == sign_word(warped, 1e-10));
    // Positive rescaling does not change the word either.
    for (auto& v : even) v *= 7.5;
    CHECK(sign_word(even, 1e-10) == sign_word(warped, 1e-10));
  }

  TEST_CASE("dead band") {
    // Oscillation below the band is invisible; above it each lobe counts.
    std::vector<double> w;
    for (int i = 0; i < 400; ++i) w.push_back(1e-6 * std::sin(0.1 * i) + (i < 200 ? 1.0 : -1.0));
    CHECK(sign_word(w, 1e-3).str() == "[+ -]");
    std::vector<double> small;
    for (int i = 0; i < 400; ++i) small.push_back(1e-6 * std::sin(0.1 * i));
    CHECK(sign_word(small, 1e-3).z_count() == -1);
    CHECK(sign_word(small, 1e-9).z_count() >= 10);
    // A finer band only refines: the coarse word embeds in the fine one.
    CHECK(is_subword(sign_word(small, 1e-9), sign_word(small, 5e-7)));
  }

  TEST_CASE("audits") {
    const auto m = resolve_model("bistable", json::object());
    const Profile one = Profile::constant(1.0, 1.0, 64);
    const auto d = make_domain(-20, 20, 1.0 / 32);
    AuditOptions opts;
    opts.tol = 1e-10;

    const auto a = run(m, one, -2.0, d, 8.0, {}, 0.0, RecordPolicy{0.1, {}});
    const auto same = run(m, one, -2.0, d, 8.0, {}, 0.0, RecordPolicy{0.1, {}});
    const auto self = monotonicity_audit(a, same, opts);
    CHECK(self.pass);
    for (const auto& e : self.entries) CHECK(e.z_count == -1);

    // Ordered data stay ordered: one sign throughout.
    const auto shifted = run(m, one, 2.0, d, 8.0, {}, 0.0, RecordPolicy{0.1, {}});
    const auto ordered = monotonicity_audit(shifted, a, opts);
    CHECK(ordered.pass);
    for (const auto& e : ordered.entries) CHECK(e.z_count <= 0);

    // Heaviside against a bump: one crossing at most, never more.
    Simulation sim(m, one, d, default_dt(m, 1.0), [&] {
      Profile u = make_initial(one, 2.0, d);
      for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::abs(d.x(i) + 3.0) <= 3.0 ? 1.0 : 0.0;
      return u;
    }(), 0.0, RecordPolicy{0.1, {}});
    sim.advance_to(8.0);
    const auto crossing = monotonicity_audit(a, sim.trajectory(), opts);
    CHECK(crossing.pass);
    CHECK(crossing.violations.empty());
    int max_z = -1;
    for (const auto& e : crossing.entries) max_z = std::max(max_z, e.z_count);
    CHECK(max_z >= 1);
    for (std::size_t k = 1; k < crossing.entries.size(); ++k)
      CHECK(crossing.entries[k].z_count <= crossing.entries[k - 1].z_count);
  }

  TEST_CASE("steepness") {
    auto front = [](double t, double shift, double width) {
      Snapshot s;
      s.t = t;
      s.field = Profile::sample([=](double x) { return 0.5 * std::erfc((x - shift) / width); }, -20, 1.0 / 16, 641,
                                false);
      return s;
    };
    // A family started two time units later is the same family.
    std::vector<Snapshot> a, b, flat;
    for (int k = 0; k < 8; ++k) {
      a.push_back(front(k, 0.5 * k - 2, 1.0));
      b.push_back(front(k, 0.5 * k - 1, 1.0));
      flat.push_back(front(k, 0.4 * k - 2, 3.0));
    }
    const auto self = steeper_than(a, b, 1e-10);
    CHECK(self.verdict == Steepness::identical_up_to_shift);
    CHECK(std::abs(self.best_shift) == doctest::Approx(2.0));

    // A steep front is steeper than a flattened copy, but not vice versa.
    CHECK(steeper_than(a, flat, 1e-10).verdict == Steepness::steeper);
    const auto reverse = steeper_than(flat, a, 1e-10);
    CHECK(reverse.verdict == Steepness::not_steeper);
    CHECK_FALSE(reverse.witness_word.empty());

    // Disjoint ranges: every difference has one sign.
    std::vector<Snapshot> upper, lower;
    for (int k = 0; k < 4; ++k) {
      Snapshot hi, lo;
      hi.field = Profile::sample([=](double x) { return 1.0 + 0.1 * std::tanh(x - k); }, -20, 1.0 / 16, 641, false);
      lo.field = Profile::sample([=](double x) { return 0.5 + 0.1 * std::tanh(x + k); }, -20, 1.0 / 16, 641, false);
      upper.push_back(hi);
      lower.push_back(lo);
    }
    CHECK(steeper_than(upper, lower, 1e-10).verdict == Steepness::steeper);
  }
}
