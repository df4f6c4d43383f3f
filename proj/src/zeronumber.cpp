#include "tlab/zeronumber.hpp"

#include <algorithm>
#include <cmath>

#include "tlab/error.hpp"

namespace tlab {

std::string SignWord::str() const {
  std::string s = "[";
  for (std::size_t i = 0; i < letters.size(); ++i) {
    if (i) s += ' ';
    s += letters[i] == Sign::plus ? '+' : '-';
  }
  return s + "]";
}

SignWord SignWord::parse(std::string_view text) {
  SignWord w;
  for (char ch : text) {
    Sign s;
    if (ch == '+') s = Sign::plus;
    else if (ch == '-') s = Sign::minus;
    else if (ch == '[' || ch == ']' || ch == ' ' || ch == ',') continue;
    else throw ConfigError("word", std::string("unexpected character '") + ch + "' in sign word");
    if (w.letters.empty() || w.letters.back() != s) w.letters.push_back(s);
  }
  return w;
}

SignWord sign_word(std::span<const double> samples, double tol) {
  SignWord w;
  for (double v : samples) {
    if (std::abs(v) <= tol) continue;
    const Sign s = v > 0 ? Sign::plus : Sign::minus;
    if (w.letters.empty() || w.letters.back() != s) w.letters.push_back(s);
  }
  return w;
}

SignWord sign_word(const Profile& samples, double tol) { return sign_word(samples.values, tol); }

bool is_subword(const SignWord& a, const SignWord& b) {
  std::size_t j = 0;
  for (std::size_t i = 0; i < a.letters.size() && j < b.letters.size(); ++i)
    if (a.letters[i] == b.letters[j]) ++j;
  return j == b.letters.size();
}

double default_dead_band(const Trajectory& traj) {
  double m = 0.0;
  for (const Snapshot& s : traj.snapshots) {
    const auto& v = s.field.values;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) m = std::max(m, std::abs(v[i - 1] - 2 * v[i] + v[i + 1]));
  }
  // m already carries dx^2 (undivided second difference).
  return std::max(10.0 * m, 1e-12);
}

namespace {

void check_same_grid(const Profile& a, const Profile& b) {
  if (a.size() != b.size() || std::abs(a.dx - b.dx) > 1e-12 * a.dx || std::abs(a.x0 - b.x0) > 1e-9 * a.dx)
    throw ConfigError("grid", "profiles are not sampled on a common grid");
}

std::vector<double> difference(const Profile& a, const Profile& b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

bool near_tangency(const std::vector<double>& w, double tol) {
  // Interior local extremum of w inside a widened band: a touching zero.
  for (std::size_t i = 1; i + 1 < w.size(); ++i) {
    if (std::abs(w[i]) > 10 * tol) continue;
    const double l = w[i] - w[i - 1], r = w[i + 1] - w[i];
    if (l * r <= 0 && std::abs(l) + std::abs(r) <= 10 * tol) return true;
  }
  return false;
}

}  // namespace

AuditReport monotonicity_audit(const Trajectory& run_a, const Trajectory& run_b, const AuditOptions& opts) {
  const auto& sa = run_a.snapshots;
  const auto& sb = run_b.snapshots;
  if (sa.size() != sb.size()) throw ConfigError("snapshots", "runs have different numbers of snapshots");
  AuditReport rep;
  rep.tol = opts.tol > 0 ? opts.tol : default_dead_band(run_a);
  rep.t_exclude = opts.t_exclude;
  const double fine = rep.tol * opts.fine_ratio;

  SignWord prev_coarse, prev_fine;
  double prev_t = 0.0;
  int tangency_z = -2;
  for (std::size_t k = 0; k < sa.size(); ++k) {
    if (std::abs(sa[k].t - sb[k].t) > 1e-9 * std::max(1.0, sa[k].t))
      throw ConfigError("snapshots", "snapshot times are not aligned");
    check_same_grid(sa[k].field, sb[k].field);
    const auto w = difference(sa[k].field, sb[k].field);
    const SignWord coarse = sign_word(w, rep.tol);
    const SignWord fine_w = sign_word(w, fine);
    const double t = sa[k].t;
    rep.entries.push_back({t, coarse.z_count(), coarse.str()});

    if (tangency_z > -2 && !rep.events.empty()) {
      AuditEvent& ev = rep.events.back();
      if (ev.kind == "near_tangency") {
        ev.t_to = t;
        ev.word_to = coarse.str();
        ev.drop_verified = coarse.z_count() <= tangency_z - 2;
      }
      tangency_z = -2;
    }
    if (k > 0) {
      const bool z_up = coarse.z_count() > prev_fine.z_count();
      const bool nest = is_subword(prev_fine, coarse);
      auto make = [&](std::string kind) {
        return AuditEvent{std::move(kind), prev_t, t, prev_coarse.str(), coarse.str(), false};
      };
      const bool counted = t > opts.t_exclude;
      if (z_up) (counted ? rep.violations : rep.events).push_back(make("z_increase"));
      if (!nest) (counted ? rep.violations : rep.events).push_back(make("subword_break"));
      if (!z_up && nest && coarse.z_count() > prev_coarse.z_count()) rep.events.push_back(make("band_event"));
    }
    if (near_tangency(w, rep.tol)) {
      rep.events.push_back(AuditEvent{"near_tangency", t, t, coarse.str(), coarse.str(), false});
      tangency_z = fine_w.z_count();
    }
    prev_coarse = coarse;
    prev_fine = fine_w;
    prev_t = t;
  }
  rep.pass = rep.violations.empty();
  return rep;
}

nlohmann::json to_json(const AuditReport& rep) {
  nlohmann::json j;
  j["tol"] = rep.tol;
  j["t_exclude"] = rep.t_exclude;
  j["pass"] = rep.pass;
  auto& e = j["entries"] = nlohmann::json::array();
  for (const auto& x : rep.entries) e.push_back({{"t", x.t}, {"z_count", x.z_count}, {"word", x.word}});
  auto events = [](const std::vector<AuditEvent>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& x : v) {
      nlohmann::json o{{"kind", x.kind}, {"t_from", x.t_from}, {"t_to", x.t_to},
                       {"word_from", x.word_from}, {"word_to", x.word_to}};
      if (x.kind == "near_tangency") o["drop_verified"] = x.drop_verified;
      a.push_back(std::move(o));
    }
    return a;
  };
  j["violations"] = events(rep.violations);
  j["events"] = events(rep.events);
  return j;
}

std::string_view to_string(Steepness s) {
  switch (s) {
    case Steepness::steeper: return "steeper";
    case Steepness::not_steeper: return "not_steeper";
    case Steepness::identical_up_to_shift: return "identical_up_to_shift";
  }
  return "?";
}

namespace {

// b at time t, linear in time between snapshots; false outside the range.
bool interp_family(std::span<const Snapshot> fam, double t, std::vector<double>& out) {
  if (fam.empty() || t < fam.front().t - 1e-12 || t > fam.back().t + 1e-12) return false;
  auto it = std::lower_bound(fam.begin(), fam.end(), t, [](const Snapshot& s, double v) { return s.t < v; });
  if (it == fam.end()) it = fam.end() - 1;
  const Snapshot& hi = *it;
  const Snapshot& lo = it == fam.begin() ? *it : *(it - 1);
  const double span = hi.t - lo.t;
  const double w = span > 0 ? std::clamp((t - lo.t) / span, 0.0, 1.0) : 0.0;
  out.resize(hi.field.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1 - w) * lo.field[i] + w * hi.field[i];
  return true;
}

double shift_residual(std::span<const Snapshot> a, std::span<const Snapshot> b, double s) {
  std::vector<double> buf;
  double worst = 0.0;
  std::size_t used = 0;
  for (const Snapshot& x : a) {
    if (!interp_family(b, x.t + s, buf)) continue;
    ++used;
    for (std::size_t i = 0; i < buf.size(); ++i) worst = std::max(worst, std::abs(x.field[i] - buf[i]));
  }
  if (2 * used < a.size() || used == 0) return std::numeric_limits<double>::infinity();
  return worst;
}

std::vector<std::size_t> sample_indices(std::size_t n, int count) {
  std::vector<std::size_t> idx;
  if (n == 0) return idx;
  const std::size_t m = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(count, 1)));
  for (std::size_t k = 0; k < m; ++k) idx.push_back(m == 1 ? 0 : k * (n - 1) / (m - 1));
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

}  // namespace

SteepnessResult steeper_than(std::span<const Snapshot> family_a, std::span<const Snapshot> family_b, double tol,
                             const SteepnessOptions& opts) {
  SteepnessResult res;
  if (family_a.empty() || family_b.empty()) throw ConfigError("family", "empty family");
  for (const auto& s : family_a) check_same_grid(s.field, family_a.front().field);
  for (const auto& s : family_b) check_same_grid(s.field, family_a.front().field);

  const auto ia = sample_indices(family_a.size(), opts.samples_a);
  const auto ib = sample_indices(family_b.size(), opts.samples_b);

  // Identity up to a time shift.
  double best = std::numeric_limits<double>::infinity(), best_s = 0.0;
  for (std::size_t i : ia)
    for (std::size_t j : family_b.size() <= 256 ? sample_indices(family_b.size(), 256) : ib) {
      const double s = family_b[j].t - family_a[i].t;
      const double r = shift_residual(family_a, family_b, s);
      if (r < best) best = r, best_s = s;
    }
  if (std::isfinite(best) && best > tol && family_b.size() > 1) {
    const double h = (family_b.back().t - family_b.front().t) / static_cast<double>(family_b.size() - 1);
    double lo = best_s - h, hi = best_s + h;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 60; ++it) {
      const double m1 = hi - g * (hi - lo), m2 = lo + g * (hi - lo);
      if (shift_residual(family_a, family_b, m1) < shift_residual(family_a, family_b, m2)) hi = m2;
      else lo = m1;
    }
    const double s = 0.5 * (lo + hi);
    const double r = shift_residual(family_a, family_b, s);
    if (r < best) best = r, best_s = s;
  }
  res.best_shift = best_s;
  res.shift_residual = best;
  if (best <= tol) {
    res.verdict = Steepness::identical_up_to_shift;
    return res;
  }

  const SignWord allowed = SignWord::parse("+-");
  for (std::size_t i : ia)
    for (std::size_t j : ib) {
      ++res.pairs_checked;
      const auto d = difference(family_a[i].field, family_b[j].field);
      const SignWord w = sign_word(d, tol);
      if (!is_subword(allowed, w)) {
        res.verdict = Steepness::not_steeper;
        res.witness_t1 = family_a[i].t;
        res.witness_t2 = family_b[j].t;
        res.witness_word = w.str();
        return res;
      }
    }
  res.verdict = Steepness::steeper;
  return res;
}

}  // namespace tlab
