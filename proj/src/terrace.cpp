#include "tlab/terrace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <thread>

#include "tlab/error.hpp"
#include "tlab/io.hpp"

namespace tlab {

// ---------------------------------------------------------------------------
// Level crossings

CrossingObserver::CrossingObserver(const Domain& domain, double x0, double L, double alpha, int k_max, double p_max,
                                   CaptureOptions opts)
    : domain_(domain), k_max_(k_max), opts_(opts) {
  data_.x0 = x0;
  data_.alpha = alpha;
  data_.L = L;
  data_.dx = domain.dx;
  threshold_ = alpha - opts_.band * std::max(p_max, 1e-300);
  M_ = static_cast<std::size_t>(std::llround(L / domain.dx));
  if (k_max < 0) throw ConfigError("k_max", "need at least one observation point");
  if (x0 < domain.x_left || x0 + k_max * L > domain.x_right - domain.dx)
    throw ConfigError("x0", "observation points x0 + kL leave the domain");
  prev_obs_.assign(static_cast<std::size_t>(k_max) + 1, 0.0);
  data_.attained_sup.assign(static_cast<std::size_t>(k_max) + 1, -std::numeric_limits<double>::infinity());
}

double CrossingObserver::value_at(std::span<const double> u, int k) const {
  const double X = data_.x0 + k * data_.L;
  const double s = (X - domain_.x_left) / domain_.dx;
  auto i = static_cast<std::size_t>(std::floor(s));
  if (i + 1 >= u.size()) return u.back();
  const double w = s - static_cast<double>(i);
  if (w < 1e-12) return u[i];
  return (1 - w) * u[i] + w * u[i + 1];
}

void CrossingObserver::start_window(int k, double t_cross) {
  if (data_.crossings.empty() || active_.size() >= 16) return;
  const double tau_last = t_cross - data_.crossings.back().tau;
  if (!(tau_last > 0)) return;
  const double L = data_.L;
  const double W = std::max(opts_.half_width, 2 * L);
  const double X = data_.x0 + k * L;
  const std::size_t n_all = domain_.nodes();
  const std::size_t i0 = domain_.index_of(X - W);
  const std::size_t i1 = std::min(domain_.index_of(X + W + L), n_all - 1);
  if (i1 <= i0 + M_) return;
  Active a;
  a.w.k = k;
  a.w.t_cross = t_cross;
  a.w.x_left = domain_.x(i0);
  a.w.X = X;
  a.i0 = i0;
  a.n = i1 - i0 + 1;
  a.duration = opts_.duration_factor * tau_last;
  active_.push_back(std::move(a));
}

void CrossingObserver::observe(double t, std::span<const double> u, const Domain&) {
  const int K = k_max_;
  const double L = data_.L;
  std::vector<double> vals(static_cast<std::size_t>(K) + 1);
  for (int k = 0; k <= K; ++k) {
    vals[static_cast<std::size_t>(k)] = value_at(u, k);
    auto& s = data_.attained_sup[static_cast<std::size_t>(k)];
    s = std::max(s, vals[static_cast<std::size_t>(k)]);
  }

  for (auto it = active_.begin(); it != active_.end();) {
    it->w.times.push_back(t);
    it->w.fields.emplace_back(u.begin() + static_cast<long>(it->i0), u.begin() + static_cast<long>(it->i0 + it->n));
    if (t - it->w.t_cross >= it->duration) {
      data_.window = std::move(it->w);
      it = active_.erase(it);
    } else {
      ++it;
    }
  }

  if (first_) {
    first_ = false;
    data_.dt = 0.0;
  } else {
    const double step = t - t_prev_;
    if (data_.dt == 0.0) data_.dt = step;
    while (k_next_ <= K && vals[static_cast<std::size_t>(k_next_)] >= threshold_) {
      const auto k = static_cast<std::size_t>(k_next_);
      const double v = vals[k], vp = prev_obs_[k];
      double tc = t;
      if (vp < threshold_ && v > vp) tc = t_prev_ + step * (threshold_ - vp) / (v - vp);
      const double X = data_.x0 + k_next_ * L;
      const std::size_t iX = domain_.index_of(X);
      const std::size_t M = M_;
      double per = 0.0;
      for (std::size_t i = iX >= 2 * M ? iX - 2 * M : 0; i <= iX + 2 * M && i + M < u.size(); ++i)
        per = std::max(per, std::abs(u[i] - u[i + M]));
      double flat = std::numeric_limits<double>::infinity();
      if (!prev_local_.empty() && iX >= M && iX - M >= prev_local_start_ &&
          iX + M < prev_local_start_ + prev_local_.size() && iX + M < u.size()) {
        flat = 0.0;
        for (std::size_t i = iX - M; i <= iX + M; ++i)
          flat = std::max(flat, std::abs(u[i] - prev_local_[i - prev_local_start_]) / step);
      }
      Profile loc;
      const std::size_t is = iX >= M / 2 ? iX - M / 2 : 0;
      if (is + M <= u.size()) {
        loc.values.assign(u.begin() + static_cast<long>(is), u.begin() + static_cast<long>(is + M));
        loc.dx = domain_.dx;
        loc.x0 = domain_.x(is);
        loc.periodic = true;
        data_.last_local_period = std::move(loc);
      }
      if (tc >= opts_.after && k_next_ >= 1) start_window(k_next_, tc);
      if (!active_.empty() && active_.back().w.k == k_next_ && active_.back().w.times.empty()) {
        active_.back().w.times.push_back(t);
        active_.back().w.fields.emplace_back(u.begin() + static_cast<long>(active_.back().i0),
                                             u.begin() + static_cast<long>(active_.back().i0 + active_.back().n));
      }
      data_.crossings.push_back({data_.x0, data_.alpha, k_next_, tc});
      data_.u_t.push_back((v - vp) / step);
      data_.periodicity.push_back(per);
      data_.flatness.push_back(flat);
      ++k_next_;
    }
  }

  prev_obs_ = vals;
  prev_local_.clear();
  if (k_next_ <= K) {
    const double X = data_.x0 + k_next_ * L;
    const std::size_t a = domain_.index_of(X - 2 * L), b = std::min(domain_.index_of(X + 4 * L), u.size() - 1);
    prev_local_.assign(u.begin() + static_cast<long>(a), u.begin() + static_cast<long>(b) + 1);
    prev_local_start_ = a;
  }
  t_prev_ = t;
}

std::vector<LevelCrossing> crossing_times(const ReactionModel& model, const Profile& p, double x0, double alpha,
                                          double a, int k_max, double t_final, const Domain& domain, double dt) {
  const double px0 = p.at(x0);
  if (!(alpha > 0 && alpha < px0)) throw ConfigError("alpha", "level must lie in (0, p(x0))");
  if (!(a < x0)) throw ConfigError("a", "interface must lie left of the observation point");
  CrossingObserver obs(domain, x0, model.period(), alpha, k_max, p.max());
  Observer* list[] = {&obs};
  RecordPolicy none;
  none.every = 0;
  run(model, p, a, domain, t_final, list, dt, none);
  CrossingData d = obs.take();
  if (static_cast<int>(d.crossings.size()) <= k_max) {
    const auto k = d.crossings.size();
    throw MissingCrossing("level " + fmt_num(alpha) + " not reached at x0 + " + std::to_string(k) +
                              "L before t = " + fmt_num(t_final),
                          d.attained_sup[k]);
  }
  return d.crossings;
}

std::string_view to_string(WaveKind k) {
  switch (k) {
    case WaveKind::pulsating_wave: return "pulsating_wave";
    case WaveKind::stationary: return "stationary";
    case WaveKind::undecided: return "undecided";
  }
  return "?";
}

DriftEstimate drift_estimate(const std::vector<LevelCrossing>& crossings, double c, double L, double error_bar) {
  DriftEstimate d;
  d.error_bar = error_bar;
  if (!(c > 0)) return d;
  for (std::size_t j = 0; j < crossings.size(); ++j) {
    const double tn = static_cast<double>(j) * L / c;
    d.t.push_back(tn);
    d.m.push_back(crossings[j].tau - tn);
  }
  if (d.t.size() < 4) return d;
  const double t_end = d.t.back();
  for (std::size_t j = 1; j < d.t.size(); ++j) {
    const double r = std::abs(d.m[j]) / d.t[j];
    if (d.t[j] >= 0.5 * t_end) d.tail_ratio = std::max(d.tail_ratio, r);
    else if (d.t[j] >= 0.25 * t_end) d.early_ratio = std::max(d.early_ratio, r);
  }
  // Bounded m halves the ratio between the two windows; a linear drift keeps it
  // constant. Jitter at the recording resolution is forgiven.
  d.decaying = d.tail_ratio <= 0.75 * d.early_ratio + 2.0 * error_bar / t_end + 1e-15;
  return d;
}

// ---------------------------------------------------------------------------
// Classification

ExtractedWave classify_limit(const CrossingData& data, const ClassifyOptions& opts) {
  ExtractedWave w;
  w.alpha = data.alpha;
  const auto& cr = data.crossings;
  const double L = data.L;
  for (std::size_t k = 1; k < cr.size(); ++k) w.taus.push_back(cr[k].tau - cr[k - 1].tau);
  if (static_cast<int>(cr.size()) < opts.min_crossings) {
    w.diagnostics = "only " + std::to_string(cr.size()) + " crossings recorded";
    return w;
  }
  const std::size_t n = cr.size();
  auto local_stationary = [&](std::size_t count, bool need_ut) {
    for (std::size_t k = n - count; k < n; ++k) {
      if (need_ut && !(std::abs(data.u_t[k]) <= opts.stationary_ut)) return false;
      if (!(data.periodicity[k] <= opts.delta) || !(data.flatness[k] <= opts.delta)) return false;
    }
    return true;
  };

  const std::size_t win = std::min<std::size_t>(static_cast<std::size_t>(opts.window), w.taus.size());
  const auto tail_begin = w.taus.end() - static_cast<long>(win);
  const double tmin = *std::min_element(tail_begin, w.taus.end());
  const double tmax = *std::max_element(tail_begin, w.taus.end());
  const double tmean = std::accumulate(tail_begin, w.taus.end(), 0.0) / static_cast<double>(win);
  w.tau_spread = tmean > 0 ? (tmax - tmin) / tmean : std::numeric_limits<double>::infinity();

  if (local_stationary(std::min<std::size_t>(5, n), true)) {
    w.classification = WaveKind::stationary;
    w.stationary_profile = data.last_local_period;
    w.diagnostics = "time-flat and periodic at the crossing points";
    return w;
  }
  const double eps_tau = opts.c_upper > 0 ? 1e-3 * L / opts.c_upper : 0.0;
  if (tmin < eps_tau) {
    if (local_stationary(1, false)) {
      w.classification = WaveKind::stationary;
      w.stationary_profile = data.last_local_period;
      w.diagnostics = "increments accumulate at zero; local profile stationary";
    } else {
      w.diagnostics = "increments near zero but the local profile is not stationary";
    }
    return w;
  }
  if (!(w.tau_spread < opts.spread_tol)) {
    w.diagnostics = "increments not converged: relative spread " + fmt_num(w.tau_spread) + " over the last " +
                    std::to_string(win);
    return w;
  }

  w.classification = WaveKind::pulsating_wave;
  w.period_T = tmean;
  w.frame_speed_c = L / tmean;
  w.drift = drift_estimate(cr, w.frame_speed_c, L, data.dt);

  if (!data.window) {
    w.diagnostics = "no capture window completed";
    return w;
  }
  const auto& win_d = *data.window;
  const double T = w.period_T;
  const std::size_t nt = win_d.times.size();
  if (nt < 3 || win_d.times.back() - win_d.times.front() < T) {
    w.diagnostics = "capture window shorter than one period";
    return w;
  }
  const double h_t = (win_d.times.back() - win_d.times.front()) / static_cast<double>(nt - 1);
  const std::size_t nx = win_d.fields.front().size();
  const double dx = data.dx;
  const std::size_t Mp = static_cast<std::size_t>(std::llround(L / dx));
  double rec = 0.0;
  std::vector<double> shifted(nx);
  for (std::size_t a = 0; a < nt; ++a) {
    const double tq = win_d.times[a] + T;
    if (tq > win_d.times.back()) break;
    const double s = (tq - win_d.times.front()) / h_t;
    auto b = static_cast<std::size_t>(std::floor(s));
    if (b + 1 >= nt) b = nt - 2;
    const double wt = s - static_cast<double>(b);
    for (std::size_t i = Mp; i < nx; ++i) {
      const double later = (1 - wt) * win_d.fields[b][i] + wt * win_d.fields[b + 1][i];
      rec = std::max(rec, std::abs(later - win_d.fields[a][i - Mp]));
    }
  }
  w.recurrence_residual = rec;
  double mind = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a + 1 < nt; ++a) {
    const double ht = win_d.times[a + 1] - win_d.times[a];
    for (std::size_t i = 0; i < nx; ++i) mind = std::min(mind, (win_d.fields[a + 1][i] - win_d.fields[a][i]) / ht);
  }
  w.min_time_derivative = mind;

  const int F = std::max(opts.history_frames, 2);
  for (int f = 0; f < F; ++f) {
    const double tq = win_d.times.front() + T * f / (F - 1);
    const auto idx = std::min(nt - 1, static_cast<std::size_t>(std::llround((tq - win_d.times.front()) / h_t)));
    Snapshot s;
    s.t = win_d.times[idx] - win_d.t_cross;
    s.field.values = win_d.fields[idx];
    s.field.dx = dx;
    s.field.x0 = win_d.x_left - win_d.X;
    s.field.periodic = false;
    w.profile_history.push_back(std::move(s));
  }
  w.diagnostics = "increments converged";
  return w;
}

// ---------------------------------------------------------------------------
// Plateaus

std::vector<PlateauCandidate> detect_plateaus(const Trajectory& run, double t_probe, double L,
                                              const PlateauOptions& opts) {
  const auto& snaps = run.snapshots;
  if (snaps.size() < 2) throw ConfigError("snapshots", "plateau detection needs two snapshots");
  std::size_t s2 = 0;
  for (std::size_t k = 0; k < snaps.size(); ++k)
    if (std::abs(snaps[k].t - t_probe) < std::abs(snaps[s2].t - t_probe)) s2 = k;
  if (s2 == 0) s2 = 1;
  const auto& u2 = snaps[s2].field;
  const auto& u1 = snaps[s2 - 1].field;
  const double gap = snaps[s2].t - snaps[s2 - 1].t;
  const double dx = u2.dx;
  const std::size_t M = static_cast<std::size_t>(std::llround(L / dx));
  const std::size_t n = u2.size();
  std::vector<char> flag(n, 0);
  for (std::size_t i = 0; i + M < n; ++i)
    flag[i] = std::abs(u2[i] - u2[i + M]) <= opts.delta && std::abs(u2[i] - u1[i]) / gap <= opts.delta;

  // Node offset whose position is a multiple of L.
  const long off0 = std::lround(u2.x0 / dx);
  const std::size_t align = static_cast<std::size_t>(((-off0) % static_cast<long>(M) + static_cast<long>(M)) %
                                                     static_cast<long>(M));
  std::vector<PlateauCandidate> out;
  for (std::size_t i = 0; i < n;) {
    if (!flag[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < n && flag[j + 1]) ++j;
    const std::size_t end = std::min(j + M, n - 1);
    const double len = static_cast<double>(end - i) * dx;
    if (len >= opts.min_periods * L) {
      PlateauCandidate c;
      c.x_begin = u2.x(i);
      c.x_end = u2.x(end);
      std::size_t base = (i + end) / 2 - std::min((i + end) / 2, M / 2);
      base += (align + M - base % M) % M;
      if (base + M > end + 1) base = base >= M ? base - M : base;
      c.period.values.assign(u2.values.begin() + static_cast<long>(base),
                             u2.values.begin() + static_cast<long>(base + M));
      c.period.dx = dx;
      c.period.x0 = 0.0;
      c.period.periodic = true;
      c.max_value = c.period.max();
      out.push_back(std::move(c));
    }
    i = j + 1;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Assembly

StationaryState roof_on_grid(const ReactionModel& model, const Profile& p, std::size_t points_per_period) {
  const double L = model.period();
  const double h = L / static_cast<double>(points_per_period);
  Profile q = Profile::sample([&](double x) { return p.at(x); }, 0.0, h, points_per_period, true);
  return solve_periodic(model, q, 1e-10);
}

namespace {

double rightmost_at_or_above(const Profile& u, const std::function<double(double)>& level) {
  for (std::size_t i = u.size(); i-- > 0;)
    if (u[i] >= level(u.x(i))) return u.x(i);
  return u.x0;
}

const Snapshot& nearest_snapshot(const Trajectory& tr, double t) {
  std::size_t best = 0;
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k)
    if (std::abs(tr.snapshots[k].t - t) < std::abs(tr.snapshots[best].t - t)) best = k;
  return tr.snapshots[best];
}

struct RunSetup {
  Domain domain;
  double dt;
  int k_max;
  double t_final;
  RecordPolicy policy;
};

std::vector<CrossingData> run_levels(const ReactionModel& model, const Profile& roof, double a, double x0,
                                     const std::vector<double>& alphas, const RunSetup& rs, Trajectory* keep) {
  std::vector<std::unique_ptr<CrossingObserver>> obs;
  std::vector<Observer*> list;
  CaptureOptions cap;
  cap.after = 0.6 * rs.t_final;
  for (double al : alphas) {
    obs.push_back(std::make_unique<CrossingObserver>(rs.domain, x0, model.period(), al, rs.k_max, roof.max(), cap));
    list.push_back(obs.back().get());
  }
  RecordPolicy pol = keep ? rs.policy : RecordPolicy{0.0, {}};
  Simulation sim(model, roof, rs.domain, rs.dt, make_initial(roof, a, rs.domain), a, pol);
  sim.advance_to(rs.t_final, list);
  if (keep) *keep = sim.release();
  std::vector<CrossingData> out;
  for (auto& o : obs) out.push_back(o->take());
  return out;
}

void verify_steepness(const ReactionModel& model, WaveReport& wr, const StationaryState& upper,
                      const StationaryState& lower, const TerraceOptions& opts) {
  const ExtractedWave& ew = wr.wave;
  if (ew.profile_history.empty()) {
    wr.steepness_note = "no frame history";
    return;
  }
  const double L = model.period();
  const double amp = upper.profile.max() - lower.profile.min();
  // Comparison front as a function of (z, medium phase x mod L) with its speed.
  std::function<double(double, double)> front;
  double cb = 0.0;

  WaveOptions wo = opts.wave;
  wo.c_guess = ew.frame_speed_c;
  WaveSolution bvp;
  std::string why;
  try {
    bvp = solve_pulsating(model, lower.profile, upper.profile, wo);
    // Only monotone fronts between the end states are admissible.
    const double tol = 1e-6 * amp;
    bool ok = bvp.monotonicity_defect <= tol;
    for (std::size_t j = 0; ok && j < bvp.nz; ++j)
      for (std::size_t i = 0; i < bvp.nx; ++i)
        ok &= bvp.at(j, i) >= bvp.p_minus[i] - tol && bvp.at(j, i) <= bvp.p_plus[i] + tol;
    if (!ok) why = "strip solution is not a monotone front";
  } catch (const Error& e) {
    why = e.what();
  }
  if (why.empty()) {
    cb = bvp.speed_c;
    front = [&bvp](double zq, double xm) {
      const double si = xm / bvp.h;
      const auto i0 = static_cast<std::size_t>(std::floor(si)) % bvp.nx;
      const std::size_t i1 = (i0 + 1) % bvp.nx;
      const double wx = si - std::floor(si);
      return (1 - wx) * bvp.column_value(zq, i0) + wx * bvp.column_value(zq, i1);
    };
  } else if (model.homogeneous()) {
    // Monostable steps carry a continuum of faster fronts; compare with one of them.
    cb = 1.25 * ew.frame_speed_c;
    Profile phi;
    try {
      phi = homogeneous_profile(model, lower.profile.max(), upper.profile.max(), cb);
    } catch (const Error& e) {
      wr.steepness_note = "no admissible comparison wave (" + why + "; " + e.what() + ")";
      return;
    }
    wr.steepness_note = "compared with the ODE front at c = " + fmt_num(cb) + " (" + why + ")";
    front = [phi = std::move(phi)](double zq, double) { return phi.at(zq); };
  } else {
    wr.steepness_note = "no admissible comparison wave (" + why + ")";
    return;
  }
  wr.bvp_speed = cb;

  const Profile& g = ew.profile_history.front().field;
  const double W = -g.x0;
  const double cs = std::max(cb, 1e-6);
  const int nb = 48;
  std::vector<Snapshot> fam_b;
  for (int j = 0; j < nb; ++j) {
    const double t = (static_cast<double>(j) / (nb - 1) - 0.5) * 2.0 * W / cs;
    Snapshot s;
    s.t = t;
    s.field = g;
    for (std::size_t i = 0; i < g.size(); ++i) {
      // Frames sit at X_k = x0 + kL, so the medium phase of x_rel is x_rel + x0.
      double xm = std::fmod(g.x(i) + opts.x0, L);
      if (xm < 0) xm += L;
      s.field.values[i] = front(g.x(i) - cs * t, xm);
    }
    fam_b.push_back(std::move(s));
  }
  const auto res = steeper_than(ew.profile_history, fam_b, opts.delta * std::max(amp, 1e-12));
  wr.steepness = std::string(to_string(res.verdict));
  if (res.verdict == Steepness::not_steeper)
    wr.steepness_note += (wr.steepness_note.empty() ? "witness word " : "; witness word ") + res.witness_word +
                         " at t1 = " + fmt_num(res.witness_t1) + ", t2 = " + fmt_num(res.witness_t2);
}

}  // namespace

TerraceReport assemble(const ReactionModel& model, const Profile& p, const TerraceOptions& opts) {
  TerraceReport rep;
  const double L = model.period();
  double dx = opts.dx > 0 ? opts.dx : L / 64.0;
  const auto M = static_cast<std::size_t>(std::llround(L / dx));
  dx = L / static_cast<double>(M);
  if (!(opts.x0 > opts.a)) throw ConfigError("a", "interface must lie left of x0");

  PlateauReport roof;
  roof.state = roof_on_grid(model, p, M);
  const Profile& P0 = roof.state.profile;
  const double c_up = 2.0 * std::sqrt(model.lipschitz());
  const double T = opts.t_final;

  RunSetup rs;
  if (opts.domain) {
    rs.domain = *opts.domain;
    rs.domain.dx = dx;
  } else {
    rs.domain.dx = dx;
    rs.domain.x_left = std::floor((opts.a - 20 * L) / L) * L;
    rs.domain.x_right = std::ceil((opts.a + c_up * T + 20 * L) / L) * L;
  }
  rs.dt = opts.dt > 0 ? opts.dt : default_dt(model, P0.max());
  rs.t_final = T;
  rs.k_max = static_cast<int>(std::floor((rs.domain.x_right - 10 * L - opts.x0) / L));
  if (rs.k_max < opts.classify.min_crossings) throw ConfigError("domain", "too few observation points x0 + kL");
  const double gap = opts.probe_gap;
  rs.policy.every = 0.0;
  rs.policy.extra_times = {0.5 * T - gap, 0.5 * T, T - gap, T};

  rep.x0 = opts.x0;
  rep.a = opts.a;
  ClassifyOptions cop = opts.classify;
  cop.delta = opts.delta;
  cop.c_upper = c_up;

  auto classify_with_retry = [&](double upper_x0, double lower_x0, const CrossingData& first, bool have_first) {
    double gamma = opts.gamma;
    CrossingData d = first;
    if (!have_first) d = run_levels(model, P0, opts.a, opts.x0, {upper_x0 - gamma * (upper_x0 - lower_x0)}, rs, nullptr)[0];
    ExtractedWave w = classify_limit(d, cop);
    for (int r = 0; r < opts.gamma_retries && w.classification == WaveKind::undecided; ++r) {
      gamma *= 0.5;
      d = run_levels(model, P0, opts.a, opts.x0, {upper_x0 - gamma * (upper_x0 - lower_x0)}, rs, nullptr)[0];
      w = classify_limit(d, cop);
    }
    return w;
  };

  // Stratum 1 run also keeps the sparse snapshots.
  const double px0 = P0.at(opts.x0);
  const double alpha1 = px0 - opts.gamma * px0;
  rep.alpha0 = alpha1;
  auto d1 = run_levels(model, P0, opts.a, opts.x0, {alpha1}, rs, &rep.trajectory)[0];
  ExtractedWave w1 = classify_with_retry(px0, 0.0, d1, true);

  rep.plateaus.push_back(roof);
  auto finish_undecided = [&](int stratum, const std::string& why) {
    rep.complete = false;
    rep.undecided_stratum = stratum;
    rep.note += why;
  };
  if (w1.classification != WaveKind::pulsating_wave) {
    WaveReport wr;
    wr.wave = std::move(w1);
    rep.waves.push_back(std::move(wr));
    finish_undecided(1, "stratum 1: " + rep.waves.back().wave.diagnostics);
    return rep;
  }

  const Snapshot& last = nearest_snapshot(rep.trajectory, T);
  PlateauOptions po{opts.delta, opts.plateau_min_periods};
  auto cands = detect_plateaus(rep.trajectory, T, L, po);
  // Merge neighbours that describe the same state.
  std::vector<PlateauCandidate> merged;
  for (auto& c : cands) {
    if (!merged.empty() && max_abs_diff(merged.back().period, c.period) <= opts.delta) {
      merged.back().x_end = c.x_end;
      continue;
    }
    merged.push_back(std::move(c));
  }

  std::vector<ExtractedWave> strata;
  strata.push_back(std::move(w1));
  double front = rightmost_at_or_above(last.field, [&](double) { return alpha1; });
  std::vector<double> fronts{front};
  // Chain of lower states right of each front.
  std::size_t cursor = 0;
  auto next_plateau = [&](double x) -> const PlateauCandidate* {
    for (; cursor < merged.size(); ++cursor)
      if (merged[cursor].x_begin > x) return &merged[cursor++];
    return nullptr;
  };

  std::vector<double> alphas;
  for (int s = 1;; ++s) {
    if (s > opts.n_max) throw RunawayTerrace("more than " + std::to_string(opts.n_max) + " strata");
    const PlateauCandidate* q = next_plateau(fronts.back());
    if (!q) {
      finish_undecided(s, "no plateau right of front " + std::to_string(s));
      break;
    }
    PlateauReport pr;
    pr.x_begin = q->x_begin;
    pr.x_end = q->x_end;
    if (q->period.max() <= opts.delta && q->period.min() >= -opts.delta) {
      pr.state.profile = Profile::constant(0.0, L, M);
      pr.state = solve_periodic(model, pr.state.profile, 1e-10);
    } else {
      pr.state = solve_periodic(model, q->period, 1e-10);
      if (max_abs_diff(pr.state.profile, q->period) > opts.delta)
        rep.note += "plateau " + std::to_string(s) + " refined to a state farther than delta from the field; ";
    }
    const Profile& upper = rep.plateaus.back().state.profile;
    bool below = true;
    for (std::size_t i = 0; i < M; ++i) below &= pr.state.profile[i] < upper[i];
    if (!below) {
      finish_undecided(s, "plateau " + std::to_string(s) + " is not below its upper state");
      break;
    }
    rep.plateaus.push_back(std::move(pr));
    const bool bottom = rep.plateaus.back().state.profile.max() <= opts.delta;
    if (bottom) {
      rep.complete = true;
      break;
    }
    // Next stratum level, read against the plateau after this one (or 0).
    const double ux0 = rep.plateaus.back().state.profile.at(opts.x0);
    double lx0 = 0.0;
    for (std::size_t k = cursor; k < merged.size(); ++k) {
      lx0 = merged[k].period.at(opts.x0);
      break;
    }
    const double al = ux0 - opts.gamma * (ux0 - lx0);
    alphas.push_back(al);
    const double f = rightmost_at_or_above(last.field, [&](double) { return al; });
    fronts.push_back(f);
  }

  // Remaining strata share one run.
  if (!alphas.empty()) {
    auto ds = run_levels(model, P0, opts.a, opts.x0, alphas, rs, nullptr);
    for (std::size_t k = 0; k < ds.size(); ++k) {
      ExtractedWave w = classify_limit(ds[k], cop);
      if (w.classification == WaveKind::undecided) {
        const double ux0 = rep.plateaus[k + 1].state.profile.at(opts.x0);
        const double lx0 = k + 2 < rep.plateaus.size() ? rep.plateaus[k + 2].state.profile.at(opts.x0) : 0.0;
        w = classify_with_retry(ux0, lx0, ds[k], true);
      }
      strata.push_back(std::move(w));
    }
  }

  const std::size_t nwaves = std::min(strata.size(), rep.plateaus.size() - 1);
  for (std::size_t k = 0; k < strata.size(); ++k) {
    WaveReport wr;
    wr.wave = std::move(strata[k]);
    wr.upper = static_cast<int>(k);
    wr.lower = static_cast<int>(k + 1);
    wr.front_position = k < fronts.size() ? fronts[k] : 0.0;
    wr.pulsating_ok = wr.wave.classification == WaveKind::pulsating_wave && wr.wave.recurrence_residual >= 0 &&
                      wr.wave.recurrence_residual <= opts.recurrence_tol &&
                      wr.wave.min_time_derivative >= -opts.monotone_tol;
    if (wr.wave.classification != WaveKind::pulsating_wave && rep.undecided_stratum < 0) {
      rep.complete = false;
      rep.undecided_stratum = static_cast<int>(k) + 1;
      rep.note += "stratum " + std::to_string(k + 1) + ": " + wr.wave.diagnostics + "; ";
    }
    if (opts.verify_steepness && k < nwaves && wr.wave.classification == WaveKind::pulsating_wave)
      verify_steepness(model, wr, rep.plateaus[k].state, rep.plateaus[k + 1].state, opts);
    rep.speeds.push_back(wr.wave.frame_speed_c);
    rep.verdicts.pulsating_ok.push_back(wr.pulsating_ok);
    rep.waves.push_back(std::move(wr));
  }

  // Interior plateau stability and isolation.
  for (std::size_t k = 1; k + 1 < rep.plateaus.size(); ++k) {
    auto& pr = rep.plateaus[k];
    pr.stable_from_below = pr.state.stability.mu0 >= -1e-6;
    pr.marginal = std::abs(pr.state.stability.mu0) <= 1e-6;
    if (opts.check_isolation) pr.isolation = is_isolated_below(pr.state, model);
  }

  // Verdicts.
  auto& v = rep.verdicts;
  v.ordering_ok = true;
  for (std::size_t k = 0; k + 1 < rep.plateaus.size(); ++k)
    for (std::size_t i = 0; i < M; ++i)
      v.ordering_ok &= rep.plateaus[k + 1].state.profile[i] < rep.plateaus[k].state.profile[i];
  v.speed_ordering_ok = !rep.speeds.empty() && rep.speeds.front() > 0;
  for (std::size_t k = 0; k + 1 < rep.speeds.size(); ++k)
    v.speed_ordering_ok &= rep.speeds[k] <= rep.speeds[k + 1] * (1 + 1e-3);
  v.steepness_ok = true;
  for (const auto& w : rep.waves) v.steepness_ok &= w.steepness != "not_steeper";
  bool stable = true;
  for (std::size_t k = 1; k + 1 < rep.plateaus.size(); ++k) stable &= rep.plateaus[k].stable_from_below;
  v.minimality_ok = v.steepness_ok && stable && rep.complete;

  if (rep.complete && !rep.waves.empty()) {
    const double C = opts.outer_margin;
    const Profile& u = last.field;
    const double x_first = rep.waves.front().front_position, x_last = rep.waves.back().front_position;
    double left = 0.0, right = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double x = u.x(i);
      if (x <= x_first - C) left = std::max(left, std::abs(u[i] - P0.at(x)));
      if (x >= x_last + C) right = std::max(right, std::abs(u[i]));
    }
    v.outer_ok = left <= opts.delta && right <= opts.delta;

    // Interior plateau widths between consecutive fronts.
    for (std::size_t k = 1; k + 1 < rep.plateaus.size() && k < rep.waves.size(); ++k) {
      WidthReport wr;
      wr.plateau = static_cast<int>(k);
      const Profile& hi = rep.plateaus[k - 1].state.profile;
      const Profile& mid = rep.plateaus[k].state.profile;
      const Profile& lo = rep.plateaus[k + 1].state.profile;
      auto width_at = [&](double t) {
        const Snapshot& s = nearest_snapshot(rep.trajectory, t);
        const double xa = rightmost_at_or_above(s.field, [&](double x) { return 0.5 * (hi.at(x) + mid.at(x)); });
        const double xb = rightmost_at_or_above(s.field, [&](double x) { return 0.5 * (mid.at(x) + lo.at(x)); });
        return std::pair{s.t, xb - xa};
      };
      std::tie(wr.t1, wr.w1) = width_at(0.5 * T);
      std::tie(wr.t2, wr.w2) = width_at(T);
      wr.rate = wr.t2 > wr.t1 ? (wr.w2 - wr.w1) / (wr.t2 - wr.t1) : 0.0;
      wr.expected = rep.speeds[k] - rep.speeds[k - 1];
      rep.widths.push_back(wr);
    }
  }
  return rep;
}

UniquenessReport uniqueness_probe(const ReactionModel& model, const Profile& p, const std::vector<double>& x0_list,
                                  const std::vector<double>& a_list, const TerraceOptions& base, int jobs) {
  UniquenessReport u;
  if (x0_list.empty() || a_list.empty()) throw ConfigError("uniqueness", "need observation points and shifts");
  std::vector<std::pair<double, double>> combos;
  for (double x0 : x0_list)
    for (double a : a_list) combos.emplace_back(x0, a);
  u.reports.resize(combos.size());
  std::vector<std::string> errors(combos.size());
  auto work = [&](std::size_t k) {
    TerraceOptions o = base;
    o.x0 = combos[k].first;
    o.a = combos[k].second;
    try {
      u.reports[k] = assemble(model, p, o);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  };
  const std::size_t nthreads = static_cast<std::size_t>(std::max(1, jobs));
  for (std::size_t start = 0; start < combos.size(); start += nthreads) {
    std::vector<std::thread> pool;
    for (std::size_t k = start; k < std::min(combos.size(), start + nthreads); ++k) {
      if (nthreads == 1) work(k);
      else pool.emplace_back(work, k);
    }
    for (auto& t : pool) t.join();
  }
  for (auto& c : combos) {
    u.x0s.push_back(c.first);
    u.as.push_back(c.second);
  }
  for (std::size_t k = 0; k < combos.size(); ++k)
    if (!errors[k].empty()) u.disagreements.push_back("run " + std::to_string(k) + " failed: " + errors[k]);

  const TerraceReport& ref = u.reports.front();
  u.same_n = true;
  for (std::size_t k = 0; k < u.reports.size(); ++k) {
    const auto& r = u.reports[k];
    if (!r.complete) u.disagreements.push_back("run " + std::to_string(k) + " incomplete: " + r.note);
    if (r.N() != ref.N() || r.plateaus.size() != ref.plateaus.size()) {
      u.same_n = false;
      u.disagreements.push_back("run " + std::to_string(k) + " has N = " + std::to_string(r.N()));
      continue;
    }
    for (std::size_t j = 0; j < r.plateaus.size(); ++j) {
      const double d = max_abs_diff(r.plateaus[j].state.profile, ref.plateaus[j].state.profile);
      u.max_plateau_distance = std::max(u.max_plateau_distance, d);
      if (d > base.delta)
        u.disagreements.push_back("run " + std::to_string(k) + " plateau " + std::to_string(j) + " differs by " +
                                  fmt_num(d));
    }
    for (std::size_t j = 0; j < r.speeds.size(); ++j) {
      const double rel = std::abs(r.speeds[j] - ref.speeds[j]) / std::max(std::abs(ref.speeds[j]), 1e-300);
      u.max_speed_rel_diff = std::max(u.max_speed_rel_diff, rel);
      if (rel > 0.02)
        u.disagreements.push_back("run " + std::to_string(k) + " speed " + std::to_string(j + 1) + " differs by " +
                                  fmt_num(100 * rel) + "%");
    }
  }
  u.pass = u.same_n && u.disagreements.empty();
  return u;
}

nlohmann::json to_json(const TerraceReport& rep) {
  using nlohmann::json;
  json j;
  j["N"] = rep.N();
  j["complete"] = rep.complete;
  if (rep.undecided_stratum >= 0) j["undecided_stratum"] = rep.undecided_stratum;
  if (!rep.note.empty()) j["note"] = rep.note;
  j["x0"] = rep.x0;
  j["a"] = rep.a;
  json pl = json::array();
  for (const auto& p : rep.plateaus) {
    json o{{"mu0", p.state.stability.mu0},
           {"max", p.state.profile.max()},
           {"min", p.state.profile.min()},
           {"residual", p.state.residual},
           {"stable_from_below", p.stable_from_below},
           {"marginal", p.marginal},
           {"stability_below", to_string(p.state.stability.below)},
           {"stability_above", to_string(p.state.stability.above)}};
    if (p.isolation) o["isolation"] = to_string(p.isolation->verdict);
    pl.push_back(std::move(o));
  }
  j["plateaus"] = std::move(pl);
  json wv = json::array();
  for (const auto& w : rep.waves) {
    json o{{"classification", to_string(w.wave.classification)},
           {"alpha", w.wave.alpha},
           {"c", w.wave.frame_speed_c},
           {"T", w.wave.period_T},
           {"tau_spread", w.wave.tau_spread},
           {"front_position", w.front_position},
           {"residuals",
            {{"recurrence", w.wave.recurrence_residual}, {"min_time_derivative", w.wave.min_time_derivative}}},
           {"drift", {{"tail_ratio", w.wave.drift.tail_ratio}, {"decaying", w.wave.drift.decaying},
                      {"error_bar", w.wave.drift.error_bar}}},
           {"steepness", w.steepness},
           {"pulsating_ok", w.pulsating_ok},
           {"diagnostics", w.wave.diagnostics}};
    if (!w.steepness_note.empty()) o["steepness_note"] = w.steepness_note;
    if (w.bvp_speed != 0.0) o["bvp_speed"] = w.bvp_speed;
    wv.push_back(std::move(o));
  }
  j["waves"] = std::move(wv);
  j["speeds"] = rep.speeds;
  json wd = json::array();
  for (const auto& w : rep.widths)
    wd.push_back({{"plateau", w.plateau}, {"t1", w.t1}, {"t2", w.t2}, {"w1", w.w1}, {"w2", w.w2},
                  {"rate", w.rate}, {"expected", w.expected}});
  j["plateau_widths"] = std::move(wd);
  j["verdicts"] = {{"ordering_ok", rep.verdicts.ordering_ok},
                   {"speed_ordering_ok", rep.verdicts.speed_ordering_ok},
                   {"steepness_ok", rep.verdicts.steepness_ok},
                   {"minimality_ok(restricted)", rep.verdicts.minimality_ok},
                   {"outer_ok", rep.verdicts.outer_ok},
                   {"pulsating_ok", rep.verdicts.pulsating_ok}};
  return j;
}

void write_frame_csv(const std::string& path, const ExtractedWave& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("output", "cannot open " + path);
  out << "t,x,u\n";
  for (const auto& s : w.profile_history)
    for (std::size_t i = 0; i < s.field.size(); ++i)
      out << fmt_num(s.t) << ',' << fmt_num(s.field.x(i)) << ',' << fmt_num(s.field[i]) << '\n';
}

void write_drift_csv(const std::string& path, const DriftEstimate& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("output", "cannot open " + path);
  out << "t,m,error_bar\n";
  for (std::size_t k = 0; k < d.t.size(); ++k)
    out << fmt_num(d.t[k]) << ',' << fmt_num(d.m[k]) << ',' << fmt_num(d.error_bar) << '\n';
}

}  // namespace tlab
