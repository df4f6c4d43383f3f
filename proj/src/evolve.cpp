#include "tlab/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "tlab/error.hpp"
#include "tlab/io.hpp"

namespace tlab {

std::size_t Domain::nodes() const {
  return static_cast<std::size_t>(std::llround((x_right - x_left) / dx)) + 1;
}

std::size_t Domain::index_of(double x) const {
  const double s = std::round((x - x_left) / dx);
  if (s <= 0) return 0;
  return std::min(static_cast<std::size_t>(s), nodes() - 1);
}

Profile make_initial(const Profile& p, double a, const Domain& domain, double margin_periods) {
  if (!p.periodic) throw ConfigError("p", "roof state must be periodic");
  if (!(domain.dx > 0) || !(domain.x_right > domain.x_left))
    throw ConfigError("domain", "empty domain or non-positive dx");
  const double L = p.length();
  const double margin = margin_periods * L;
  if (a - domain.x_left < margin || domain.x_right - a < margin)
    throw ConfigError("a", "interface needs at least " + fmt_num(margin_periods) +
                               " periods of margin to each domain end");
  const std::size_t n = domain.nodes();
  Profile out;
  out.values.resize(n);
  out.dx = domain.dx;
  out.x0 = domain.x_left;
  out.periodic = false;
  const double eps = 1e-9 * domain.dx;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = domain.x(i);
    out.values[i] = (x <= a + eps) ? p.at(x) : 0.0;
  }
  return out;
}

double max_monotone_dt(const ReactionModel& model, double u_lo, double u_hi) {
  const double m = max_abs_fu(model, u_lo, u_hi);
  return m > 0 ? 1.0 / m : std::numeric_limits<double>::infinity();
}

double default_dt(const ReactionModel& model, double u_max, double dt_cap) {
  const double m = max_abs_fu(model, 0.0, u_max);
  const double react = m > 0 ? 0.5 / m : std::numeric_limits<double>::infinity();
  return std::min(react, dt_cap);
}

Simulation::Simulation(const ReactionModel& model, const Profile& roof, Domain domain, double dt,
                       Profile initial, double a_shift, RecordPolicy policy)
    : model_(&model), domain_(domain), dt_(dt), policy_(std::move(policy)) {
  const std::size_t n = domain_.nodes();
  if (n < 3) throw ConfigError("domain", "need at least 3 grid nodes");
  if (initial.size() != n) throw ConfigError("initial", "initial field does not match the domain grid");
  if (!(dt_ > 0)) throw ConfigError("dt", "time step must be positive");
  const double u_hi = std::max(roof.max(), initial.max());
  const double limit = max_monotone_dt(model, 0.0, std::max(u_hi, 1e-12));
  if (dt_ > limit * (1.0 + 1e-12))
    throw ConfigError("dt", "dt = " + fmt_num(dt_) + " exceeds the order-preserving limit 1/max|f_u| = " +
                                fmt_num(limit));
  u_ = std::move(initial.values);
  rhs_.resize(n);
  xs_.resize(n);
  for (std::size_t i = 0; i < n; ++i) xs_[i] = domain_.x(i);
  left_value_ = roof.at(domain_.x_left);
  u_.front() = left_value_;
  u_.back() = 0.0;

  r_ = dt_ / (domain_.dx * domain_.dx);
  const std::size_t m = n - 2;
  cprime_.resize(m);
  inv_denom_.resize(m);
  const double b = 1.0 + 2.0 * r_, c = -r_;
  double prev = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double denom = b - (k == 0 ? 0.0 : c * prev);
    inv_denom_[k] = 1.0 / denom;
    cprime_[k] = c / denom;
    prev = cprime_[k];
  }

  traj_.domain = domain_;
  traj_.a_shift = a_shift;
  traj_.model_id = model.name();
  traj_.dt = dt_;
  std::sort(policy_.extra_times.begin(), policy_.extra_times.end());
  record();
}

void Simulation::record() {
  bool take = false;
  const double half = 0.5 * dt_;
  if (policy_.every > 0 && t_ >= next_record_ - half) {
    take = true;
    while (next_record_ <= t_ + half) next_record_ += policy_.every;
  }
  while (next_extra_ < policy_.extra_times.size() && policy_.extra_times[next_extra_] <= t_ + half) {
    take = true;
    ++next_extra_;
  }
  if (!take) return;
  if (!traj_.snapshots.empty() && traj_.snapshots.back().t >= t_) return;
  Snapshot s;
  s.t = t_;
  s.field.values = u_;
  s.field.dx = domain_.dx;
  s.field.x0 = domain_.x_left;
  s.field.periodic = false;
  traj_.snapshots.push_back(std::move(s));
}

void Simulation::step() {
  const std::size_t n = u_.size();
  const double dt = dt_;
  bool finite = true;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double v = u_[i] + dt * model_->f(xs_[i], u_[i]);
    finite &= std::isfinite(v);
    rhs_[i] = v;
  }
  if (!finite) throw IntegrationFailure("non-finite value in the reaction step", t_);
  rhs_[1] += r_ * u_.front();
  rhs_[n - 2] += r_ * u_.back();
  // Thomas forward sweep, then back substitution.
  const std::size_t m = n - 2;
  const double c = -r_;
  double prev = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    prev = (rhs_[k + 1] - (k == 0 ? 0.0 : c * prev)) * inv_denom_[k];
    rhs_[k + 1] = prev;
  }
  u_[m] = rhs_[m];
  for (std::size_t k = m - 1; k-- > 0;) u_[k + 1] = rhs_[k + 1] - cprime_[k] * u_[k + 2];
  t_ += dt;
  ++steps_;
  record();
}

void Simulation::notify(std::span<Observer* const> observers) {
  for (Observer* o : observers) {
    try {
      o->observe(t_, u_, domain_);
    } catch (const std::exception& e) {
      throw InternalError("observer '" + o->name() + "' failed at t = " + fmt_num(t_) + ": " + e.what());
    }
  }
}

void Simulation::advance_to(double t_final, std::span<Observer* const> observers) {
  if (steps_ == 0) notify(observers);
  const long target = static_cast<long>(std::llround(t_final / dt_));
  while (steps_ < target) {
    step();
    notify(observers);
  }
}

void imex_step(const ReactionModel& model, const Domain& domain, double dt, std::vector<double>& u) {
  const std::size_t n = u.size();
  if (n < 3 || n != domain.nodes()) throw ConfigError("u", "state does not match the domain grid");
  const double r = dt / (domain.dx * domain.dx);
  std::vector<double> d(n), cp(n);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = u[i] + dt * model.f(domain.x(i), u[i]);
  d[1] += r * u.front();
  d[n - 2] += r * u.back();
  const double b = 1.0 + 2.0 * r, c = -r;
  double prev_c = 0.0, prev_d = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double denom = b - (i == 1 ? 0.0 : c * prev_c);
    cp[i] = c / denom;
    d[i] = (d[i] - (i == 1 ? 0.0 : c * prev_d)) / denom;
    prev_c = cp[i];
    prev_d = d[i];
  }
  u[n - 2] = d[n - 2];
  for (std::size_t i = n - 2; i-- > 1;) u[i] = d[i] - cp[i] * u[i + 1];
}

Trajectory run(const ReactionModel& model, const Profile& p, double a, const Domain& domain,
               double t_final, std::span<Observer* const> observers, double dt, RecordPolicy policy) {
  if (dt <= 0) dt = default_dt(model, p.max());
  Simulation sim(model, p, domain, dt, make_initial(p, a, domain), a, std::move(policy));
  sim.advance_to(t_final, observers);
  return sim.release();
}

SpreadingReport spreading_monitor(const Trajectory& traj, const ReactionModel& model, const Profile& p,
                                  std::span<const double> c_grid, const SpreadingOptions& opts) {
  SpreadingReport rep;
  rep.level = opts.level;
  const double K = model.lipschitz();
  const double sk = std::sqrt(K);
  rep.c_upper_bound = 2.0 * sk;
  const double pmax = p.max();
  const double a = traj.a_shift;

  for (const Snapshot& s : traj.snapshots) {
    const auto& v = s.field.values;
    double front = traj.domain.x_left;
    for (std::size_t i = v.size(); i-- > 0;) {
      if (v[i] >= opts.level) {
        front = s.field.x(i);
        break;
      }
    }
    rep.times.push_back(s.t);
    rep.front_pos.push_back(front);
    if (s.t > 0) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double x = s.field.x(i);
        const double expo = -sk * (x - a - 2.0 * sk * s.t);
        if (expo > 700) continue;
        rep.supersolution_excess = std::max(rep.supersolution_excess, v[i] - std::exp(expo) * pmax);
      }
    }
  }
  if (rep.times.empty()) return rep;

  const double t_end = rep.times.back();
  const double t_tail = std::max(opts.t_min, (1.0 - opts.tail_fraction) * t_end);
  rep.c_lower_emp = std::numeric_limits<double>::infinity();
  rep.c_upper_emp = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < rep.times.size(); ++k) {
    if (rep.times[k] < t_tail || rep.times[k] <= 0) continue;
    const double ratio = (rep.front_pos[k] - a) / rep.times[k];
    rep.c_lower_emp = std::min(rep.c_lower_emp, ratio);
    rep.c_upper_emp = std::max(rep.c_upper_emp, ratio);
  }
  if (!std::isfinite(rep.c_lower_emp)) {
    rep.c_lower_emp = rep.c_upper_emp = 0.0;
    return rep;
  }
  // Earliest time after which the ratio stays inside the band.
  const double hi = rep.c_upper_bound + opts.margin;
  for (std::size_t k = rep.times.size(); k-- > 0;) {
    if (rep.times[k] < opts.t_min || rep.times[k] <= 0) break;
    const double ratio = (rep.front_pos[k] - a) / rep.times[k];
    if (ratio < rep.c_lower_emp - 1e-12 || ratio > hi) break;
    rep.t_enter = rep.times[k];
  }

  const Snapshot& last = traj.snapshots.back();
  for (double c : c_grid) {
    double ahead = 0.0, behind = 0.0;
    const double xc = a + c * last.t;
    for (std::size_t i = 0; i < last.field.size(); ++i) {
      const double x = last.field.x(i);
      if (x >= xc) ahead = std::max(ahead, last.field[i]);
      else behind = std::max(behind, std::abs(last.field[i] - p.at(x)));
    }
    rep.c_grid.push_back(c);
    rep.sup_ahead.push_back(ahead);
    rep.sup_behind.push_back(behind);
  }
  rep.pass = rep.c_lower_emp > 0 && rep.c_upper_emp <= hi && rep.t_enter >= 0 && rep.t_enter <= t_tail &&
             rep.supersolution_excess <= opts.supersolution_tol;
  return rep;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("output", "cannot open " + path);
  out << "t,x,u\n";
  for (const Snapshot& s : traj.snapshots)
    for (std::size_t i = 0; i < s.field.size(); ++i)
      out << fmt_num(s.t) << ',' << fmt_num(s.field.x(i)) << ',' << fmt_num(s.field[i]) << '\n';
}

BumpReport bump_invasion_check(const ReactionModel& model, const Profile& p, double R, double t_final,
                               double window, double tol, double dt) {
  const double L = model.period();
  const std::size_t M = p.size();
  const double spread = 2.0 * std::sqrt(model.lipschitz()) * t_final + 20.0 * L;
  Domain d;
  d.dx = L / static_cast<double>(M);
  d.x_left = -std::ceil((R + spread) / L) * L;
  d.x_right = -d.x_left;
  const std::size_t n = d.nodes();
  Profile init;
  init.dx = d.dx;
  init.x0 = d.x_left;
  init.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) init.values[i] = std::abs(d.x(i)) <= R ? p.at(d.x(i)) : 0.0;
  if (dt <= 0) dt = default_dt(model, p.max());
  RecordPolicy none;
  none.every = 0.0;
  Simulation sim(model, Profile::constant(0.0, L, M), d, dt, init, 0.0, none);
  sim.advance_to(t_final);
  BumpReport rep;
  rep.R = R;
  rep.t_final = t_final;
  rep.window = window;
  rep.tol = tol;
  const auto u = sim.field();
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(d.x(i)) <= window) rep.error = std::max(rep.error, std::abs(u[i] - p.at(d.x(i))));
  rep.holds = rep.error <= tol;
  return rep;
}

}  // namespace tlab
