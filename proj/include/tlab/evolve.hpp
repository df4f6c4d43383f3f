#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tlab/profile.hpp"
#include "tlab/reaction.hpp"

namespace tlab {

struct Domain {
  double x_left = 0.0;
  double x_right = 1.0;
  double dx = 1.0 / 64.0;

  std::size_t nodes() const;
  double x(std::size_t i) const { return x_left + static_cast<double>(i) * dx; }
  /// Nearest node index (clamped).
  std::size_t index_of(double x) const;
};

struct Snapshot {
  double t = 0.0;
  Profile field;
};

/// Time-ordered solution fields on a truncated line. Boundary conditions are
/// fixed: u = p(x) at the left end, u = 0 at the right end.
struct Trajectory {
  std::vector<Snapshot> snapshots;
  Domain domain;
  double a_shift = 0.0;
  std::string model_id;
  double dt = 0.0;
};

/// Heaviside-type data p(x) H(a - x) with H(0) = 1. Requires a margin of at
/// least `margin_periods` periods of p between a and each end of the domain.
Profile make_initial(const Profile& p, double a, const Domain& domain, double margin_periods = 10.0);

/// Largest dt keeping the explicit reaction map order-preserving on [u_lo, u_hi].
double max_monotone_dt(const ReactionModel& model, double u_lo, double u_hi);

/// min(0.5 / max|f_u|, dt_cap).
double default_dt(const ReactionModel& model, double u_max, double dt_cap = 0.01);

/// Observer hook, called after every time step (and once at t = 0).
class Observer {
 public:
  virtual ~Observer() = default;
  virtual std::string name() const = 0;
  virtual void observe(double t, std::span<const double> u, const Domain& domain) = 0;
};

struct RecordPolicy {
  double every = 0.5;  ///< snapshot spacing in time; <= 0 disables periodic snapshots
  std::vector<double> extra_times;  ///< additional snapshot times (nearest step)
};

/// IMEX integrator: explicit reaction, then implicit centered diffusion.
/// Both sub-steps are order-preserving when dt * max(-f_u) <= 1.
class Simulation {
 public:
  Simulation(const ReactionModel& model, const Profile& roof, Domain domain, double dt,
             Profile initial, double a_shift = 0.0, RecordPolicy policy = {});

  void step();
  void advance_to(double t_final, std::span<Observer* const> observers = {});

  double time() const { return t_; }
  long steps() const { return steps_; }
  std::span<const double> field() const { return u_; }
  const Trajectory& trajectory() const { return traj_; }
  Trajectory release() { return std::move(traj_); }
  double dt() const { return dt_; }

 private:
  void record();
  void notify(std::span<Observer* const> observers);

  const ReactionModel* model_;
  Domain domain_;
  double dt_;
  double t_ = 0.0;
  long steps_ = 0;
  std::vector<double> u_, rhs_;
  std::vector<double> xs_;
  double left_value_;
  // Thomas factors of (I - dt D2) on interior nodes.
  double r_;
  std::vector<double> cprime_, inv_denom_;
  RecordPolicy policy_;
  double next_record_ = 0.0;
  std::size_t next_extra_ = 0;
  Trajectory traj_;
};

/// One IMEX step applied to an explicit state vector (boundary values taken
/// from the vector's end entries and left untouched).
void imex_step(const ReactionModel& model, const Domain& domain, double dt, std::vector<double>& u);

/// Runs Heaviside data from a roof state p to t_final.
Trajectory run(const ReactionModel& model, const Profile& p, double a, const Domain& domain,
               double t_final, std::span<Observer* const> observers = {}, double dt = 0.0,
               RecordPolicy policy = {});

struct SpreadingReport {
  std::vector<double> times;
  std::vector<double> front_pos;   ///< rightmost x with u >= level
  double level = 1e-2;
  double c_lower_emp = 0.0;        ///< min of (front - a) / t over the tail window
  double c_upper_emp = 0.0;        ///< max of the same
  double c_upper_bound = 0.0;      ///< 2 sqrt(K)
  double t_enter = -1.0;           ///< from here on the ratio stays in [c_lower_emp, 2 sqrt K + margin]
  double supersolution_excess = 0.0;  ///< max of u - e^{-sqrt K (x - a - 2 sqrt K t)} max p
  /// Per c in c_grid at the final snapshot: sup_{x >= a + ct} u and sup_{x <= a + ct} |u - p|.
  std::vector<double> c_grid, sup_ahead, sup_behind;
  bool pass = false;
};

struct SpreadingOptions {
  double level = 1e-2;
  double t_min = 10.0;
  double margin = 0.1;
  double supersolution_tol = 1e-8;
  /// Tail window used for the empirical speeds, as a fraction of the final time.
  double tail_fraction = 0.5;
};

SpreadingReport spreading_monitor(const Trajectory& traj, const ReactionModel& model, const Profile& p,
                                  std::span<const double> c_grid = {}, const SpreadingOptions& opts = {});

void write_trajectory_csv(const std::string& path, const Trajectory& traj);

struct BumpReport {
  double R = 0.0;        ///< initial data p(x) on [-R, R], 0 elsewhere
  double t_final = 0.0;
  double window = 0.0;   ///< error measured on [-window, window]
  double error = 0.0;    ///< max |u(t_final) - p| there
  double tol = 0.0;
  bool holds = false;
};

/// Empirical check that compactly supported data below p converge locally
/// uniformly to p: evolves p on [-R, R] and measures the final local error.
BumpReport bump_invasion_check(const ReactionModel& model, const Profile& p, double R, double t_final,
                               double window, double tol = 1e-2, double dt = 0.0);

}  // namespace tlab
