#pragma once

#include <string_view>
#include <vector>

#include "tlab/profile.hpp"
#include "tlab/reaction.hpp"

namespace tlab {

enum class Verdict { stable, unstable, marginal };
std::string_view to_string(Verdict v);

/// Sign of mu0 outside the band |mu0| <= band decides stability on both sides.
Verdict verdict_from_mu0(double mu0, double band = 1e-6);

struct Stability {
  double mu0 = 0.0;
  Verdict below = Verdict::marginal;
  Verdict above = Verdict::marginal;
};

struct StationaryState {
  Profile profile;
  double residual = 0.0;
  Stability stability;
  bool negative_warning = false;
  int iterations = 0;
};

struct NewtonOptions {
  int max_iter = 60;
  int max_halvings = 30;
  double marginal_band = 1e-6;
};

/// Max-norm of the periodic centered-difference residual p'' + f(x, p).
double stationary_residual(const ReactionModel& model, const Profile& p);

StationaryState solve_periodic(const ReactionModel& model, const Profile& guess, double tol = 1e-10,
                               const NewtonOptions& opts = {});

/// Constant roots of u -> f(u) on [0, u_max] for x-independent models. A run of
/// exact zeros (e.g. below an ignition threshold) is returned by its endpoints.
std::vector<StationaryState> enumerate_constant_states(const ReactionModel& model, double u_max,
                                                       int scan_points = 4096,
                                                       int points_per_period = 256);

enum class Isolation { isolated, accumulation_suspected, inconclusive };
std::string_view to_string(Isolation v);

struct IsolationReport {
  Isolation verdict = Isolation::inconclusive;
  std::vector<double> eps;
  std::vector<double> distances;  ///< max-norm distance of each returned state to the input
};

IsolationReport is_isolated_below(const StationaryState& state, const ReactionModel& model,
                                  int probe_depth = 5);

}  // namespace tlab
