#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tlab/profile.hpp"
#include "tlab/reaction.hpp"
#include "tlab/stationary.hpp"

namespace tlab {

/// Pulsating front U(z, x) on a truncated strip, x periodic. Row j holds
/// z_j = z_min + j h; columns are x_i = i h for i < nx, with h = L / nx.
/// End rows clamp to p_plus (z -> -inf) and p_minus (z -> +inf).
struct WaveSolution {
  std::vector<double> U;  ///< row-major, nz * nx
  std::size_t nz = 0, nx = 0;
  double z_min = 0.0;
  double h = 0.0;
  double L = 1.0;
  double speed_c = 0.0;
  double period_T = 0.0;
  Profile p_minus, p_plus;
  double x0 = 0.0;
  double alpha = 0.0;
  double strip_residual = 0.0;
  double tail_residual = 0.0;
  double monotonicity_defect = 0.0;  ///< max over columns of U(z+h) - U(z), >= 0
  int newton_iterations = 0;

  double z(std::size_t j) const { return z_min + static_cast<double>(j) * h; }
  double at(std::size_t j, std::size_t i) const { return U[j * nx + i]; }
  /// Linear in z on column i; end states outside the strip.
  double column_value(double z, std::size_t i) const;
};

struct WaveOptions {
  int points_per_period = 32;  ///< raised so that h <= 1/16
  double z_half = 0.0;         ///< <= 0: 30 + 10 / decay estimate
  double c_guess = 0.2;
  std::optional<double> fixed_speed;  ///< solve at this speed without a phase row
  double x0 = 0.0;
  double tol = 1e-9;
  int max_iter = 40;
  double seed_width = 2.0;
};

/// Newton on (d_x + d_z)^2 U + c U_z + f(x, U) = 0 with U(0, x0) = (p_minus(x0) + p_plus(x0)) / 2.
/// Throws NoWaveFound if Newton fails and OrientationError if the speed comes out negative.
WaveSolution solve_pulsating(const ReactionModel& model, const Profile& p_minus, const Profile& p_plus,
                             const WaveOptions& opts = {}, const WaveSolution* guess = nullptr);
WaveSolution solve_pulsating(const ReactionModel& model, const StationaryState& p_minus,
                             const StationaryState& p_plus, const WaveOptions& opts = {},
                             const WaveSolution* guess = nullptr);

/// Residual of the discrete strip equation at a given state (max-norm over interior rows).
double strip_residual(const ReactionModel& model, const WaveSolution& wave);

struct ShootResult {
  double c = 0.0;
  Profile profile;  ///< U(z) with U(0) = (u_minus + u_plus) / 2
  int bisections = 0;
};

struct ShootOptions {
  double dz = 1e-3;
  double z_max = 400.0;
  double eps = 1e-8;
  double c_tol = 1e-10;
  double bracket = 0.0;  ///< <= 0: 2 sqrt(max|f_u|) + 1
};

/// U'' + c U' + f(U) = 0 from the saddle at u_plus down to u_minus, bisecting on c.
ShootResult homogeneous_shoot(const ReactionModel& model, double u_minus, double u_plus, const ShootOptions& opts = {});

/// Front of U'' + c U' + f(U) = 0 at a prescribed speed (monostable steps admit
/// every c above the minimal one). Throws NoFrontInBracket if the orbit overshoots.
Profile homogeneous_profile(const ReactionModel& model, double u_minus, double u_plus, double c,
                            const ShootOptions& opts = {});

/// max |u(t, x - L) - u(t + T, x)| with u(t, x) = U(x - c t, x), sampled at
/// times that are multiples of h / c over one period. `c_override` replaces the
/// speed used to rebuild u (T stays L / speed_c).
double pulsating_recurrence_residual(const WaveSolution& wave, double c_override = 0.0);

/// max |U(z, x) - mean_x U(z, .)|: zero for waves of x-independent media.
double homogeneous_reduction_residual(const WaveSolution& wave);

nlohmann::json wave_header(const WaveSolution& wave);
void write_wave_csv(const std::string& path, const WaveSolution& wave);

}  // namespace tlab
