#pragma once

#include <span>
#include <vector>

#include "tlab/profile.hpp"
#include "tlab/reaction.hpp"

namespace tlab {

enum class EigenMethod { direct, variational, dirichlet };

struct EigenResult {
  double lambda = 0.0;
  double mu = 0.0;
  Profile eigenfunction;  ///< positive, max-normalized
  EigenMethod method = EigenMethod::direct;
  double dirichlet_R = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool floor_active = false;  ///< variational only: positivity floor kept binding
};

struct EigenOptions {
  double tol = 1e-12;
  int max_iter = 5000;
};

/// Principal eigenpair of  -phi'' + 2 lambda phi' - f_u(x, base(x)) phi = mu phi
/// with phi > 0 and periodic, on the grid of `base`.
EigenResult principal_eigenvalue(const ReactionModel& model, const Profile& base, double lambda,
                                 const EigenOptions& opts = {});

struct VariationalOptions {
  double floor = 1e-6;  ///< eta >= floor * max(eta)
  int max_iter = 20000;
  double tol = 1e-14;
  int restarts = 3;
  int memory = 20;
};

/// Minimizes the Rayleigh-type quotient
///   ( int eta'^2 - f_u(x, base) eta^2 + lambda^2 ( int eta^2 - L^2 / int eta^-2 ) ) / int eta^2
/// over positive periodic eta. The minimum equals the direct principal eigenvalue.
EigenResult nadin_variational(const ReactionModel& model, const Profile& base, double lambda,
                              const VariationalOptions& opts = {});

/// Same quotient for an explicit potential V(x) = f_u(x, base(x)).
double nadin_quotient(std::span<const double> eta, std::span<const double> potential, double dx,
                      double lambda);

struct CurvatureFit {
  double c2 = 0.0;
  double max_residual = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::vector<double> lambdas;
  std::vector<double> mus;
};

/// Least-squares fit of mu(lambda) - mu(0) = c2 lambda^2 on a symmetric grid.
CurvatureFit mu_curvature_check(const ReactionModel& model, const Profile& base,
                                std::span<const double> lambda_grid);
/// The fit alone, on given samples; lambdas must contain 0.
CurvatureFit fit_curvature(std::span<const double> lambdas, std::span<const double> mus);

/// Principal pair of -psi'' - f_u(x, base) psi = mu psi on (-R, R), psi(+-R) = 0.
EigenResult dirichlet_eigenvalue(const ReactionModel& model, const Profile& base, double R,
                                 int points_per_period = 64);

struct SpreadingSpeed {
  double c_star_linear = 0.0;
  double lambda_star = 0.0;
  bool determinate = false;
};

/// Minimizes c(lambda) = (lambda^2 - mu_0(lambda)) / lambda where mu_0 is the
/// principal eigenvalue of the linearization at u = 0.
SpreadingSpeed linear_spreading_speed(const ReactionModel& model, int points_per_period = 256);

}  // namespace tlab
