#include "tlab/eigen.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>

#include "tlab/error.hpp"

namespace tlab {

namespace {

std::vector<double> potential_on(const ReactionModel& model, const Profile& base) {
  std::vector<double> v(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) v[i] = model.f_u(base.x(i), base[i]);
  return v;
}

Profile normalized(Profile p) {
  const double m = p.max();
  for (auto& v : p.values) v /= m;
  return p;
}

/// Solves a symmetric tridiagonal system with constant off-diagonal `off`.
std::vector<double> thomas(const std::vector<double>& diag, double off, std::vector<double> rhs) {
  const std::size_t n = diag.size();
  std::vector<double> c(n);
  double denom = diag[0];
  c[0] = off / denom;
  rhs[0] /= denom;
  for (std::size_t i = 1; i < n; ++i) {
    denom = diag[i] - off * c[i - 1];
    c[i] = off / denom;
    rhs[i] = (rhs[i] - off * rhs[i - 1]) / denom;
  }
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i] * rhs[i + 1];
  return rhs;
}

}  // namespace

EigenResult principal_eigenvalue(const ReactionModel& model, const Profile& base, double lambda,
                                 const EigenOptions& opts) {
  if (!base.periodic) throw ConfigError("base", "principal_eigenvalue needs a periodic base profile");
  const auto n = static_cast<Eigen::Index>(base.size());
  if (n < 3) throw ConfigError("base", "need at least 3 grid points");
  const double h = base.dx;
  if (std::abs(lambda) * h > 1.0)
    throw ConfigError("lambda", "|lambda| dx must not exceed 1 (grid too coarse for the drift)");
  const auto V = potential_on(model, base);

  const double ih2 = 1.0 / (h * h);
  const double drift = lambda / h;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    M(i, i) = 2.0 * ih2 - V[static_cast<std::size_t>(i)];
    M(i, (i + 1) % n) += -ih2 + drift;
    M(i, (i + n - 1) % n) += -ih2 - drift;
  }
  // Row sums of the off-diagonal part vanish, so Re(mu) >= min(-V).
  const double sigma = -*std::max_element(V.begin(), V.end()) - 1.0;
  Eigen::MatrixXd A = M;
  A.diagonal().array() -= sigma;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);

  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  double mu = sigma, prev = std::numeric_limits<double>::infinity();
  EigenResult res;
  res.lambda = lambda;
  res.method = EigenMethod::direct;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    Eigen::VectorXd y = lu.solve(x);
    mu = sigma + x.squaredNorm() / x.dot(y);
    x = y / y.cwiseAbs().maxCoeff();
    if (it > 2 && std::abs(mu - prev) <= opts.tol * (1.0 + std::abs(mu))) break;
    prev = mu;
  }
  res.iterations = it;
  res.residual = (M * x - mu * x).cwiseAbs().maxCoeff();
  if (it >= opts.max_iter) throw NoConvergence("principal_eigenvalue: inverse iteration stagnated", res.residual);
  if (x.minCoeff() <= 0.0)
    throw InternalError("principal_eigenvalue: leading eigenvector not positive (min " +
                        std::to_string(x.minCoeff()) + ")");
  res.mu = mu;
  res.eigenfunction = base;
  for (Eigen::Index i = 0; i < n; ++i) res.eigenfunction.values[static_cast<std::size_t>(i)] = x(i);
  res.eigenfunction = normalized(std::move(res.eigenfunction));
  return res;
}

double nadin_quotient(std::span<const double> eta, std::span<const double> V, double h, double lambda) {
  const std::size_t n = eta.size();
  const double L = h * static_cast<double>(n);
  double A = 0, B = 0, D = 0, P = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = eta[i];
    const double de = (eta[(i + 1) % n] - e) / h;
    A += h * e * e;
    B += h / (e * e);
    D += h * de * de;
    P += h * V[i] * e * e;
  }
  return (D - P + lambda * lambda * (A - L * L / B)) / A;
}

namespace {

/// Value and gradient of the discrete quotient.
double quotient_grad(const std::vector<double>& eta, const std::vector<double>& V, double h,
                     double lambda, std::vector<double>& g) {
  const std::size_t n = eta.size();
  const double L = h * static_cast<double>(n);
  const double l2 = lambda * lambda;
  double A = 0, B = 0, D = 0, P = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = eta[i];
    const double de = (eta[(i + 1) % n] - e) / h;
    A += h * e * e;
    B += h / (e * e);
    D += h * de * de;
    P += h * V[i] * e * e;
  }
  const double N = D - P + l2 * (A - L * L / B);
  g.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double e = eta[i];
    const double lap = (2.0 * e - eta[(i + 1) % n] - eta[(i + n - 1) % n]) / h;
    const double dA = 2.0 * h * e;
    const double dB = -2.0 * h / (e * e * e);
    const double dN = 2.0 * lap - 2.0 * h * V[i] * e + l2 * (dA + L * L / (B * B) * dB);
    g[i] = (dN * A - N * dA) / (A * A);
  }
  return N / A;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

EigenResult nadin_variational(const ReactionModel& model, const Profile& base, double lambda,
                              const VariationalOptions& opts) {
  if (!base.periodic) throw ConfigError("base", "nadin_variational needs a periodic base profile");
  const std::size_t n = base.size();
  const double h = base.dx;
  const auto V = potential_on(model, base);

  std::vector<double> eta(n, 1.0), g, g_new, trial(n);
  double q = quotient_grad(eta, V, h, lambda, g);
  std::deque<std::pair<std::vector<double>, std::vector<double>>> memory;
  auto project = [&](std::vector<double>& e) {
    const double floor = opts.floor * *std::max_element(e.begin(), e.end());
    bool active = false;
    for (auto& v : e)
      if (v < floor) {
        v = floor;
        active = true;
      }
    return active;
  };

  int failures = 0, quiet = 0, it = 0;
  bool floor_active = false;
  for (; it < opts.max_iter; ++it) {
    // Two-loop L-BFGS direction.
    std::vector<double> d = g;
    std::vector<double> alpha(memory.size());
    for (std::size_t k = memory.size(); k-- > 0;) {
      const auto& [s, y] = memory[k];
      alpha[k] = dot(s, d) / dot(y, s);
      for (std::size_t i = 0; i < n; ++i) d[i] -= alpha[k] * y[i];
    }
    double gamma = 1.0;
    if (!memory.empty()) gamma = dot(memory.back().first, memory.back().second) / dot(memory.back().second, memory.back().second);
    else gamma = 1.0 / (1.0 + std::sqrt(dot(g, g)));
    for (auto& v : d) v *= gamma;
    for (std::size_t k = 0; k < memory.size(); ++k) {
      const auto& [s, y] = memory[k];
      const double beta = dot(y, d) / dot(y, s);
      for (std::size_t i = 0; i < n; ++i) d[i] += s[i] * (alpha[k] - beta);
    }
    for (auto& v : d) v = -v;
    if (dot(g, d) >= 0) {
      memory.clear();
      d = g;
      for (auto& v : d) v = -v / (1.0 + std::sqrt(dot(g, g)));
    }

    double t = 1.0, q_new = q;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = eta[i] + t * d[i];
      floor_active = project(trial);
      double gd = 0;
      for (std::size_t i = 0; i < n; ++i) gd += g[i] * (trial[i] - eta[i]);
      q_new = quotient_grad(trial, V, h, lambda, g_new);
      if (q_new <= q + 1e-4 * gd || q_new <= q - 1e-15 * (1.0 + std::abs(q))) {
        accepted = q_new <= q;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      memory.clear();
      if (++failures > opts.restarts) break;
      continue;
    }
    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = trial[i] - eta[i];
      y[i] = g_new[i] - g[i];
    }
    if (dot(s, y) > 1e-300) {
      memory.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(memory.size()) > opts.memory) memory.pop_front();
    }
    const double change = q - q_new;
    eta.swap(trial);
    g.swap(g_new);
    q = q_new;
    quiet = (change <= opts.tol * (1.0 + std::abs(q))) ? quiet + 1 : 0;
    if (quiet >= 10) break;
  }

  // Scale-free stationarity measure: |grad Q| relative to the quotient's curvature scale.
  const double gnorm = std::sqrt(dot(g, g) * dot(eta, eta)) * h;
  if (quiet < 10 && gnorm > 1e-6 * (1.0 + std::abs(q)))
    throw NoConvergence("nadin_variational: descent stalled", gnorm);

  EigenResult res;
  res.lambda = lambda;
  res.mu = q;
  res.method = EigenMethod::variational;
  res.iterations = it;
  res.residual = gnorm;
  res.floor_active = floor_active;
  res.eigenfunction = base;
  res.eigenfunction.values = eta;
  res.eigenfunction = normalized(std::move(res.eigenfunction));
  return res;
}

CurvatureFit fit_curvature(std::span<const double> lambdas, std::span<const double> mus) {
  CurvatureFit fit;
  fit.lambdas.assign(lambdas.begin(), lambdas.end());
  fit.mus.assign(mus.begin(), mus.end());
  std::size_t zero = lambdas.size();
  for (std::size_t i = 0; i < lambdas.size(); ++i)
    if (lambdas[i] == 0.0) zero = i;
  if (zero == lambdas.size()) throw ConfigError("lambda_grid", "must contain 0");
  const double mu0 = mus[zero];
  double num = 0, den = 0, lmax = 0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double l2 = lambdas[i] * lambdas[i];
    num += l2 * (mus[i] - mu0);
    den += l2 * l2;
    lmax = std::max(lmax, std::abs(lambdas[i]));
  }
  fit.c2 = den > 0 ? num / den : 0.0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double r = mus[i] - mu0 - fit.c2 * lambdas[i] * lambdas[i];
    fit.max_residual = std::max(fit.max_residual, std::abs(r));
  }
  fit.threshold = 1e-3 * (1.0 + std::abs(fit.c2)) * lmax * lmax;
  fit.pass = fit.max_residual <= fit.threshold;
  return fit;
}

CurvatureFit mu_curvature_check(const ReactionModel& model, const Profile& base,
                                std::span<const double> lambda_grid) {
  if (lambda_grid.size() < 5) throw ConfigError("lambda_grid", "need at least 5 points");
  std::vector<double> sorted(lambda_grid.begin(), lambda_grid.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (std::abs(sorted[i] + sorted[sorted.size() - 1 - i]) > 1e-12)
      throw ConfigError("lambda_grid", "must be symmetric about 0");
  std::vector<double> mus;
  mus.reserve(lambda_grid.size());
  for (double l : lambda_grid) mus.push_back(principal_eigenvalue(model, base, l).mu);
  return fit_curvature(lambda_grid, mus);
}

EigenResult dirichlet_eigenvalue(const ReactionModel& model, const Profile& base, double R,
                                 int points_per_period) {
  const double L = model.period();
  if (R < L * (1.0 - 1e-12)) throw ConfigError("R", "half-width must be at least one period");
  const double h_target = L / points_per_period;
  const auto m = static_cast<std::size_t>(std::ceil(2.0 * R / h_target - 1e-9));
  const double h = 2.0 * R / static_cast<double>(m);
  const std::size_t n = m - 1;  // interior nodes
  std::vector<double> V(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = -R + static_cast<double>(i + 1) * h;
    V[i] = model.f_u(x, base.at(x));
  }
  const double ih2 = 1.0 / (h * h);
  Eigen::VectorXd diag(static_cast<Eigen::Index>(n)), sub(static_cast<Eigen::Index>(n - 1));
  for (std::size_t i = 0; i < n; ++i) diag(static_cast<Eigen::Index>(i)) = 2.0 * ih2 - V[i];
  sub.setConstant(-ih2);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NoConvergence("dirichlet_eigenvalue: tridiagonal QR failed", 0.0);
  const double mu = es.eigenvalues()(0);

  // Inverse iteration just below mu recovers the eigenvector.
  const double shift = mu - 1e-9 * (1.0 + std::abs(mu));
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = 2.0 * ih2 - V[i] - shift;
  std::vector<double> x(n, 1.0);
  for (int it = 0; it < 4; ++it) {
    x = thomas(d, -ih2, x);
    const double mx = *std::max_element(x.begin(), x.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
    for (auto& v : x) v /= mx;
  }
  EigenResult res;
  res.lambda = 0.0;
  res.mu = mu;
  res.method = EigenMethod::dirichlet;
  res.dirichlet_R = R;
  res.eigenfunction = Profile{std::vector<double>(m + 1, 0.0), h, -R, false};
  double r = 0;
  for (std::size_t i = 0; i < n; ++i) {
    res.eigenfunction.values[i + 1] = x[i];
    const double left = i > 0 ? x[i - 1] : 0.0, right = i + 1 < n ? x[i + 1] : 0.0;
    r = std::max(r, std::abs((2.0 * x[i] - left - right) * ih2 - V[i] * x[i] - mu * x[i]));
  }
  res.residual = r;
  res.eigenfunction = normalized(std::move(res.eigenfunction));
  return res;
}

SpreadingSpeed linear_spreading_speed(const ReactionModel& model, int points_per_period) {
  const double L = model.period();
  const Profile zero = Profile::constant(0.0, L, static_cast<std::size_t>(points_per_period));
  auto mu0 = [&](double l) { return principal_eigenvalue(model, zero, l).mu; };
  auto speed = [&](double l) { return (l * l - mu0(l)) / l; };

  SpreadingSpeed out;
  if (mu0(0.0) >= 0.0) return out;  // zero is not linearly unstable: no linear speed

  const double K = model.lipschitz();
  const double lmax = std::max(4.0, 4.0 * std::sqrt(K));
  const int grid = 80;
  std::vector<double> ls(grid), cs(grid);
  for (int j = 0; j < grid; ++j) {
    ls[j] = lmax * (j + 1) / grid;
    cs[j] = speed(ls[j]);
  }
  const auto jmin = static_cast<int>(std::min_element(cs.begin(), cs.end()) - cs.begin());
  if (jmin == grid - 1) return out;
  double a = jmin > 0 ? ls[jmin - 1] : ls[0] * 1e-3, b = ls[jmin + 1];
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = speed(x1), f2 = speed(x2);
  while (b - a > 1e-9) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = speed(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = speed(x2);
    }
  }
  out.lambda_star = 0.5 * (a + b);
  out.c_star_linear = speed(out.lambda_star);
  out.determinate = true;
  return out;
}

}  // namespace tlab
