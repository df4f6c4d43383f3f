#include "tlab/wavebvp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "tlab/error.hpp"
#include "tlab/io.hpp"

namespace tlab {

double WaveSolution::column_value(double zq, std::size_t i) const {
  const double s = (zq - z_min) / h;
  if (s <= 0) return s < -0.5 ? p_plus[i] : at(0, i);
  if (s >= static_cast<double>(nz - 1)) return s > static_cast<double>(nz) - 0.5 ? p_minus[i] : at(nz - 1, i);
  const auto j = static_cast<std::size_t>(s);
  const double w = s - static_cast<double>(j);
  return (1 - w) * at(j, i) + w * at(j + 1, i);
}

namespace {

struct Strip {
  std::size_t nz, nx;
  double h;
  std::vector<double> xs, pm, pp;
  // Interior unknowns are rows 1..nz-2 of the full grid; rows 0 and nz-1, nz
  // (one ghost past the right end for the one-sided z difference) are clamped.
  double val(const std::vector<double>& U, long j, std::size_t i) const {
    if (j <= 0) return pp[i];
    if (j >= static_cast<long>(nz) - 1) return pm[i];
    return U[static_cast<std::size_t>(j) * nx + i];
  }
};

double pde_row(const ReactionModel& model, const Strip& s, const std::vector<double>& U, double c, long j,
               std::size_t i) {
  const std::size_t ip = (i + 1) % s.nx, im = (i + s.nx - 1) % s.nx;
  const double u = s.val(U, j, i);
  const double h = s.h;
  const double diff = (s.val(U, j + 1, ip) - 2 * u + s.val(U, j - 1, im)) / (h * h);
  const double uz = (-3 * u + 4 * s.val(U, j + 1, i) - s.val(U, j + 2, i)) / (2 * h);
  return diff + c * uz + model.f(s.xs[i], u);
}

double mean_fu(const ReactionModel& model, const Strip& s, const std::vector<double>& state) {
  double m = 0.0;
  for (std::size_t i = 0; i < s.nx; ++i) m += model.f_u(s.xs[i], state[i]);
  return m / static_cast<double>(s.nx);
}

double decay_estimate(double c, double fm, double fp) {
  c = std::abs(c);
  double ahead, behind;
  if (fm < 0) ahead = 0.5 * (c + std::sqrt(c * c - 4 * fm));
  else ahead = c * c >= 4 * fm ? 0.5 * (c - std::sqrt(c * c - 4 * fm)) : 0.5 * c;
  if (fp < 0) behind = 0.5 * (-c + std::sqrt(c * c - 4 * fp));
  else behind = 0.5 * c;
  return std::max(std::min(ahead, behind), 0.05);
}

}  // namespace

double strip_residual(const ReactionModel& model, const WaveSolution& w) {
  Strip s{w.nz, w.nx, w.h, {}, w.p_minus.values, w.p_plus.values};
  s.xs.resize(w.nx);
  for (std::size_t i = 0; i < w.nx; ++i) s.xs[i] = static_cast<double>(i) * w.h;
  double r = 0.0;
  for (long j = 1; j + 1 < static_cast<long>(w.nz); ++j)
    for (std::size_t i = 0; i < w.nx; ++i) r = std::max(r, std::abs(pde_row(model, s, w.U, w.speed_c, j, i)));
  return r;
}

WaveSolution solve_pulsating(const ReactionModel& model, const Profile& p_minus_in, const Profile& p_plus_in,
                             const WaveOptions& opts, const WaveSolution* guess) {
  const double L = model.period();
  std::size_t nx = static_cast<std::size_t>(std::max(opts.points_per_period, 4));
  while (L / static_cast<double>(nx) > 1.0 / 16.0 + 1e-15) nx *= 2;
  if (guess) nx = guess->nx;
  const double h = L / static_cast<double>(nx);

  Strip s;
  s.nx = nx;
  s.h = h;
  s.xs.resize(nx);
  s.pm.resize(nx);
  s.pp.resize(nx);
  for (std::size_t i = 0; i < nx; ++i) {
    s.xs[i] = static_cast<double>(i) * h;
    s.pm[i] = p_minus_in.at(s.xs[i]);
    s.pp[i] = p_plus_in.at(s.xs[i]);
    if (!(s.pm[i] < s.pp[i])) throw ConfigError("end_states", "p_minus must lie strictly below p_plus");
  }

  double c = guess ? guess->speed_c : opts.fixed_speed.value_or(opts.c_guess);
  double z_half = opts.z_half;
  if (guess) z_half = -guess->z_min;
  if (z_half <= 0) z_half = 30.0 + 10.0 / decay_estimate(c, mean_fu(model, s, s.pm), mean_fu(model, s, s.pp));
  const long half_rows = static_cast<long>(std::ceil(z_half / h));
  s.nz = static_cast<std::size_t>(2 * half_rows + 1);
  const double z_min = -static_cast<double>(half_rows) * h;
  const std::size_t nz = s.nz;
  const std::size_t j0 = static_cast<std::size_t>(half_rows);
  long ii0 = std::lround(opts.x0 / h) % static_cast<long>(nx);
  if (ii0 < 0) ii0 += static_cast<long>(nx);
  const std::size_t i0 = static_cast<std::size_t>(ii0);
  const double alpha = 0.5 * (s.pm[i0] + s.pp[i0]);
  const bool free_speed = !opts.fixed_speed.has_value();

  std::vector<double> U(nz * nx);
  for (std::size_t j = 0; j < nz; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      const double zj = z_min + static_cast<double>(j) * h;
      if (guess && guess->nz == nz) {
        U[j * nx + i] = guess->at(j, i);
      } else {
        const double wgt = 0.5 * (1.0 - std::tanh(zj / opts.seed_width));
        U[j * nx + i] = s.pm[i] + (s.pp[i] - s.pm[i]) * wgt;
      }
    }
  for (std::size_t i = 0; i < nx; ++i) {
    U[i] = s.pp[i];
    U[(nz - 1) * nx + i] = s.pm[i];
  }

  // Unknowns: rows 1..nz-2, then c.
  const long jlo = 1, jhi = static_cast<long>(nz) - 2;
  const std::size_t nrow = static_cast<std::size_t>(jhi - jlo + 1);
  const std::size_t nu = nrow * nx;
  const std::size_t n = nu + (free_speed ? 1 : 0);
  auto idx = [&](long j, std::size_t i) { return static_cast<std::size_t>(j - jlo) * nx + i; };

  auto residual = [&](const std::vector<double>& Uc, double cc, Eigen::VectorXd& F) {
    F.resize(static_cast<Eigen::Index>(n));
    for (long j = jlo; j <= jhi; ++j)
      for (std::size_t i = 0; i < nx; ++i)
        F[static_cast<Eigen::Index>(idx(j, i))] = pde_row(model, s, Uc, cc, j, i);
    if (free_speed) F[static_cast<Eigen::Index>(nu)] = Uc[j0 * nx + i0] - alpha;
    return F.lpNorm<Eigen::Infinity>();
  };

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;
  Eigen::VectorXd F, Fn;
  double res = residual(U, c, F);
  int it = 0;
  for (; it < opts.max_iter && !(res <= opts.tol); ++it) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(nu * 7 + nu + 1);
    const double ih2 = 1.0 / (h * h), i2h = 1.0 / (2 * h);
    for (long j = jlo; j <= jhi; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        const auto r = static_cast<int>(idx(j, i));
        const std::size_t ip = (i + 1) % nx, im = (i + nx - 1) % nx;
        auto add = [&](long jj, std::size_t col, double v) {
          if (jj >= jlo && jj <= jhi) trip.emplace_back(r, static_cast<int>(idx(jj, col)), v);
        };
        const double u = U[static_cast<std::size_t>(j) * nx + i];
        add(j, i, -2 * ih2 - 3 * c * i2h + model.f_u(s.xs[i], u));
        add(j + 1, ip, ih2);
        add(j - 1, im, ih2);
        add(j + 1, i, 4 * c * i2h);
        add(j + 2, i, -c * i2h);
        if (free_speed) {
          const double uz = (-3 * u + 4 * s.val(U, j + 1, i) - s.val(U, j + 2, i)) * i2h;
          trip.emplace_back(r, static_cast<int>(nu), uz);
        }
      }
    if (free_speed) trip.emplace_back(static_cast<int>(nu), static_cast<int>(idx(static_cast<long>(j0), i0)), 1.0);
    Eigen::SparseMatrix<double> J(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    J.setFromTriplets(trip.begin(), trip.end());
    J.makeCompressed();
    if (!analyzed) {
      lu.analyzePattern(J);
      analyzed = true;
    }
    lu.factorize(J);
    if (lu.info() != Eigen::Success) throw NoWaveFound("singular strip Jacobian at Newton iteration " + std::to_string(it));
    const Eigen::VectorXd d = lu.solve(-F);
    if (!d.allFinite()) throw NoWaveFound("non-finite Newton update");

    double theta = 1.0;
    bool accepted = false;
    std::vector<double> Ut(U.size());
    for (int k = 0; k < 30; ++k, theta *= 0.5) {
      Ut = U;
      for (long j = jlo; j <= jhi; ++j)
        for (std::size_t i = 0; i < nx; ++i)
          Ut[static_cast<std::size_t>(j) * nx + i] += theta * d[static_cast<Eigen::Index>(idx(j, i))];
      const double ct = free_speed ? c + theta * d[static_cast<Eigen::Index>(nu)] : c;
      const double rt = residual(Ut, ct, Fn);
      if (std::isfinite(rt) && rt < (1.0 - 1e-4 * theta) * res) {
        U.swap(Ut);
        c = ct;
        F.swap(Fn);
        res = rt;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (!(res <= opts.tol))
    throw NoWaveFound("strip Newton did not converge (residual " + fmt_num(res) + " after " + std::to_string(it) +
                      " iterations)");
  if (free_speed && c < 0)
    throw OrientationError("wave runs toward the upper state; swap end states", c);

  WaveSolution w;
  w.U = std::move(U);
  w.nz = nz;
  w.nx = nx;
  w.z_min = z_min;
  w.h = h;
  w.L = L;
  w.speed_c = c;
  w.period_T = c != 0 ? L / c : std::numeric_limits<double>::infinity();
  w.p_minus = Profile{s.pm, h, 0.0, true};
  w.p_plus = Profile{s.pp, h, 0.0, true};
  w.x0 = static_cast<double>(i0) * h;
  w.alpha = free_speed ? alpha : w.at(j0, i0);
  w.strip_residual = res;
  for (std::size_t i = 0; i < nx; ++i) {
    w.tail_residual = std::max({w.tail_residual, std::abs(w.at(1, i) - s.pp[i]), std::abs(w.at(nz - 2, i) - s.pm[i])});
    for (std::size_t j = 0; j + 1 < nz; ++j)
      w.monotonicity_defect = std::max(w.monotonicity_defect, w.at(j + 1, i) - w.at(j, i));
  }
  w.newton_iterations = it;
  return w;
}

WaveSolution solve_pulsating(const ReactionModel& model, const StationaryState& p_minus,
                             const StationaryState& p_plus, const WaveOptions& opts, const WaveSolution* guess) {
  return solve_pulsating(model, p_minus.profile, p_plus.profile, opts, guess);
}

namespace {

// +1: orbit turns back above u_minus (c too large); -1: overshoots below u_minus.
int shoot_once(const ReactionModel& model, double c, double u_minus, double u_plus, const ShootOptions& o,
               std::vector<double>* path) {
  const double fp = model.f_u(0.0, u_plus);
  const double lam = 0.5 * (-c + std::sqrt(c * c - 4 * fp));
  double u = u_plus - o.eps, v = -o.eps * lam;
  auto rhs = [&](double uu, double vv, double& du, double& dv) {
    du = vv;
    dv = -c * vv - model.f(0.0, uu);
  };
  if (path) path->assign(1, u);
  const double h = o.dz;
  const long steps = static_cast<long>(o.z_max / h);
  for (long k = 0; k < steps; ++k) {
    double k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v;
    rhs(u, v, k1u, k1v);
    rhs(u + 0.5 * h * k1u, v + 0.5 * h * k1v, k2u, k2v);
    rhs(u + 0.5 * h * k2u, v + 0.5 * h * k2v, k3u, k3v);
    rhs(u + h * k3u, v + h * k3v, k4u, k4v);
    u += h / 6 * (k1u + 2 * k2u + 2 * k3u + k4u);
    v += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
    if (path) path->push_back(u);
    if (u < u_minus) return -1;
    if (v >= 0) return +1;
    if (u > u_plus) return +1;
  }
  return +1;  // still descending monotonically: no overshoot at this speed
}

// z = 0 at the midpoint crossing.
Profile centered_profile(std::vector<double> path, double u_minus, double u_plus, double dz) {
  const double mid_level = 0.5 * (u_minus + u_plus);
  std::size_t k0 = 0;
  while (k0 + 2 < path.size() && path[k0 + 1] > mid_level) ++k0;
  const double frac = path[k0] != path[k0 + 1] ? (path[k0] - mid_level) / (path[k0] - path[k0 + 1]) : 0.0;
  Profile p;
  p.values = std::move(path);
  p.dx = dz;
  p.x0 = -(static_cast<double>(k0) + frac) * dz;
  p.periodic = false;
  return p;
}

}  // namespace

ShootResult homogeneous_shoot(const ReactionModel& model, double u_minus, double u_plus, const ShootOptions& o) {
  if (!model.homogeneous()) throw UnsupportedModel("homogeneous_shoot needs an x-independent model");
  if (!(u_minus < u_plus)) throw ConfigError("u_minus", "u_minus must be below u_plus");
  if (!(model.f_u(0.0, u_plus) < 0)) throw NoFrontInBracket("upper state is not a saddle of the wave ODE");
  double C = o.bracket;
  if (C <= 0) C = 2.0 * std::sqrt(max_abs_fu(model, u_minus, u_plus, 1, 512)) + 1.0;
  double lo = -C, hi = C;
  if (shoot_once(model, lo, u_minus, u_plus, o, nullptr) != -1 || shoot_once(model, hi, u_minus, u_plus, o, nullptr) != +1)
    throw NoFrontInBracket("no sign change of the shooting outcome on [" + fmt_num(lo) + ", " + fmt_num(hi) + "]");
  ShootResult res;
  while (hi - lo > o.c_tol) {
    const double mid = 0.5 * (lo + hi);
    if (shoot_once(model, mid, u_minus, u_plus, o, nullptr) < 0) lo = mid;
    else hi = mid;
    ++res.bisections;
    if (res.bisections > 200) break;
  }
  res.c = 0.5 * (lo + hi);
  std::vector<double> path;
  shoot_once(model, hi, u_minus, u_plus, o, &path);
  res.profile = centered_profile(std::move(path), u_minus, u_plus, o.dz);
  return res;
}

Profile homogeneous_profile(const ReactionModel& model, double u_minus, double u_plus, double c,
                            const ShootOptions& o) {
  if (!model.homogeneous()) throw UnsupportedModel("homogeneous_profile needs an x-independent model");
  if (!(model.f_u(0.0, u_plus) < 0)) throw NoFrontInBracket("upper state is not a saddle of the wave ODE");
  std::vector<double> path;
  if (shoot_once(model, c, u_minus, u_plus, o, &path) < 0)
    throw NoFrontInBracket("orbit overshoots the lower state at c = " + fmt_num(c));
  if (path.back() < u_minus) path.back() = u_minus;
  return centered_profile(std::move(path), u_minus, u_plus, o.dz);
}

double pulsating_recurrence_residual(const WaveSolution& w, double c_override) {
  const double c_build = c_override > 0 ? c_override : w.speed_c;
  if (!(c_build > 0)) return std::numeric_limits<double>::infinity();
  const double T = w.period_T;
  double worst = 0.0;
  for (std::size_t k = 0; k <= w.nx; ++k) {
    const double t = static_cast<double>(k) * w.h / c_build;
    for (std::size_t i = 0; i < w.nx; ++i) {
      const double x = static_cast<double>(i) * w.h;
      // u(t, x - L) = U(x - L - c t, x); u(t + T, x) = U(x - c (t + T), x).
      const double lhs = w.column_value(x - w.L - c_build * t, i);
      const double rhs = w.column_value(x - c_build * (t + T), i);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  return worst;
}

double homogeneous_reduction_residual(const WaveSolution& w) {
  double worst = 0.0;
  for (std::size_t j = 0; j < w.nz; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < w.nx; ++i) m += w.at(j, i);
    m /= static_cast<double>(w.nx);
    for (std::size_t i = 0; i < w.nx; ++i) worst = std::max(worst, std::abs(w.at(j, i) - m));
  }
  return worst;
}

nlohmann::json wave_header(const WaveSolution& w) {
  return {{"c", w.speed_c},
          {"T", w.period_T},
          {"L", w.L},
          {"x0", w.x0},
          {"alpha", w.alpha},
          {"z_min", w.z_min},
          {"dz", w.h},
          {"nz", w.nz},
          {"nx", w.nx},
          {"residuals",
           {{"strip", w.strip_residual},
            {"tail", w.tail_residual},
            {"monotonicity_defect", w.monotonicity_defect},
            {"recurrence", pulsating_recurrence_residual(w)}}},
          {"newton_iterations", w.newton_iterations}};
}

void write_wave_csv(const std::string& path, const WaveSolution& w) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("output", "cannot open " + path);
  out << "z,x,U\n";
  for (std::size_t j = 0; j < w.nz; ++j)
    for (std::size_t i = 0; i < w.nx; ++i)
      out << fmt_num(w.z(j)) << ',' << fmt_num(static_cast<double>(i) * w.h) << ',' << fmt_num(w.at(j, i)) << '\n';
}

}  // namespace tlab
