#include "tlab/stationary.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "tlab/eigen.hpp"
#include "tlab/error.hpp"

namespace tlab {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::stable: return "stable";
    case Verdict::unstable: return "unstable";
    case Verdict::marginal: return "marginal";
  }
  return "marginal";
}

std::string_view to_string(Isolation v) {
  switch (v) {
    case Isolation::isolated: return "isolated";
    case Isolation::accumulation_suspected: return "accumulation_suspected";
    case Isolation::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

Verdict verdict_from_mu0(double mu0, double band) {
  if (mu0 > band) return Verdict::stable;
  if (mu0 < -band) return Verdict::unstable;
  return Verdict::marginal;
}

namespace {

Eigen::VectorXd residual_vector(const ReactionModel& model, const Profile& p) {
  const auto n = static_cast<Eigen::Index>(p.size());
  const double ih2 = 1.0 / (p.dx * p.dx);
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const double left = p.values[(k + p.size() - 1) % p.size()];
    const double right = p.values[(k + 1) % p.size()];
    r(i) = (left - 2.0 * p.values[k] + right) * ih2 + model.f(p.x(k), p.values[k]);
  }
  return r;
}

Stability stability_of(const ReactionModel& model, const Profile& p, double band) {
  Stability s;
  s.mu0 = principal_eigenvalue(model, p, 0.0).mu;
  s.below = s.above = verdict_from_mu0(s.mu0, band);
  return s;
}

}  // namespace

double stationary_residual(const ReactionModel& model, const Profile& p) {
  return residual_vector(model, p).cwiseAbs().maxCoeff();
}

StationaryState solve_periodic(const ReactionModel& model, const Profile& guess, double tol,
                               const NewtonOptions& opts) {
  if (!guess.periodic) throw ConfigError("guess", "must be periodic");
  if (!(tol > 0)) throw ConfigError("tol", "must be positive");
  if (std::abs(guess.length() - model.period()) > 1e-9 * model.period())
    throw ConfigError("guess", "period does not match the model period");
  const auto n = static_cast<Eigen::Index>(guess.size());
  const double ih2 = 1.0 / (guess.dx * guess.dx);

  Profile p = guess;
  Eigen::VectorXd r = residual_vector(model, p);
  double res = r.cwiseAbs().maxCoeff();
  int it = 0;
  for (; it < opts.max_iter && res > tol; ++it) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(i);
      J(i, i) = -2.0 * ih2 + model.f_u(p.x(k), p.values[k]);
      J(i, (i + 1) % n) += ih2;
      J(i, (i + n - 1) % n) += ih2;
    }
    Eigen::VectorXd step = J.fullPivLu().solve(r);
    if (!step.allFinite()) break;
    double s = 1.0;
    bool improved = false;
    for (int k = 0; k <= opts.max_halvings; ++k, s *= 0.5) {
      Profile trial = p;
      for (Eigen::Index i = 0; i < n; ++i) trial.values[static_cast<std::size_t>(i)] -= s * step(i);
      Eigen::VectorXd rt = residual_vector(model, trial);
      const double rn = rt.cwiseAbs().maxCoeff();
      if (std::isfinite(rn) && rn < res) {
        p = std::move(trial);
        r = std::move(rt);
        res = rn;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (!(res <= tol)) throw NoConvergence("solve_periodic: Newton did not converge", res);

  StationaryState st;
  st.profile = std::move(p);
  st.residual = res;
  st.iterations = it;
  st.negative_warning = st.profile.min() < 0.0;
  st.stability = stability_of(model, st.profile, opts.marginal_band);
  return st;
}

std::vector<StationaryState> enumerate_constant_states(const ReactionModel& model, double u_max,
                                                       int scan_points, int points_per_period) {
  const double L = model.period();
  for (double u : {0.13, 0.5, 0.77})
    for (int i = 1; i < 16; ++i)
      if (std::abs(model.f(L * i / 16.0, u * u_max) - model.f(0.0, u * u_max)) > 1e-14)
        throw UnsupportedModel("enumerate_constant_states: model depends on x");

  auto f = [&](double u) { return model.f(0.0, u); };
  std::vector<double> roots;
  double prev_u = 0.0, prev_f = f(0.0);
  bool in_zero_run = prev_f == 0.0;
  double run_end = 0.0;
  if (in_zero_run) roots.push_back(0.0);
  for (int j = 1; j <= scan_points; ++j) {
    const double u = u_max * j / scan_points;
    const double fu = f(u);
    if (fu == 0.0) {
      if (!in_zero_run) roots.push_back(u);
      in_zero_run = true;
      run_end = u;
    } else {
      if (in_zero_run) {
        // Locate the end of the zero run between the grid points.
        double a = run_end, b = u;
        for (int k = 0; k < 200 && b - a > 1e-15; ++k) {
          const double m = 0.5 * (a + b);
          (f(m) == 0.0 ? a : b) = m;
        }
        if (a != roots.back()) roots.push_back(a);
      }
      in_zero_run = false;
      if (prev_f != 0.0 && (prev_f < 0) != (fu < 0)) {
        double a = prev_u, b = u, fa = prev_f;
        for (int k = 0; k < 200 && b - a > 1e-15; ++k) {
          const double m = 0.5 * (a + b), fm = f(m);
          if (fm == 0.0) {
            a = b = m;
            break;
          }
          if ((fm < 0) == (fa < 0)) {
            a = m;
            fa = fm;
          } else {
            b = m;
          }
        }
        roots.push_back(0.5 * (a + b));
      }
    }
    prev_u = u;
    prev_f = fu;
  }
  if (in_zero_run && run_end != roots.back()) roots.push_back(run_end);

  std::vector<StationaryState> out;
  for (double r : roots) {
    StationaryState st;
    st.profile = Profile::constant(r, L, static_cast<std::size_t>(points_per_period));
    st.residual = std::abs(f(r));
    st.stability.mu0 = -model.f_u(0.0, r);
    st.stability.below = st.stability.above = verdict_from_mu0(st.stability.mu0);
    out.push_back(std::move(st));
  }
  return out;
}

IsolationReport is_isolated_below(const StationaryState& state, const ReactionModel& model, int probe_depth) {
  IsolationReport rep;
  const double same_tol = 1e-8;
  try {
    const auto eig = principal_eigenvalue(model, state.profile, 0.0);
    for (int k = 0; k < probe_depth; ++k) {
      // eps from 1e-2 down to 1e-6, geometric
      const double eps = probe_depth > 1 ? std::pow(10.0, -2.0 - 4.0 * k / (probe_depth - 1)) : 1e-2;
      Profile guess = state.profile;
      for (std::size_t i = 0; i < guess.size(); ++i) guess.values[i] -= eps * eig.eigenfunction.values[i];
      const auto st = solve_periodic(model, guess, std::max(1e-10, 10 * state.residual));
      rep.eps.push_back(eps);
      rep.distances.push_back(max_abs_diff(st.profile, state.profile));
    }
  } catch (const Error&) {
    rep.verdict = Isolation::inconclusive;
    return rep;
  }
  // Distinct states whose distance tracks eps are accumulating on the input;
  // distinct states at a fixed distance are separated by a gap.
  bool approaching = false, gapped = true;
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < rep.distances.size(); ++k) {
    const double d = rep.distances[k];
    if (d <= same_tol) continue;
    gap = std::min(gap, d);
    if (d <= 10.0 * rep.eps[k]) approaching = true;
  }
  if (approaching) {
    rep.verdict = Isolation::accumulation_suspected;
  } else {
    gapped = !std::isfinite(gap) || gap > 10.0 * rep.eps.back();
    rep.verdict = gapped ? Isolation::isolated : Isolation::inconclusive;
  }
  return rep;
}

}  // namespace tlab
