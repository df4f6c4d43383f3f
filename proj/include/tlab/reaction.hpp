#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace tlab {

enum class Preset { kpp, allen_cahn, combustion, tristable, stacked_kpp_bistable, custom };

std::string_view to_string(Preset p);
Preset preset_from_string(std::string_view name);

/// mean + amp * sin(2 pi x / L + phase)
struct PeriodicCoefficient {
  double mean = 1.0;
  double amp = 0.0;
  double phase = 0.0;

  double operator()(double x, double period) const;
  double lo() const { return mean - std::abs(amp); }
  double hi() const { return mean + std::abs(amp); }
  bool constant() const { return amp == 0.0; }
};

/// The nonlinearity f(x, u), its u-derivative, its spatial period and the
/// bound K with f(x, u) <= K u on [0, max p]. Immutable once built.
class ReactionModel {
 public:
  using Fn = std::function<double(double, double)>;

  ReactionModel(Fn f, Fn f_u, double period, Preset tag, std::string name, bool homogeneous,
                nlohmann::json params = nlohmann::json::object());

  double f(double x, double u) const { return f_(x, u); }
  double f_u(double x, double u) const { return f_u_(x, u); }
  double period() const { return period_; }
  double lipschitz() const { return lipschitz_; }
  Preset tag() const { return tag_; }
  const std::string& name() const { return name_; }
  bool homogeneous() const { return homogeneous_; }
  /// Resolved parameters, defaults included.
  const nlohmann::json& params() const { return params_; }

  /// The same model translated in space: x -> x + shift.
  ReactionModel shifted(double shift) const;

 private:
  Fn f_;
  Fn f_u_;
  double period_;
  double lipschitz_;
  Preset tag_;
  std::string name_;
  bool homogeneous_;
  nlohmann::json params_;
};

/// Builds a preset. Parameters (all optional unless stated):
///   kpp:        L, r (number or {mean, amp, phase})           f = r(x) u (1 - u)
///   allen_cahn: L, a (required, values in (0,1))              f = u (1 - u) (u - a(x))
///   combustion: L, theta_ig (required), k                     f = k (u - theta)^2 (1 - u) above theta, 0 below
///   tristable:  L, theta, a1, a2, k1                          cubics on [0,theta] and [theta,1], C^1 at theta
///   stacked_kpp_bistable: L, theta1, b, s                     KPP on [0,theta1], bistable cubic above
///   custom:     L, expr (string in x, u, L) or table (CSV path with header x,u,f)
/// Throws ConfigError naming the offending field.
ReactionModel make_preset(Preset tag, const nlohmann::json& params);
ReactionModel make_preset(std::string_view tag, const nlohmann::json& params);

/// K = max of f(x,u)/u over a sampling grid of (0, u_max] (including the u -> 0
/// limit f_u(x,0)), floored at `floor`.
double lipschitz_bound(const ReactionModel& model, double u_max, int nx = 512, int nu = 512,
                       double floor = 1e-6);

/// max |f_u| over x in one period and u in [u_lo, u_hi].
double max_abs_fu(const ReactionModel& model, double u_lo, double u_hi, int nx = 128, int nu = 256);

/// Lower and upper bounds of f_u over the same sampling.
std::pair<double, double> fu_range(const ReactionModel& model, double u_lo, double u_hi,
                                   int nx = 128, int nu = 256);

struct SamplingSpec {
  int nx = 64;
  int nu = 64;
  double u_max = 1.0;
  int random_probes = 1000;
  unsigned seed = 12345;
  double fd_step = 1e-3;
};

struct ValidationEntry {
  std::string name;
  double violation;
  double tolerance;
  bool pass() const { return violation <= tolerance; }
};

struct ValidationReport {
  std::vector<ValidationEntry> entries;
  /// Observed convergence order of the centered difference for f_u.
  double fd_order = 0.0;
  bool pass() const;
  const ValidationEntry* find(std::string_view name) const;
};

ValidationReport validate(const ReactionModel& model, const SamplingSpec& grid = {});

}  // namespace tlab
