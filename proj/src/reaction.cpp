#include "tlab/reaction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <numbers>
#include <random>

#include "tlab/error.hpp"
#include "tlab/expression.hpp"
#include "tlab/io.hpp"

namespace tlab {

using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct PresetName {
  Preset tag;
  std::string_view name;
};
constexpr PresetName kPresetNames[] = {
    {Preset::kpp, "kpp"},
    {Preset::allen_cahn, "allen_cahn"},
    {Preset::combustion, "combustion"},
    {Preset::tristable, "tristable"},
    {Preset::stacked_kpp_bistable, "stacked_kpp_bistable"},
    {Preset::custom, "custom"},
};

double get_number(const json& params, const std::string& key, double fallback) {
  if (!params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (!v.is_number()) throw ConfigError(key, "must be a number");
  return v.get<double>();
}

double require_number(const json& params, const std::string& key) {
  if (!params.contains(key)) throw ConfigError(key, "required parameter missing");
  return get_number(params, key, 0.0);
}

PeriodicCoefficient get_coefficient(const json& params, const std::string& key,
                                    std::optional<double> fallback) {
  if (!params.contains(key)) {
    if (!fallback) throw ConfigError(key, "required parameter missing");
    return {*fallback, 0.0, 0.0};
  }
  const auto& v = params.at(key);
  if (v.is_number()) return {v.get<double>(), 0.0, 0.0};
  if (!v.is_object()) throw ConfigError(key, "must be a number or {mean, amp, phase}");
  PeriodicCoefficient c;
  c.mean = get_number(v, "mean", 0.0);
  if (!v.contains("mean")) throw ConfigError(key + ".mean", "required parameter missing");
  c.amp = get_number(v, "amp", 0.0);
  c.phase = get_number(v, "phase", 0.0);
  return c;
}

json coefficient_json(const PeriodicCoefficient& c) {
  if (c.constant()) return c.mean;
  return json{{"mean", c.mean}, {"amp", c.amp}, {"phase", c.phase}};
}

double get_period(const json& params) {
  const double L = get_number(params, "L", 1.0);
  if (!(L > 0) || !std::isfinite(L)) throw ConfigError("L", "period must be positive");
  return L;
}

/// Bilinear table on a periodic x grid and a u grid starting at 0; the u = 0
/// row is forced to zero.
struct Table {
  std::vector<double> xs, us;
  std::vector<double> f;  // f[iu * nx + ix]
  double period = 1.0;

  std::size_t nx() const { return xs.size(); }

  void locate(double x, double u, std::size_t& ix, double& wx, std::size_t& iu, double& wu) const {
    const double dx = period / static_cast<double>(nx());
    double s = std::fmod(x - xs[0], period);
    if (s < 0) s += period;
    s /= dx;
    ix = std::min(static_cast<std::size_t>(s), nx() - 1);
    wx = s - static_cast<double>(ix);
    const double uc = std::clamp(u, us.front(), us.back());
    auto it = std::upper_bound(us.begin(), us.end(), uc);
    iu = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - us.begin() - 1, 0,
                                                             static_cast<std::ptrdiff_t>(us.size()) - 2));
    wu = (u - us[iu]) / (us[iu + 1] - us[iu]);
  }
  double value(std::size_t iu, std::size_t ix) const { return f[iu * nx() + (ix % nx())]; }

  double eval(double x, double u) const {
    std::size_t ix, iu;
    double wx, wu;
    locate(x, u, ix, wx, iu, wu);
    const double lo = (1 - wx) * value(iu, ix) + wx * value(iu, ix + 1);
    const double hi = (1 - wx) * value(iu + 1, ix) + wx * value(iu + 1, ix + 1);
    return (1 - wu) * lo + wu * hi;
  }
  double eval_u(double x, double u) const {
    std::size_t ix, iu;
    double wx, wu;
    locate(x, u, ix, wx, iu, wu);
    const double lo = (1 - wx) * value(iu, ix) + wx * value(iu, ix + 1);
    const double hi = (1 - wx) * value(iu + 1, ix) + wx * value(iu + 1, ix + 1);
    return (hi - lo) / (us[iu + 1] - us[iu]);
  }
};

std::shared_ptr<const Table> load_table(const std::string& path, const json& params) {
  const auto csv = read_csv(path, {"x", "u", "f"});
  std::vector<double> xs = csv.columns[0], us = csv.columns[1];
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(us.begin(), us.end());
  us.erase(std::unique(us.begin(), us.end()), us.end());
  if (xs.size() < 2 || us.size() < 2) throw ConfigError("table", "needs at least a 2x2 grid");
  if (us.front() != 0.0) throw ConfigError("table", "u grid must start at 0");
  if (csv.columns[0].size() != xs.size() * us.size())
    throw ConfigError("table", "grid is not rectangular");
  const double dx = xs[1] - xs[0];
  double period = params.contains("L") ? get_period(params) : xs.back() - xs.front() + dx;
  // A closing column at x0 + L duplicates the first one.
  if (std::abs(xs.back() - xs.front() - period) < 1e-9 * period) xs.pop_back();
  if (std::abs(static_cast<double>(xs.size()) * dx - period) > 1e-9 * period)
    throw ConfigError("table", "x grid must be uniform and cover one period");
  auto t = std::make_shared<Table>();
  t->xs = xs;
  t->us = us;
  t->period = period;
  t->f.assign(xs.size() * us.size(), 0.0);
  for (std::size_t r = 0; r < csv.columns[0].size(); ++r) {
    const double x = csv.columns[0][r], u = csv.columns[1][r];
    auto ix = static_cast<std::size_t>(std::lround((x - xs[0]) / dx));
    if (ix >= xs.size()) continue;  // closing column
    auto iu = static_cast<std::size_t>(std::lower_bound(us.begin(), us.end(), u) - us.begin());
    t->f[iu * xs.size() + ix] = (iu == 0) ? 0.0 : csv.columns[2][r];
  }
  return t;
}

}  // namespace

std::string_view to_string(Preset p) {
  for (const auto& e : kPresetNames)
    if (e.tag == p) return e.name;
  return "custom";
}

Preset preset_from_string(std::string_view name) {
  for (const auto& e : kPresetNames)
    if (e.name == name) return e.tag;
  throw ConfigError("preset", "unknown preset `" + std::string(name) + "`");
}

double PeriodicCoefficient::operator()(double x, double period) const {
  if (amp == 0.0) return mean;
  return mean + amp * std::sin(kTwoPi * x / period + phase);
}

ReactionModel::ReactionModel(Fn f, Fn f_u, double period, Preset tag, std::string name,
                             bool homogeneous, json params)
    : f_(std::move(f)),
      f_u_(std::move(f_u)),
      period_(period),
      lipschitz_(0.0),
      tag_(tag),
      name_(std::move(name)),
      homogeneous_(homogeneous),
      params_(std::move(params)) {
  const double u_max = params_.is_object() && params_.contains("u_max") ? params_["u_max"].get<double>() : 1.0;
  lipschitz_ = lipschitz_bound(*this, u_max);
}

ReactionModel ReactionModel::shifted(double shift) const {
  auto f = f_;
  auto fu = f_u_;
  json p = params_;
  p["x_shift"] = shift + (params_.contains("x_shift") ? params_["x_shift"].get<double>() : 0.0);
  return ReactionModel([f, shift](double x, double u) { return f(x + shift, u); },
                       [fu, shift](double x, double u) { return fu(x + shift, u); }, period_, tag_,
                       name_, homogeneous_, p);
}

ReactionModel make_preset(std::string_view tag, const json& params) {
  return make_preset(preset_from_string(tag), params);
}

ReactionModel make_preset(Preset tag, const json& params_in) {
  const json params = params_in.is_null() ? json::object() : params_in;
  if (!params.is_object()) throw ConfigError("params", "must be an object");
  const double L = get_period(params);
  json resolved = params;
  resolved["L"] = L;

  switch (tag) {
    case Preset::kpp: {
      const auto r = get_coefficient(params, "r", 1.0);
      if (!(r.lo() > 0)) throw ConfigError("r", "growth rate must stay positive");
      resolved["r"] = coefficient_json(r);
      return ReactionModel([r, L](double x, double u) { return r(x, L) * u * (1.0 - u); },
                           [r, L](double x, double u) { return r(x, L) * (1.0 - 2.0 * u); }, L, tag,
                           "kpp", r.constant(), resolved);
    }
    case Preset::allen_cahn: {
      const auto a = get_coefficient(params, "a", std::nullopt);
      if (!(a.lo() > 0 && a.hi() < 1)) throw ConfigError("a", "a(x) must lie in (0,1)");
      resolved["a"] = coefficient_json(a);
      return ReactionModel(
          [a, L](double x, double u) { return u * (1.0 - u) * (u - a(x, L)); },
          [a, L](double x, double u) {
            const double ax = a(x, L);
            return (1.0 - 2.0 * u) * (u - ax) + u * (1.0 - u);
          },
          L, tag, "allen_cahn", a.constant(), resolved);
    }
    case Preset::combustion: {
      const double th = require_number(params, "theta_ig");
      const double k = get_number(params, "k", 1.0);
      if (!(th > 0 && th < 1)) throw ConfigError("theta_ig", "ignition threshold must lie in (0,1)");
      if (!(k > 0)) throw ConfigError("k", "must be positive");
      resolved["k"] = k;
      // k (u - theta)^2 (1 - u) is the cubic piece glued C^1 to zero at theta.
      return ReactionModel(
          [th, k](double, double u) { return u <= th ? 0.0 : k * (u - th) * (u - th) * (1.0 - u); },
          [th, k](double, double u) {
            return u <= th ? 0.0 : k * (2.0 * (u - th) * (1.0 - u) - (u - th) * (u - th));
          },
          L, tag, "combustion", true, resolved);
    }
    case Preset::tristable: {
      const double th = get_number(params, "theta", 0.5);
      const double a1 = get_number(params, "a1", 0.2);
      const double a2 = get_number(params, "a2", 0.4);
      const double k1 = get_number(params, "k1", 4.0);
      if (!(th > 0 && th < 1)) throw ConfigError("theta", "must lie in (0,1)");
      if (!(a1 > 0 && a1 < 1)) throw ConfigError("a1", "must lie in (0,1)");
      if (!(a2 > 0 && a2 < 1)) throw ConfigError("a2", "must lie in (0,1)");
      if (!(k1 > 0)) throw ConfigError("k1", "must be positive");
      const double r1 = a1 * th;
      const double r2 = th + a2 * (1.0 - th);
      const double k2 = k1 * th * (th - r1) / ((r2 - th) * (1.0 - th));
      resolved["theta"] = th;
      resolved["a1"] = a1;
      resolved["a2"] = a2;
      resolved["k1"] = k1;
      resolved["k2"] = k2;
      resolved["roots"] = {0.0, r1, th, r2, 1.0};
      return ReactionModel(
          [=](double, double u) {
            return u <= th ? k1 * u * (u - r1) * (th - u) : k2 * (u - th) * (u - r2) * (1.0 - u);
          },
          [=](double, double u) {
            if (u <= th) return k1 * ((2.0 * u - r1) * (th - u) - u * (u - r1));
            return k2 * ((2.0 * u - th - r2) * (1.0 - u) - (u - th) * (u - r2));
          },
          L, tag, "tristable", true, resolved);
    }
    case Preset::stacked_kpp_bistable: {
      const double th = get_number(params, "theta1", 0.5);
      const double b = get_number(params, "b", 0.2);
      const double s = get_number(params, "s", 2.0);
      if (!(th > 0 && th < 1)) throw ConfigError("theta1", "must lie in (0,1)");
      if (!(b > 0 && b < 0.5)) throw ConfigError("b", "must lie in (0,0.5) so the upper front advances");
      if (!(s > 0)) throw ConfigError("s", "must be positive");
      const double r = th + b * (1.0 - th);
      const double k = s * th / ((r - th) * (1.0 - th));
      resolved["theta1"] = th;
      resolved["b"] = b;
      resolved["s"] = s;
      resolved["k"] = k;
      resolved["roots"] = {0.0, th, r, 1.0};
      return ReactionModel(
          [=](double, double u) {
            return u <= th ? s * u * (th - u) : k * (u - th) * (u - r) * (1.0 - u);
          },
          [=](double, double u) {
            if (u <= th) return s * (th - 2.0 * u);
            return k * ((2.0 * u - th - r) * (1.0 - u) - (u - th) * (u - r));
          },
          L, tag, "stacked_kpp_bistable", true, resolved);
    }
    case Preset::custom: {
      if (params.contains("expr")) {
        if (!params["expr"].is_string()) throw ConfigError("expr", "must be a string");
        std::map<std::string, double> constants{{"L", L}};
        if (params.contains("constants")) {
          for (const auto& [k, v] : params["constants"].items()) {
            if (!v.is_number()) throw ConfigError("constants." + k, "must be a number");
            constants[k] = v.get<double>();
          }
        }
        auto e = std::make_shared<Expression>(Expression::parse(params["expr"].get<std::string>(), constants));
        auto d = std::make_shared<Expression>(e->derivative_u());
        bool homogeneous = true;
        for (double u : {0.1, 0.37, 0.8})
          for (int i = 1; i < 16; ++i)
            homogeneous = homogeneous && std::abs(e->eval(L * i / 16.0, u) - e->eval(0.0, u)) <= 1e-14;
        return ReactionModel([e](double x, double u) { return e->eval(x, u); },
                             [d](double x, double u) { return d->eval(x, u); }, L, tag, "custom",
                             homogeneous, resolved);
      }
      if (params.contains("table")) {
        auto t = load_table(params["table"].get<std::string>(), params);
        resolved["L"] = t->period;
        bool homogeneous = true;
        for (std::size_t iu = 0; iu < t->us.size(); ++iu)
          for (std::size_t ix = 1; ix < t->nx(); ++ix)
            homogeneous = homogeneous && t->value(iu, ix) == t->value(iu, 0);
        return ReactionModel([t](double x, double u) { return t->eval(x, u); },
                             [t](double x, double u) { return t->eval_u(x, u); }, t->period, tag,
                             "custom", homogeneous, resolved);
      }
      throw ConfigError("expr", "custom model needs `expr` or `table`");
    }
  }
  throw ConfigError("preset", "unknown preset");
}

double lipschitz_bound(const ReactionModel& model, double u_max, int nx, int nu, double floor) {
  const double L = model.period();
  double K = floor;
  for (int i = 0; i < nx; ++i) {
    const double x = L * i / nx;
    K = std::max(K, model.f_u(x, 0.0));
    auto g = [&](double u) { return model.f(x, u) / u; };
    int best = 1;
    for (int j = 1; j <= nu; ++j) {
      const double u = u_max * j / nu;
      if (g(u) > g(u_max * best / nu)) best = j;
    }
    K = std::max(K, g(u_max * best / nu));
    // Golden-section polish of the sampled maximum on its bracket.
    double lo = u_max * std::max(best - 1, 0) / nu, hi = u_max * std::min(best + 1, nu) / nu;
    if (lo <= 0.0) lo = 1e-3 * u_max / nu;
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 80 && hi - lo > 1e-14; ++it) {
      const double m1 = hi - r * (hi - lo), m2 = lo + r * (hi - lo);
      if (g(m1) < g(m2)) lo = m1;
      else hi = m2;
    }
    K = std::max(K, g(0.5 * (lo + hi)));
  }
  return K;
}

std::pair<double, double> fu_range(const ReactionModel& model, double u_lo, double u_hi, int nx, int nu) {
  const double L = model.period();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 0; i < nx; ++i) {
    const double x = L * i / nx;
    for (int j = 0; j <= nu; ++j) {
      const double u = u_lo + (u_hi - u_lo) * j / nu;
      const double d = model.f_u(x, u);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  }
  return {lo, hi};
}

double max_abs_fu(const ReactionModel& model, double u_lo, double u_hi, int nx, int nu) {
  auto [lo, hi] = fu_range(model, u_lo, u_hi, nx, nu);
  return std::max(std::abs(lo), std::abs(hi));
}

bool ValidationReport::pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.pass(); });
}

const ValidationEntry* ValidationReport::find(std::string_view name) const {
  for (const auto& e : entries)
    if (e.name == name) return &e;
  return nullptr;
}

namespace {

/// u-values where the glued presets switch formula (f_u continuous, f_uu not).
std::vector<double> kink_points(const ReactionModel& model) {
  std::vector<double> out;
  for (const char* key : {"theta_ig", "theta", "theta1"})
    if (model.params().is_object() && model.params().contains(key) && model.params()[key].is_number())
      out.push_back(model.params()[key].get<double>());
  return out;
}

}  // namespace

ValidationReport validate(const ReactionModel& model, const SamplingSpec& grid) {
  const double L = model.period();
  const auto kinks = kink_points(model);
  const double K = model.lipschitz();
  double periodic = 0, zero = 0, growth = 0, fd1 = 0;
  auto probe = [&](double x, double u) {
    const double fx = model.f(x, u);
    periodic = std::max(periodic, std::abs(model.f(x + L, u) - fx) / (1.0 + std::abs(fx)));
    if (u >= 0 && u <= grid.u_max) growth = std::max(growth, fx - K * u);
  };
  for (int i = 0; i < grid.nx; ++i) {
    const double x = L * i / grid.nx;
    zero = std::max(zero, std::abs(model.f(x, 0.0)));
    for (int j = 0; j <= grid.nu; ++j) probe(x, grid.u_max * j / grid.nu);
  }
  std::mt19937_64 rng(grid.seed);
  std::uniform_real_distribution<double> ux(0.0, L), uu(0.0, grid.u_max);
  const double h = grid.fd_step;
  std::vector<double> orders;
  for (int k = 0; k < grid.random_probes; ++k) {
    const double x = ux(rng), u = uu(rng);
    probe(x, u);
    if (std::any_of(kinks.begin(), kinks.end(), [&](double k) { return std::abs(u - k) <= h; })) continue;
    const double d = model.f_u(x, u);
    const double e1 = std::abs(d - (model.f(x, u + h) - model.f(x, u - h)) / (2 * h));
    const double e2 = std::abs(d - (model.f(x, u + h / 2) - model.f(x, u - h / 2)) / h);
    fd1 = std::max(fd1, e1 / (1.0 + std::abs(d)));
    // Probes at round-off level carry no order information.
    if (e1 > 1e-10 && e2 > 0) orders.push_back(std::log2(e1 / e2));
  }
  ValidationReport rep;
  if (orders.empty()) {
    rep.fd_order = 2.0;  // f is at most quadratic in u: no truncation error
  } else {
    auto mid = orders.begin() + static_cast<std::ptrdiff_t>(orders.size() / 2);
    std::nth_element(orders.begin(), mid, orders.end());
    rep.fd_order = *mid;
  }
  rep.entries.push_back({"periodicity", periodic, 1e-12});
  rep.entries.push_back({"f(.,0)!=0", zero, 1e-14});
  rep.entries.push_back({"f_u vs finite difference", fd1, 1e-4});
  rep.entries.push_back({"f<=Ku", growth, 1e-12});
  return rep;
}

}  // namespace tlab
