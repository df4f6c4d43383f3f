#include "tlab/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include "tlab/eigen.hpp"
#include "tlab/error.hpp"
#include "tlab/experiment.hpp"
#include "tlab/io.hpp"
#include "tlab/terrace.hpp"
#include "tlab/wavebvp.hpp"
#include "tlab/zeronumber.hpp"

namespace tlab {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<CriterionInfo>& acceptance_criteria() {
  static const std::vector<CriterionInfo> list = {
      {1, "kpp-speed", "KPP front speed in [1.94, 2.02]", 180.0},
      {2, "bistable-speed", "bistable speed against shooting and (1-2a)/sqrt(2)", 120.0},
      {3, "two-step-terrace", "tristable terrace with two fronts and a widening plateau", 300.0},
      {4, "stacked-terrace", "KPP below bistable: two fronts, plateau at theta1", 300.0},
      {5, "pulsating-recurrence", "periodic KPP front is pulsating and matches the linear speed", 0.0},
      {6, "zero-number", "zero number of differences never increases", 600.0},
      {7, "eigen-consistency", "direct and variational principal eigenvalues agree", 0.0},
      {8, "spreading-sandwich", "front ratio sandwich and exponential supersolution", 0.0},
      {9, "comparison-identities", "ordering, shift identity and monotonicity in x", 0.0},
      {10, "uniqueness", "terrace independent of x0 and a", 0.0},
  };
  return list;
}

const CriterionInfo& find_criterion(std::string_view key) {
  std::string k(key);
  if (!k.empty() && (k[0] == 'c' || k[0] == 'C') && k.size() > 1 && std::isdigit(static_cast<unsigned char>(k[1])))
    k.erase(0, 1);
  for (const auto& c : acceptance_criteria())
    if (k == std::to_string(c.id) || k == c.slug) return c;
  std::string best;
  std::size_t bd = std::string::npos;
  for (const auto& c : acceptance_criteria())
    if (edit_distance(k, c.slug) < bd) bd = edit_distance(k, c.slug), best = c.slug;
  throw ConfigError("criterion", "unknown criterion `" + std::string(key) + "`; did you mean `" + best + "`?");
}

std::string criterion_config_path(const CriterionInfo& c, const std::string& config_dir) {
  return (fs::path(config_dir) / ("criterion-" + std::to_string(c.id) + ".json")).string();
}

std::string format_result(const CriterionResult& r) {
  std::ostringstream s;
  s << (r.pass ? "PASS" : "FAIL") << " [" << r.id << "] " << r.slug << " (";
  s.setf(std::ios::fixed);
  s.precision(1);
  s << r.seconds << " s): " << r.detail;
  return s.str();
}

namespace {

using Clock = std::chrono::steady_clock;

struct Ctx {
  const ExperimentConfig& cfg;
  std::ostream* log;
  int jobs;
  CriterionResult& r;
  void note(const std::string& msg) const {
    if (log) *log << "[criterion " << r.id << "] " << msg << std::endl;
  }
  const json& acc() const { return cfg.acceptance; }
};

std::string num(double v) { return fmt_num(v); }

/// A config for another preset sharing this one's settings; domain and dt are re-derived.
ExperimentConfig for_preset(const ExperimentConfig& cfg, const json& entry) {
  json d = cfg.resolved;
  d.erase("derived");
  d.erase("acceptance");
  json model{{"preset", entry.is_string() ? entry.get<std::string>() : entry.at("preset").get<std::string>()}};
  if (entry.is_object() && entry.contains("params")) model["params"] = entry["params"];
  d["model"] = model;
  d["domain"] = {{"dx", cfg.domain.dx}};
  d["time"].erase("dt");
  if (entry.is_object()) {
    if (entry.contains("T_final")) d["time"]["T_final"] = entry["T_final"];
    if (entry.contains("heaviside_a")) d["heaviside_a"] = entry["heaviside_a"];
    if (entry.contains("a_list")) d["seeds"]["a_list"] = entry["a_list"];
  }
  d["output"].erase("snapshot_every");
  d["output_dir"] = (fs::path(cfg.output_dir) / model["preset"].get<std::string>()).string();
  return parse_config(d.dump(), cfg.source + " [" + model["preset"].get<std::string>() + "]");
}

std::vector<json> preset_entries(const ExperimentConfig& cfg) {
  std::vector<json> out;
  if (cfg.acceptance.contains("presets"))
    for (const auto& e : cfg.acceptance["presets"]) out.push_back(e);
  if (out.empty()) out.push_back(json(cfg.preset));
  return out;
}

std::string entry_name(const json& e) { return e.is_string() ? e.get<std::string>() : e.at("preset").get<std::string>(); }

double scalar_param(const ReactionModel& m, const std::string& key) {
  const json& v = m.params().at(key);
  if (v.is_number()) return v.get<double>();
  if (v.value("amp", 0.0) != 0.0) throw ConfigError(key, "must be constant for this criterion");
  return v.value("mean", 0.0);
}

struct Built {
  ExperimentConfig cfg;
  ReactionModel model;
  StationaryState roof;
};

Built build(const ExperimentConfig& cfg) {
  ReactionModel m = resolve_model(cfg.preset, cfg.params);
  StationaryState roof = resolve_roof(m, cfg);
  return Built{cfg, std::move(m), std::move(roof)};
}

// 1
void kpp_speed(Ctx& c) {
  auto b = build(c.cfg);
  const auto rep = assemble(b.model, b.roof.profile, terrace_options(c.cfg));
  const double c1 = rep.speeds.empty() ? 0.0 : rep.speeds.front();
  c.r.data = {{"N", rep.N()}, {"complete", rep.complete}, {"c1", c1}, {"band", {1.94, 2.02}}, {"terrace", to_json(rep)}};
  c.r.pass = rep.N() == 1 && rep.complete && c1 >= 1.94 && c1 <= 2.02;
  c.r.detail = "N = " + std::to_string(rep.N()) + ", c1 = " + num(c1) + " (band [1.94, 2.02])";
}

// 2
void bistable_speed(Ctx& c) {
  auto b = build(c.cfg);
  const double a = scalar_param(b.model, "a");
  const double exact = (1 - 2 * a) / std::sqrt(2.0);
  const auto shot = homogeneous_shoot(b.model, 0.0, 1.0);
  const auto rep = assemble(b.model, b.roof.profile, terrace_options(c.cfg));
  const double c1 = rep.speeds.empty() ? 0.0 : rep.speeds.front();
  const double shoot_err = std::abs(shot.c - exact);
  const double rel = std::abs(c1 - shot.c) / shot.c;
  c.r.data = {{"a", a},          {"exact", exact}, {"shoot", shot.c}, {"shoot_error", shoot_err},
              {"N", rep.N()},    {"c1", c1},       {"relative_difference", rel}, {"terrace", to_json(rep)}};
  c.r.pass = shoot_err <= 1e-4 && rep.N() == 1 && rep.complete && rel <= 0.01;
  c.r.detail = "shoot " + num(shot.c) + " vs exact " + num(exact) + " (err " + num(shoot_err) + "), measured " +
               num(c1) + " (rel " + num(rel) + ")";
}

// 3
void two_step_terrace(Ctx& c) {
  ExperimentConfig cfg = c.cfg;
  json params = resolve_model(cfg.preset, cfg.params).params();
  const double theta = params.at("theta").get<double>();
  double c_low = 0, c_up = 0;
  int tunings = 0;
  for (;; ++tunings) {
    const ReactionModel m = resolve_model(cfg.preset, params);
    c_low = homogeneous_shoot(m, 0.0, theta).c;
    c_up = homogeneous_shoot(m, theta, 1.0).c;
    c.note("lower front " + num(c_low) + ", upper front " + num(c_up) + " (a2 = " + num(params["a2"].get<double>()) + ")");
    if (c_low > c_up || tunings >= 8) break;
    // Moving the upper inner root towards the middle slows the upper front.
    params["a2"] = params["a2"].get<double>() + 0.5 * (0.5 - params["a2"].get<double>());
  }
  cfg.params = params;
  auto b = build(cfg);
  const auto rep = assemble(b.model, b.roof.profile, terrace_options(cfg));
  const double delta = cfg.delta;
  bool plateaus_ok = rep.plateaus.size() == 3;
  double dev = 0.0;
  if (plateaus_ok) {
    const double levels[3] = {1.0, theta, 0.0};
    for (std::size_t k = 0; k < 3; ++k)
      for (double v : rep.plateaus[k].state.profile.values) dev = std::max(dev, std::abs(v - levels[k]));
    plateaus_ok = dev <= delta;
  }
  double rate = 0, expected = 0, rate_err = 1;
  if (!rep.widths.empty() && rep.speeds.size() == 2) {
    rate = rep.widths.front().rate;
    expected = rep.speeds[1] - rep.speeds[0];
    rate_err = expected > 0 ? std::abs(rate - expected) / expected : 1.0;
  }
  const bool ordered = rep.speeds.size() == 2 && rep.speeds[0] < rep.speeds[1];
  c.r.data = {{"tuned_params", params}, {"tunings", tunings},     {"shoot_lower", c_low}, {"shoot_upper", c_up},
              {"N", rep.N()},           {"speeds", rep.speeds},   {"plateau_deviation", dev},
              {"width_rate", rate},     {"expected_rate", expected}, {"terrace", to_json(rep)}};
  c.r.pass = c_low > c_up && rep.N() == 2 && rep.complete && plateaus_ok && ordered && rate_err <= 0.1;
  std::string sp;
  for (double s : rep.speeds) sp += (sp.empty() ? "" : ", ") + num(s);
  c.r.detail = "N = " + std::to_string(rep.N()) + ", speeds [" + sp + "], plateau deviation " + num(dev) +
               ", width rate " + num(rate) + " vs " + num(expected);
}

// 4
void stacked_terrace(Ctx& c) {
  auto b = build(c.cfg);
  const double theta1 = b.model.params().at("theta1").get<double>();
  const double c_kpp = 2.0 * std::sqrt(b.model.f_u(0.0, 0.0));
  const double c_up = homogeneous_shoot(b.model, theta1, 1.0).c;
  const auto rep = assemble(b.model, b.roof.profile, terrace_options(c.cfg));
  double dev = 1.0;
  if (rep.plateaus.size() == 3) {
    dev = 0.0;
    for (double v : rep.plateaus[1].state.profile.values) dev = std::max(dev, std::abs(v - theta1));
  }
  c.r.data = {{"c_kpp_linear", c_kpp}, {"shoot_upper", c_up}, {"N", rep.N()}, {"speeds", rep.speeds},
              {"interior_deviation", dev}, {"terrace", to_json(rep)}};
  c.r.pass = c_kpp > c_up && rep.N() == 2 && rep.complete && dev <= c.cfg.delta;
  std::string sp;
  for (double s : rep.speeds) sp += (sp.empty() ? "" : ", ") + num(s);
  c.r.detail = "2 sqrt(f'(0)) = " + num(c_kpp) + " > upper " + num(c_up) + "; N = " + std::to_string(rep.N()) +
               ", speeds [" + sp + "], interior plateau off theta1 by " + num(dev);
}

// 5
void pulsating_recurrence(Ctx& c) {
  auto b = build(c.cfg);
  const auto rep = assemble(b.model, b.roof.profile, terrace_options(c.cfg));
  const auto ls = linear_spreading_speed(b.model);
  double rec = -1, c1 = 0;
  if (!rep.waves.empty()) {
    rec = rep.waves.front().wave.recurrence_residual;
    c1 = rep.waves.front().wave.frame_speed_c;
  }
  const double rel = std::abs(c1 - ls.c_star_linear) / ls.c_star_linear;
  c.r.data = {{"N", rep.N()}, {"recurrence_residual", rec}, {"c1", c1}, {"c_star_linear", ls.c_star_linear},
              {"relative_difference", rel}, {"terrace", to_json(rep)}};
  c.r.pass = rep.N() == 1 && rep.complete && rec >= 0 && rec <= 1e-2 && rel <= 0.02;
  c.r.detail = "recurrence " + num(rec) + ", c1 = " + num(c1) + " vs linear " + num(ls.c_star_linear) + " (rel " +
               num(rel) + ")";
}

Profile random_field(std::mt19937_64& rng, const Domain& d, const Profile& roof, double scale) {
  std::uniform_int_distribution<int> nk(2, 8);
  std::uniform_real_distribution<double> pos(d.x_left, d.x_right), val(0.0, 1.0);
  const int n = nk(rng);
  std::vector<std::pair<double, double>> knots{{d.x_left, roof.at(d.x_left)}, {d.x_right, 0.0}};
  for (int k = 0; k < n; ++k) knots.emplace_back(pos(rng), scale * roof.max() * val(rng));
  std::sort(knots.begin(), knots.end());
  Profile f;
  f.dx = d.dx;
  f.x0 = d.x_left;
  f.values.resize(d.nodes());
  std::size_t seg = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double x = f.x(i);
    while (seg + 2 < knots.size() && knots[seg + 1].first < x) ++seg;
    const auto [x0, y0] = knots[seg];
    const auto [x1, y1] = knots[seg + 1];
    const double w = x1 > x0 ? std::clamp((x - x0) / (x1 - x0), 0.0, 1.0) : 0.0;
    f.values[i] = std::clamp((1 - w) * y0 + w * y1, 0.0, roof.at(x));
  }
  return f;
}

// 6
void zero_number(Ctx& c) {
  const int pairs = std::max(100, c.acc().value("pairs_per_preset", 100));
  const double T = c.acc().value("T_final", 8.0);
  const double rec = c.acc().value("record_every", 0.1);
  const double half = c.acc().value("half_width_periods", 15.0);
  std::mt19937_64 rng(c.acc().value("seed", 20240611ULL));
  bool pass = true;
  json per = json::array();
  long total_violations = 0, total_pairs = 0, nontrivial = 0;
  std::string first;
  for (const auto& e : preset_entries(c.cfg)) {
    auto b = build(for_preset(c.cfg, e));
    const double L = b.model.period();
    Domain d;
    d.dx = b.cfg.domain.dx;
    d.x_left = -half * L;
    d.x_right = half * L;
    const double dt = default_dt(b.model, b.roof.profile.max());
    RecordPolicy pol;
    pol.every = rec;
    AuditOptions ao;
    ao.tol = 1e-10 * b.roof.profile.max();
    long violations = 0, band = 0, crossing_with_zeros = 0;
    int max_z0 = 0;
    for (int i = 0; i < pairs; ++i) {
      const bool ordered = i % 2 == 0;
      Profile u0 = random_field(rng, d, b.roof.profile, 1.0);
      Profile v0 = random_field(rng, d, b.roof.profile, ordered ? 0.5 : 1.0);
      if (ordered)
        for (std::size_t k = 0; k < v0.size(); ++k)
          v0.values[k] = std::min(u0.values[k] + v0.values[k], b.roof.profile.at(v0.x(k)));
      Simulation su(b.model, b.roof.profile, d, dt, u0, 0.0, pol);
      Simulation sv(b.model, b.roof.profile, d, dt, v0, 0.0, pol);
      su.advance_to(T);
      sv.advance_to(T);
      const auto rep = monotonicity_audit(su.trajectory(), sv.trajectory(), ao);
      violations += static_cast<long>(rep.violations.size());
      band += static_cast<long>(rep.events.size());
      if (!rep.entries.empty()) {
        max_z0 = std::max(max_z0, rep.entries.front().z_count);
        if (!ordered && rep.entries.front().z_count > 0) ++crossing_with_zeros;
      }
      if (!rep.violations.empty() && first.empty()) {
        const auto& v = rep.violations.front();
        first = entry_name(e) + " pair " + std::to_string(i) + ": " + v.kind + " " + v.word_from + " -> " + v.word_to +
                " at t = " + num(v.t_to);
      }
    }
    c.note(entry_name(e) + ": " + std::to_string(pairs) + " pairs, " + std::to_string(violations) + " violations, " +
           std::to_string(band) + " band events");
    per.push_back({{"preset", entry_name(e)},
                   {"pairs", pairs},
                   {"violations", violations},
                   {"band_events", band},
                   {"crossing_pairs_with_zeros", crossing_with_zeros},
                   {"max_initial_z", max_z0}});
    total_violations += violations;
    total_pairs += pairs;
    nontrivial += crossing_with_zeros;
    pass &= violations == 0 && crossing_with_zeros > 0;
  }
  c.r.data = {{"presets", per}, {"dead_band", "1e-10 max p"}, {"T_final", T}, {"record_every", rec}};
  c.r.pass = pass;
  c.r.detail = std::to_string(total_pairs) + " pairs over " + std::to_string(per.size()) + " presets, " +
               std::to_string(total_violations) + " violations, " + std::to_string(nontrivial) +
               " crossing pairs with sign changes" + (first.empty() ? "" : "; first: " + first);
}

// 7
void eigen_consistency(Ctx& c) {
  auto b = build(c.cfg);
  const double L = b.model.period();
  const auto M = static_cast<std::size_t>(std::llround(L / c.cfg.domain.dx));
  const Profile one = Profile::constant(1.0, L, M);
  const std::vector<double> lambdas{0.0, 0.2, 0.4, 0.8};
  double worst = 0.0;
  json rows = json::array();
  for (double lam : lambdas) {
    const auto d = principal_eigenvalue(b.model, one, lam);
    const auto v = nadin_variational(b.model, one, lam);
    worst = std::max(worst, std::abs(d.mu - v.mu));
    rows.push_back({{"lambda", lam}, {"direct", d.mu}, {"variational", v.mu}});
  }
  const ReactionModel hom = resolve_model(c.acc().value("homogeneous", std::string("bistable")), json::object());
  double lo = 1e300, hi = -1e300;
  json hrows = json::array();
  for (double lam : lambdas) {
    const double mu = principal_eigenvalue(hom, one, lam).mu;
    lo = std::min(lo, mu);
    hi = std::max(hi, mu);
    hrows.push_back({{"lambda", lam}, {"mu", mu}});
  }
  const std::vector<double> grid{-0.2, -0.1, 0.0, 0.1, 0.2};
  const auto fit = mu_curvature_check(b.model, one, grid);
  c.r.data = {{"periodic", rows},
              {"max_disagreement", worst},
              {"homogeneous", hrows},
              {"homogeneous_spread", hi - lo},
              {"curvature", {{"c2", fit.c2}, {"max_residual", fit.max_residual}, {"threshold", fit.threshold}}}};
  c.r.pass = worst <= 1e-4 && hi - lo <= 1e-8 && fit.pass;
  c.r.detail = "direct vs variational " + num(worst) + ", homogeneous spread " + num(hi - lo) + ", curvature c2 = " +
               num(fit.c2) + (fit.pass ? " (fit ok)" : " (fit fails)");
}

// 8
void spreading_sandwich(Ctx& c) {
  bool pass = true;
  int tested = 0;
  json per = json::array();
  std::string bad;
  for (const auto& e : preset_entries(c.cfg)) {
    auto b = build(for_preset(c.cfg, e));
    const double L = b.model.period();
    const auto bump = bump_invasion_check(b.model, b.roof.profile, 10 * L, c.acc().value("bump_T", 60.0), 5 * L,
                                          b.cfg.delta, b.cfg.dt);
    json item{{"preset", entry_name(e)}, {"assumption1_error", bump.error}, {"assumption1", bump.holds}};
    if (bump.holds) {
      ++tested;
      RecordPolicy pol;
      pol.every = b.cfg.record_every;
      const auto tr = run(b.model, b.roof.profile, b.cfg.heaviside_a, b.cfg.domain, b.cfg.T_final, {}, b.cfg.dt, pol);
      const auto sp = spreading_monitor(tr, b.model, b.roof.profile);
      item["c_lower_emp"] = sp.c_lower_emp;
      item["c_upper_emp"] = sp.c_upper_emp;
      item["c_upper_bound"] = sp.c_upper_bound;
      item["t_enter"] = sp.t_enter;
      item["supersolution_excess"] = sp.supersolution_excess;
      item["pass"] = sp.pass;
      c.note(entry_name(e) + ": ratio in [" + num(sp.c_lower_emp) + ", " + num(sp.c_upper_emp) + "], bound " +
             num(sp.c_upper_bound) + ", excess " + num(sp.supersolution_excess));
      if (!sp.pass) bad += (bad.empty() ? "" : ", ") + entry_name(e);
      pass &= sp.pass;
    }
    per.push_back(std::move(item));
  }
  c.r.data = {{"presets", per}};
  c.r.pass = pass && tested > 0;
  c.r.detail = std::to_string(tested) + " of " + std::to_string(per.size()) + " presets invade; " +
               (bad.empty() ? "all inside the sandwich" : "failing: " + bad);
}

// 9
void comparison_identities(Ctx& c) {
  bool pass = true;
  json per = json::array();
  double worst_order = 0, worst_shift = 0, worst_mono = 0;
  std::mt19937_64 rng(c.acc().value("seed", 7ULL));
  for (const auto& e : preset_entries(c.cfg)) {
    json entry = e.is_string() ? json{{"preset", e}} : e;
    ExperimentConfig probe = for_preset(c.cfg, entry);
    const double L = resolve_model(probe.preset, probe.params).period();
    entry["a_list"] = {probe.heaviside_a, probe.heaviside_a + L};
    auto b = build(for_preset(c.cfg, entry));
    const Domain& d = b.cfg.domain;
    const double a = b.cfg.heaviside_a;
    const auto M = static_cast<std::size_t>(std::llround(L / d.dx));
    RecordPolicy pol;
    pol.every = b.cfg.record_every;
    const auto A = run(b.model, b.roof.profile, a, d, b.cfg.T_final, {}, b.cfg.dt, pol);
    const auto B = run(b.model, b.roof.profile, a + 0.5 * L, d, b.cfg.T_final, {}, b.cfg.dt, pol);
    const auto C = run(b.model, b.roof.profile, a + L, d, b.cfg.T_final, {}, b.cfg.dt, pol);
    Profile u0 = random_field(rng, d, b.roof.profile, 1.0);
    Profile v0 = random_field(rng, d, b.roof.profile, 0.5);
    for (std::size_t k = 0; k < v0.size(); ++k) v0.values[k] = std::min(u0.values[k] + v0.values[k], b.roof.profile.at(v0.x(k)));
    Simulation su(b.model, b.roof.profile, d, b.cfg.dt, u0, a, pol), sv(b.model, b.roof.profile, d, b.cfg.dt, v0, a, pol);
    su.advance_to(b.cfg.T_final);
    sv.advance_to(b.cfg.T_final);
    const auto& U = su.trajectory();
    const auto& V = sv.trajectory();

    const std::size_t n = d.nodes();
    const std::size_t lo = 10 * M, hi = n - 1 - 10 * M;
    double order = 0, shift = 0, mono = 0;
    for (std::size_t s = 0; s < A.snapshots.size(); ++s) {
      const auto& ua = A.snapshots[s].field.values;
      const auto& ub = B.snapshots[s].field.values;
      const auto& uc = C.snapshots[s].field.values;
      const auto& uu = U.snapshots[s].field.values;
      const auto& uv = V.snapshots[s].field.values;
      for (std::size_t i = 0; i < n; ++i) {
        order = std::max({order, ua[i] - ub[i], uu[i] - uv[i]});
        if (i >= lo + M && i <= hi) shift = std::max(shift, std::abs(uc[i] - ua[i - M]));
        if (i >= lo && i + M <= hi) mono = std::max(mono, ua[i + M] - ua[i]);
      }
    }
    const bool ok = order <= 1e-10 && shift <= 1e-8 && mono <= 1e-8;
    c.note(entry_name(e) + ": order " + num(order) + ", shift " + num(shift) + ", monotone " + num(mono));
    per.push_back({{"preset", entry_name(e)}, {"order_excess", order}, {"shift_error", shift}, {"monotone_excess", mono},
                   {"pass", ok}});
    worst_order = std::max(worst_order, order);
    worst_shift = std::max(worst_shift, shift);
    worst_mono = std::max(worst_mono, mono);
    pass &= ok;
  }
  c.r.data = {{"presets", per}, {"tolerances", {{"order", 1e-10}, {"shift", 1e-8}, {"monotone", 1e-8}}}};
  c.r.pass = pass;
  c.r.detail = "max order excess " + num(worst_order) + ", shift error " + num(worst_shift) +
               ", u(x+L) - u(x) " + num(worst_mono) + " over " + std::to_string(per.size()) + " presets";
}

// 10
void uniqueness(Ctx& c) {
  bool pass = true;
  json per = json::array();
  std::string bad;
  for (const auto& e : preset_entries(c.cfg)) {
    auto b = build(for_preset(c.cfg, e));
    TerraceOptions o = terrace_options(b.cfg);
    o.domain.reset();
    o.verify_steepness = false;
    o.check_isolation = false;
    c.note(entry_name(e) + ": " + std::to_string(b.cfg.x0_list.size() * b.cfg.a_list.size()) + " runs to T = " +
           num(b.cfg.T_final));
    const auto u = uniqueness_probe(b.model, b.roof.profile, b.cfg.x0_list, b.cfg.a_list, o, c.jobs);
    json runs = json::array();
    for (std::size_t k = 0; k < u.reports.size(); ++k)
      runs.push_back({{"x0", u.x0s[k]}, {"a", u.as[k]}, {"N", u.reports[k].N()}, {"speeds", u.reports[k].speeds}});
    per.push_back({{"preset", entry_name(e)},
                   {"runs", runs},
                   {"same_n", u.same_n},
                   {"max_plateau_distance", u.max_plateau_distance},
                   {"max_speed_rel_diff", u.max_speed_rel_diff},
                   {"disagreements", u.disagreements},
                   {"pass", u.pass}});
    c.note(entry_name(e) + ": plateau distance " + num(u.max_plateau_distance) + ", speed spread " +
           num(u.max_speed_rel_diff) + (u.pass ? "" : " FAIL"));
    if (!u.pass) bad += (bad.empty() ? "" : ", ") + entry_name(e);
    pass &= u.pass;
  }
  c.r.data = {{"presets", per}};
  c.r.pass = pass;
  c.r.detail = std::to_string(per.size()) + " presets; " + (bad.empty() ? "all agree" : "disagreeing: " + bad);
}

}  // namespace

CriterionResult run_criterion(const ExperimentConfig& cfg, std::ostream* log, int jobs) {
  const CriterionInfo& info = find_criterion(std::to_string(cfg.criterion));
  CriterionResult r;
  r.id = info.id;
  r.slug = info.slug;
  Ctx ctx{cfg, log, jobs, r};
  const auto t0 = Clock::now();
  try {
    switch (info.id) {
      case 1: kpp_speed(ctx); break;
      case 2: bistable_speed(ctx); break;
      case 3: two_step_terrace(ctx); break;
      case 4: stacked_terrace(ctx); break;
      case 5: pulsating_recurrence(ctx); break;
      case 6: zero_number(ctx); break;
      case 7: eigen_consistency(ctx); break;
      case 8: spreading_sandwich(ctx); break;
      case 9: comparison_identities(ctx); break;
      case 10: uniqueness(ctx); break;
      default: throw InternalError("no such criterion");
    }
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  if (info.budget_seconds > 0 && r.seconds > info.budget_seconds) {
    r.pass = false;
    r.detail += "; over the " + num(info.budget_seconds) + " s budget";
  }
  fs::create_directories(cfg.output_dir);
  std::ofstream out(fs::path(cfg.output_dir) / "criterion.json", std::ios::binary);
  out << json{{"id", r.id}, {"slug", r.slug}, {"pass", r.pass}, {"detail", r.detail}, {"data", r.data}}.dump(2) << '\n';
  return r;
}

}  // namespace tlab
