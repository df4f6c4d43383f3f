#include "tlab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

#include "tlab/eigen.hpp"
#include "tlab/error.hpp"
#include "tlab/io.hpp"
#include "tlab/terrace.hpp"
#include "tlab/wavebvp.hpp"
#include "tlab/zeronumber.hpp"

namespace tlab {

using nlohmann::json;
namespace fs = std::filesystem;

void write_snapshots_csv(const std::string& path, const Trajectory& traj, double every, int stride) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("output_dir", "cannot open " + path);
  out << "t,x,u\n";
  double next = 0.0;
  const std::size_t step = static_cast<std::size_t>(std::max(1, stride));
  for (const auto& s : traj.snapshots) {
    if (every > 0 && s.t < next - 1e-9) continue;
    next = s.t + every;
    const auto& f = s.field;
    for (std::size_t i = 0; i < f.size(); i += step)
      out << fmt_num(s.t) << ',' << fmt_num(f.x(i)) << ',' << fmt_num(f[i]) << '\n';
    if ((f.size() - 1) % step != 0)
      out << fmt_num(s.t) << ',' << fmt_num(f.x(f.size() - 1)) << ',' << fmt_num(f.values.back()) << '\n';
  }
}

TerraceOptions terrace_options(const ExperimentConfig& cfg) {
  TerraceOptions o;
  o.x0 = cfg.x0_list.front();
  o.a = cfg.heaviside_a;
  o.t_final = cfg.T_final;
  o.dx = cfg.domain.dx;
  o.dt = cfg.dt;
  o.domain = cfg.domain;
  o.gamma = cfg.gamma;
  o.gamma_retries = cfg.gamma_retries;
  o.n_max = cfg.n_max;
  o.delta = cfg.delta;
  o.verify_steepness = cfg.verify_steepness;
  o.check_isolation = cfg.check_isolation;
  return o;
}

StationaryState resolve_roof(const ReactionModel& model, const ExperimentConfig& cfg) {
  const double L = model.period();
  const auto M = static_cast<std::size_t>(std::llround(L / cfg.domain.dx));
  return roof_on_grid(model, Profile::constant(cfg.roof, L, M), M);
}

void list_presets(std::ostream& out) {
  for (const auto& p : preset_catalog()) {
    out << p.name << "  (" << p.family << ")\n";
    out << "    " << p.summary << "\n";
    out << "    anchor: " << p.anchor << "\n";
    out << "    criteria:";
    for (int c : p.criteria) out << ' ' << c;
    out << "\n    params: " << p.params.dump() << "\n";
  }
}

namespace {

class Run {
 public:
  Run(const ExperimentConfig& cfg, std::ostream* log) : cfg_(cfg), log_(log), dir_(cfg.output_dir) {
    fs::create_directories(dir_);
  }

  void note(const std::string& msg) {
    if (log_) *log_ << "[" << fs::path(cfg_.source).stem().string() << "] " << msg << std::endl;
  }
  void hard(const std::string& s) {
    res.hard_failures.push_back(s);
    note("FAIL " + s);
  }
  void soft(const std::string& s) {
    res.soft.push_back(s);
    note("soft " + s);
  }
  std::string path(const std::string& name) {
    if (std::find(res.artifacts.begin(), res.artifacts.end(), name) == res.artifacts.end())
      res.artifacts.push_back(name);
    return (dir_ / name).string();
  }
  void write_json(const std::string& name, const json& j) {
    std::ofstream out(path(name), std::ios::binary);
    out << j.dump(2) << '\n';
  }
  void finish() {
    res.exit_code = !res.hard_failures.empty() ? 1 : (!res.soft.empty() ? 2 : 0);
    res.summary = {{"exit_code", res.exit_code},
                   {"hard_failures", res.hard_failures},
                   {"soft", res.soft},
                   {"artifacts", res.artifacts}};
    if (!stages_.empty()) res.summary["stages"] = stages_;
    std::ofstream out((dir_ / "report.json").string(), std::ios::binary);
    out << res.summary.dump(2) << '\n';
  }
  void stage(const std::string& name, const json& j) { stages_[name] = j; }

  ExperimentResult res;

 private:
  const ExperimentConfig& cfg_;
  std::ostream* log_;
  fs::path dir_;
  json stages_ = json::object();
};

bool enabled(const ExperimentConfig& cfg, const std::string& name) {
  return std::find(cfg.observers.begin(), cfg.observers.end(), name) != cfg.observers.end();
}

/// The constant-in-time trajectory of a periodic state on the grid of `like`.
Trajectory frozen(const Profile& state, const Trajectory& like) {
  Trajectory t;
  t.domain = like.domain;
  t.a_shift = like.a_shift;
  t.model_id = like.model_id;
  t.dt = like.dt;
  Profile f;
  f.dx = like.domain.dx;
  f.x0 = like.domain.x_left;
  f.values.resize(like.domain.nodes());
  for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = state.at(f.x(i));
  for (const auto& s : like.snapshots) t.snapshots.push_back({s.t, f});
  return t;
}

void run_stages(const ExperimentConfig& cfg, Run& run, std::string& current, int jobs) {
  current = "reaction";
  const ReactionModel model = resolve_model(cfg.preset, cfg.params);
  const double L = model.period();
  SamplingSpec spec;
  spec.u_max = cfg.roof;
  const auto val = validate(model, spec);
  {
    json j = json::array();
    for (const auto& e : val.entries)
      j.push_back({{"check", e.name}, {"violation", e.violation}, {"tolerance", e.tolerance}, {"pass", e.pass()}});
    run.write_json("validation.json", {{"checks", j}, {"fd_order", val.fd_order}, {"pass", val.pass()}});
  }
  if (!val.pass()) run.hard("reaction: model validation failed");

  const StationaryState roof = resolve_roof(model, cfg);
  if (roof.residual > 1e-6) run.hard("stationary: roof is not a stationary state (residual " + fmt_num(roof.residual) + ")");
  run.note("model " + model.name() + ", L = " + fmt_num(L) + ", K = " + fmt_num(model.lipschitz()) +
           ", dt = " + fmt_num(cfg.dt));

  // Terrace.
  std::optional<TerraceReport> terr;
  if (enabled(cfg, "terrace")) {
    current = "terrace";
    run.note("assembling terrace to T = " + fmt_num(cfg.T_final));
    terr = assemble(model, roof.profile, terrace_options(cfg));
    json j = to_json(*terr);
    for (std::size_t k = 0; k < terr->plateaus.size(); ++k) {
      const std::string name = "plateau_" + std::to_string(k) + ".csv";
      write_profile_csv(run.path(name), terr->plateaus[k].state.profile);
      j["plateaus"][k]["profile_csv"] = name;
    }
    for (std::size_t k = 0; k < terr->waves.size(); ++k) {
      const auto& w = terr->waves[k].wave;
      const std::string frames = "wave_" + std::to_string(k + 1) + "_frames.csv";
      const std::string drift = "wave_" + std::to_string(k + 1) + "_drift.csv";
      write_frame_csv(run.path(frames), w);
      write_drift_csv(run.path(drift), w.drift);
      j["waves"][k]["frames_csv"] = frames;
      j["waves"][k]["drift_samples_csv"] = drift;
    }
    run.write_json("terrace.json", j);
    run.stage("terrace", {{"N", terr->N()}, {"speeds", terr->speeds}, {"complete", terr->complete}});
    const auto& v = terr->verdicts;
    if (!terr->complete) run.soft("terrace: undecided stratum " + std::to_string(terr->undecided_stratum));
    if (!v.ordering_ok) run.hard("terrace: plateaus are not strictly ordered");
    if (terr->complete && !v.speed_ordering_ok) run.hard("terrace: speeds are not nondecreasing and positive");
    if (!v.steepness_ok) run.hard("terrace: a front is not steeper than its comparison wave");
    if (terr->complete && !v.outer_ok) run.hard("terrace: solution is not close to p_0 / 0 outside the fronts");
    for (std::size_t k = 0; k < terr->waves.size(); ++k) {
      const auto& wr = terr->waves[k];
      if (wr.wave.classification != WaveKind::pulsating_wave) continue;
      if (!wr.pulsating_ok) run.hard("terrace: front " + std::to_string(k + 1) + " fails the recurrence check");
      if (wr.steepness == "unverified") run.soft("terrace: steepness of front " + std::to_string(k + 1) + " unverified");
    }
    for (std::size_t k = 1; k + 1 < terr->plateaus.size(); ++k) {
      const auto& p = terr->plateaus[k];
      if (p.marginal) run.soft("terrace: plateau " + std::to_string(k) + " is marginally stable");
      else if (!p.stable_from_below) run.hard("terrace: plateau " + std::to_string(k) + " is unstable from below");
      if (p.isolation && p.isolation->verdict != Isolation::isolated)
        run.soft("terrace: plateau " + std::to_string(k) + " isolation " +
                 std::string(to_string(p.isolation->verdict)));
    }
  }

  // Spreading run; also the reference trajectory for the audits.
  std::optional<Trajectory> traj;
  if (enabled(cfg, "spreading") || enabled(cfg, "zeronumber")) {
    current = "evolve";
    run.note("evolving Heaviside data from a = " + fmt_num(cfg.heaviside_a));
    RecordPolicy pol;
    pol.every = cfg.record_every;
    traj = tlab::run(model, roof.profile, cfg.heaviside_a, cfg.domain, cfg.T_final, {}, cfg.dt, pol);
    if (cfg.snapshot_every > 0)
      write_snapshots_csv(run.path("snapshots.csv"), *traj, cfg.snapshot_every, cfg.snapshot_stride);
  }
  if (enabled(cfg, "spreading")) {
    current = "spreading";
    const double cu = 2 * std::sqrt(model.lipschitz());
    const std::vector<double> grid{0.25 * cu, 0.5 * cu, 0.75 * cu, cu, 1.25 * cu};
    const auto sp = spreading_monitor(*traj, model, roof.profile, grid);
    run.write_json("spreading.json", {{"level", sp.level},
                                      {"c_lower_emp", sp.c_lower_emp},
                                      {"c_upper_emp", sp.c_upper_emp},
                                      {"c_upper_bound", sp.c_upper_bound},
                                      {"t_enter", sp.t_enter},
                                      {"supersolution_excess", sp.supersolution_excess},
                                      {"c_grid", sp.c_grid},
                                      {"sup_ahead", sp.sup_ahead},
                                      {"sup_behind", sp.sup_behind},
                                      {"times", sp.times},
                                      {"front_pos", sp.front_pos},
                                      {"pass", sp.pass}});
    run.stage("spreading", {{"c_lower_emp", sp.c_lower_emp}, {"c_upper_emp", sp.c_upper_emp}, {"pass", sp.pass}});
    if (!sp.pass) run.hard("spreading: front ratio leaves the sandwich or the supersolution bound fails");
  }

  if (enabled(cfg, "zeronumber")) {
    current = "zeronumber";
    AuditOptions ao;
    ao.tol = 1e-10 * roof.profile.max();
    json summary = json::array();
    auto audit = [&](const std::string& name, const Trajectory& other) {
      const auto rep = monotonicity_audit(*traj, other, ao);
      run.write_json("audit_" + name + ".json", to_json(rep));
      summary.push_back({{"against", name}, {"violations", rep.violations.size()}, {"pass", rep.pass}});
      if (!rep.pass) run.hard("zeronumber: audit against " + name + " has " + std::to_string(rep.violations.size()) +
                              " violation(s)");
    };
    if (terr)
      for (std::size_t k = 1; k + 1 < terr->plateaus.size(); ++k)
        audit("plateau_" + std::to_string(k), frozen(terr->plateaus[k].state.profile, *traj));
    // Compactly supported data ahead of the interface cross the Heaviside solution.
    const Domain& d = cfg.domain;
    Profile bump;
    bump.dx = d.dx;
    bump.x0 = d.x_left;
    bump.values.assign(d.nodes(), 0.0);
    const double centre = cfg.heaviside_a + 8 * L;
    for (std::size_t i = 0; i < bump.size(); ++i)
      if (std::abs(d.x(i) - centre) <= 3 * L) bump.values[i] = roof.profile.at(d.x(i));
    RecordPolicy pol;
    pol.every = cfg.record_every;
    Simulation sim(model, roof.profile, d, cfg.dt, bump, cfg.heaviside_a, pol);
    sim.advance_to(cfg.T_final);
    audit("bump", sim.trajectory());
    run.stage("zeronumber", summary);
  }

  if (enabled(cfg, "eigen")) {
    current = "eigen";
    json j;
    const auto ls = linear_spreading_speed(model);
    j["linear_speed"] = {{"c_star_linear", ls.c_star_linear}, {"lambda_star", ls.lambda_star},
                         {"determinate", ls.determinate}};
    const std::vector<double> lambdas{0.0, 0.2, 0.4, 0.8};
    json rows = json::array();
    double worst = 0.0;
    for (double lam : lambdas) {
      const auto direct = principal_eigenvalue(model, roof.profile, lam);
      const auto var = nadin_variational(model, roof.profile, lam);
      worst = std::max(worst, std::abs(direct.mu - var.mu));
      rows.push_back({{"lambda", lam}, {"direct", direct.mu}, {"variational", var.mu}});
    }
    j["roof_mu"] = rows;
    j["max_disagreement"] = worst;
    const std::vector<double> grid{-0.2, -0.1, 0.0, 0.1, 0.2};
    const auto fit = mu_curvature_check(model, roof.profile, grid);
    j["curvature"] = {{"c2", fit.c2}, {"max_residual", fit.max_residual}, {"threshold", fit.threshold},
                      {"pass", fit.pass}};
    if (terr && !terr->speeds.empty() && ls.determinate) {
      const double rel = (terr->speeds.back() - ls.c_star_linear) / ls.c_star_linear;
      j["last_speed_vs_linear"] = rel;
    }
    run.write_json("eigen.json", j);
    run.stage("eigen", {{"c_star_linear", ls.c_star_linear}, {"max_disagreement", worst}});
    if (worst > 1e-4) run.hard("eigen: direct and variational eigenvalues differ by " + fmt_num(worst));
    if (!fit.pass) run.hard("eigen: curvature fit of mu(lambda) fails");
  }

  if (enabled(cfg, "wavebvp") && terr) {
    current = "wavebvp";
    json list = json::array();
    for (std::size_t k = 0; k < terr->waves.size() && k + 1 < terr->plateaus.size(); ++k) {
      const auto& wr = terr->waves[k];
      if (wr.wave.classification != WaveKind::pulsating_wave) continue;
      const auto& hi = terr->plateaus[k].state;
      const auto& lo = terr->plateaus[k + 1].state;
      WaveOptions wo;
      wo.c_guess = wr.wave.frame_speed_c;
      wo.x0 = cfg.x0_list.front();
      json item{{"front", k + 1}, {"measured_c", wr.wave.frame_speed_c}};
      try {
        const auto w = solve_pulsating(model, lo, hi, wo);
        const double amp = hi.profile.max() - lo.profile.min();
        bool admissible = w.monotonicity_defect <= 1e-6 * amp;
        for (std::size_t j = 0; admissible && j < w.nz; ++j)
          for (std::size_t i = 0; i < w.nx; ++i)
            admissible &= w.at(j, i) >= w.p_minus[i] - 1e-6 * amp && w.at(j, i) <= w.p_plus[i] + 1e-6 * amp;
        const std::string csv = "wave_" + std::to_string(k + 1) + "_bvp.csv";
        write_wave_csv(run.path(csv), w);
        item["header"] = wave_header(w);
        item["csv"] = csv;
        item["admissible"] = admissible;
        item["recurrence_residual"] = pulsating_recurrence_residual(w);
        const double rel = std::abs(w.speed_c - wr.wave.frame_speed_c) / wr.wave.frame_speed_c;
        item["relative_speed_difference"] = rel;
        if (!admissible) run.soft("wavebvp: front " + std::to_string(k + 1) + " strip solution is not a monotone front");
        else if (rel > 0.02)
          run.hard("wavebvp: front " + std::to_string(k + 1) + " speed " + fmt_num(w.speed_c) + " vs measured " +
                   fmt_num(wr.wave.frame_speed_c));
      } catch (const Error& e) {
        item["error"] = e.what();
        run.soft("wavebvp: front " + std::to_string(k + 1) + " not solved: " + e.what());
      }
      list.push_back(std::move(item));
    }
    run.write_json("wavebvp.json", list);
  }

  if (enabled(cfg, "uniqueness")) {
    current = "uniqueness";
    run.note("uniqueness probe over " + std::to_string(cfg.x0_list.size() * cfg.a_list.size()) + " runs");
    TerraceOptions o = terrace_options(cfg);
    o.domain.reset();
    o.verify_steepness = false;
    o.check_isolation = false;
    const auto u = uniqueness_probe(model, roof.profile, cfg.x0_list, cfg.a_list, o, jobs);
    json runs = json::array();
    for (std::size_t k = 0; k < u.reports.size(); ++k)
      runs.push_back({{"x0", u.x0s[k]}, {"a", u.as[k]}, {"N", u.reports[k].N()}, {"speeds", u.reports[k].speeds}});
    run.write_json("uniqueness.json", {{"runs", runs},
                                       {"same_n", u.same_n},
                                       {"max_plateau_distance", u.max_plateau_distance},
                                       {"max_speed_rel_diff", u.max_speed_rel_diff},
                                       {"disagreements", u.disagreements},
                                       {"pass", u.pass}});
    if (!u.pass) run.hard("uniqueness: terrace reports disagree across (x0, a)");
  }

  if (enabled(cfg, "assumption1")) {
    current = "assumption1";
    const auto b = bump_invasion_check(model, roof.profile, 10 * L, std::min(cfg.T_final, 60.0), 5 * L, cfg.delta, cfg.dt);
    run.write_json("assumption1.json", {{"R", b.R}, {"t_final", b.t_final}, {"window", b.window}, {"error", b.error},
                                        {"tol", b.tol}, {"holds", b.holds}});
    if (!b.holds) run.soft("assumption1: compactly supported data do not invade (error " + fmt_num(b.error) + ")");
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log, int jobs) {
  Run run(cfg, log);
  {
    std::ofstream out(run.path("config.resolved.json"), std::ios::binary);
    out << cfg.resolved.dump(2) << '\n';
  }
  std::string current;
  try {
    run_stages(cfg, run, current, jobs);
  } catch (const std::exception& e) {
    run.hard(current + ": " + e.what());
  }
  run.finish();
  return run.res;
}

}  // namespace tlab
