#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tlab/evolve.hpp"
#include "tlab/profile.hpp"
#include "tlab/reaction.hpp"
#include "tlab/stationary.hpp"
#include "tlab/wavebvp.hpp"
#include "tlab/zeronumber.hpp"

namespace tlab {

struct LevelCrossing {
  double x0 = 0.0;
  double alpha = 0.0;
  int k = 0;
  double tau = 0.0;  ///< first time u(t, x0 + kL) reaches alpha
};

/// Everything a single run records about one level alpha at the points x0 + kL.
struct CrossingData {
  double x0 = 0.0, alpha = 0.0, L = 1.0, dx = 0.0, dt = 0.0;
  std::vector<LevelCrossing> crossings;
  std::vector<double> u_t;          ///< du/dt at the crossing point
  std::vector<double> periodicity;  ///< max |u(x) - u(x+L)| on [X - 2L, X + 2L]
  std::vector<double> flatness;     ///< max |du/dt| on [X - L, X + L]
  Profile last_local_period;        ///< one period of u next to the last crossing, at that time
  std::vector<double> attained_sup;  ///< running max at each point x0 + kL

  /// Dense window capture started at a late crossing.
  struct Window {
    int k = -1;
    double t_cross = 0.0;
    double x_left = 0.0;  ///< absolute position of the first window node
    double X = 0.0;       ///< crossing point
    std::vector<double> times;
    std::vector<std::vector<double>> fields;
  };
  std::optional<Window> window;
};

struct CaptureOptions {
  double after = 0.0;          ///< start window captures only at crossings after this time
  double half_width = 8.0;     ///< window half width (raised to 2L)
  double duration_factor = 2.5;  ///< capture length in units of the latest increment
  double band = 1e-9;          ///< crossing fires at alpha - band * max p
};

/// Observer locating first crossings of alpha at x0 + kL, k = 0..k_max.
class CrossingObserver : public Observer {
 public:
  CrossingObserver(const Domain& domain, double x0, double L, double alpha, int k_max, double p_max,
                   CaptureOptions opts = {});
  std::string name() const override { return "level-crossing"; }
  void observe(double t, std::span<const double> u, const Domain& domain) override;
  const CrossingData& data() const { return data_; }
  CrossingData take() { return std::move(data_); }

 private:
  double value_at(std::span<const double> u, int k) const;
  void start_window(int k, double t_cross);

  CrossingData data_;
  Domain domain_;
  int k_max_;
  double threshold_;
  CaptureOptions opts_;
  int k_next_ = 0;
  std::size_t M_;  ///< nodes per period
  double t_prev_ = 0.0;
  bool first_ = true;
  std::vector<double> prev_obs_;
  std::vector<double> prev_local_;  ///< previous field on [X_next - 2L, X_next + 4L]
  std::size_t prev_local_start_ = 0;
  struct Active {
    CrossingData::Window w;
    std::size_t i0, n;
    double duration;
  };
  std::vector<Active> active_;
};

/// Single-run first crossings of alpha at x0 + kL (k = 0..k_max), using the
/// shift identity u(t, x; a - kL) = u(t, x + kL; a). Throws MissingCrossing.
std::vector<LevelCrossing> crossing_times(const ReactionModel& model, const Profile& p, double x0, double alpha,
                                          double a, int k_max, double t_final, const Domain& domain,
                                          double dt = 0.0);

enum class WaveKind { pulsating_wave, stationary, undecided };
std::string_view to_string(WaveKind k);

struct DriftEstimate {
  std::vector<double> t;    ///< nodes j L / c
  std::vector<double> m;    ///< t_j - j L / c
  double error_bar = 0.0;   ///< +- recording resolution
  double tail_ratio = 0.0;  ///< max |m| / t over the second half
  double early_ratio = 0.0; ///< max |m| / t over the second quarter
  bool decaying = false;
};

/// Piecewise-affine drift from the crossing times t_j at the nodes t = j L / c.
DriftEstimate drift_estimate(const std::vector<LevelCrossing>& crossings, double c, double L, double error_bar = 0.0);

struct ExtractedWave {
  WaveKind classification = WaveKind::undecided;
  double alpha = 0.0;
  double frame_speed_c = 0.0;
  double period_T = 0.0;
  double tau_spread = 0.0;         ///< relative spread of the last increments
  std::vector<double> taus;
  DriftEstimate drift;
  std::vector<Snapshot> profile_history;  ///< x relative to the crossing point, t relative to the crossing
  double recurrence_residual = -1.0;      ///< < 0 when not measured
  double min_time_derivative = 0.0;
  Profile stationary_profile;
  std::string diagnostics;
};

struct ClassifyOptions {
  int min_crossings = 20;
  int window = 10;
  double spread_tol = 0.02;
  double delta = 1e-2;
  double stationary_ut = 1e-6;
  double c_upper = 0.0;  ///< for the near-zero increment threshold 1e-3 L / c_upper
  int history_frames = 16;
};

ExtractedWave classify_limit(const CrossingData& data, const ClassifyOptions& opts = {});

struct PlateauCandidate {
  double x_begin = 0.0, x_end = 0.0;
  Profile period;  ///< one period taken from inside the interval, x0 = 0
  double max_value = 0.0;
};

struct PlateauOptions {
  double delta = 1e-2;
  double min_periods = 3.0;
};

/// Maximal intervals where the field at t_probe is L-periodic and time-flat within delta.
std::vector<PlateauCandidate> detect_plateaus(const Trajectory& run, double t_probe, double L,
                                              const PlateauOptions& opts = {});

struct TerraceOptions {
  double x0 = 0.0;
  double a = -5.0;  ///< Heaviside interface
  double t_final = 200.0;
  double dx = 0.0;  ///< <= 0: L / 64
  double dt = 0.0;  ///< <= 0: default_dt
  std::optional<Domain> domain;
  double gamma = 0.05;
  int gamma_retries = 2;
  int n_max = 16;
  double delta = 1e-2;
  double plateau_min_periods = 3.0;
  double probe_gap = 1.0;  ///< spacing of the time-flatness snapshot
  double recurrence_tol = 1e-2;
  double monotone_tol = 1e-6;
  double outer_margin = 20.0;
  bool verify_steepness = true;
  bool check_isolation = true;
  ClassifyOptions classify;
  WaveOptions wave;
};

struct PlateauReport {
  StationaryState state;
  double x_begin = 0.0, x_end = 0.0;
  std::optional<IsolationReport> isolation;
  bool stable_from_below = true;
  bool marginal = false;
};

struct WaveReport {
  ExtractedWave wave;
  int upper = 0, lower = 1;  ///< plateau indices
  double front_position = 0.0;
  std::string steepness = "unverified";
  std::string steepness_note;
  double bvp_speed = 0.0;
  bool pulsating_ok = false;
};

struct WidthReport {
  int plateau = 0;
  double t1 = 0.0, t2 = 0.0, w1 = 0.0, w2 = 0.0;
  double rate = 0.0;
  double expected = 0.0;
};

struct TerraceReport {
  std::vector<PlateauReport> plateaus;  ///< p_0 > p_1 > ... > p_N = 0
  std::vector<WaveReport> waves;
  std::vector<double> speeds;
  std::vector<WidthReport> widths;
  bool complete = false;
  int undecided_stratum = -1;
  std::string note;
  struct Verdicts {
    bool ordering_ok = false;
    bool speed_ordering_ok = false;
    bool steepness_ok = false;
    bool minimality_ok = false;  ///< restricted to waves the BVP solver produces
    bool outer_ok = false;
    std::vector<bool> pulsating_ok;
  } verdicts;
  Trajectory trajectory;  ///< sparse snapshots of the first run
  double x0 = 0.0, a = 0.0, alpha0 = 0.0;

  std::size_t N() const { return waves.size(); }
};

/// Resamples p onto M points per period and Newton-polishes it.
StationaryState roof_on_grid(const ReactionModel& model, const Profile& p, std::size_t points_per_period);

/// The layered construction: alpha near p_k(x0), classify, read the lower
/// plateau, repeat until the lower state is 0.
TerraceReport assemble(const ReactionModel& model, const Profile& p, const TerraceOptions& opts = {});

struct UniquenessReport {
  std::vector<double> x0s, as;
  std::vector<TerraceReport> reports;
  bool same_n = false;
  double max_plateau_distance = 0.0;
  double max_speed_rel_diff = 0.0;
  bool pass = false;
  std::vector<std::string> disagreements;
};

UniquenessReport uniqueness_probe(const ReactionModel& model, const Profile& p, const std::vector<double>& x0_list,
                                  const std::vector<double>& a_list, const TerraceOptions& base, int jobs = 1);

/// JSON summary; file names for CSV side products are filled in by the caller.
nlohmann::json to_json(const TerraceReport& rep);
void write_frame_csv(const std::string& path, const ExtractedWave& w);
void write_drift_csv(const std::string& path, const DriftEstimate& d);

}  // namespace tlab
