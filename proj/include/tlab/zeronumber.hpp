#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tlab/evolve.hpp"
#include "tlab/profile.hpp"

namespace tlab {

enum class Sign : signed char { minus = -1, plus = 1 };

/// Maximally compressed word over {+, -}. The empty word has z_count -1.
struct SignWord {
  std::vector<Sign> letters;

  int z_count() const { return static_cast<int>(letters.size()) - 1; }
  std::string str() const;  ///< e.g. "[+ -]"
  /// Accepts "+-+", "[+ - +]", "[]" and the like.
  static SignWord parse(std::string_view text);
  bool operator==(const SignWord&) const = default;
};

/// Samples with |w| <= tol are dead band and dropped before compression.
SignWord sign_word(std::span<const double> samples, double tol);
SignWord sign_word(const Profile& samples, double tol);

/// True iff b embeds order-preservingly into a (b is a subword of a).
bool is_subword(const SignWord& a, const SignWord& b);

/// 10 * dx^2 * max|u_xx| over all snapshots, floored at 1e-12.
double default_dead_band(const Trajectory& traj);

struct AuditEntry {
  double t;
  int z_count;
  std::string word;
};

struct AuditEvent {
  std::string kind;  ///< z_increase, subword_break, band_event, near_tangency
  double t_from;
  double t_to;
  std::string word_from;
  std::string word_to;
  bool drop_verified = false;  ///< near_tangency only: Z dropped by >= 2 across the window
};

struct AuditReport {
  double tol = 0.0;
  double t_exclude = 0.0;
  std::vector<AuditEntry> entries;
  std::vector<AuditEvent> violations;
  std::vector<AuditEvent> events;  ///< band and tangency events; informational
  bool pass = false;
};

struct AuditOptions {
  double tol = 0.0;        ///< <= 0: default_dead_band of the first run
  double t_exclude = 0.0;  ///< violations before this time are logged as events only
  /// The earlier word of each pair is read with band tol * fine_ratio, so a
  /// pair fails only when the later word is not explained at finer resolution.
  double fine_ratio = 1e-3;
};

/// Z and SGN of run_a - run_b along aligned snapshots.
AuditReport monotonicity_audit(const Trajectory& run_a, const Trajectory& run_b, const AuditOptions& opts = {});

nlohmann::json to_json(const AuditReport& rep);

enum class Steepness { steeper, not_steeper, identical_up_to_shift };
std::string_view to_string(Steepness s);

struct SteepnessResult {
  Steepness verdict = Steepness::not_steeper;
  double witness_t1 = 0.0, witness_t2 = 0.0;
  std::string witness_word;
  double best_shift = 0.0;
  double shift_residual = 0.0;
  int pairs_checked = 0;
};

struct SteepnessOptions {
  int samples_a = 16;
  int samples_b = 16;
};

/// Steepness of family a over family b (both on one spatial grid): every sampled
/// difference word a(t1) - b(t2) must be a subword of [+ -].
SteepnessResult steeper_than(std::span<const Snapshot> family_a, std::span<const Snapshot> family_b, double tol,
                             const SteepnessOptions& opts = {});

}  // namespace tlab
