#include "tlab/profile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tlab/error.hpp"
#include "tlab/io.hpp"

namespace tlab {

double Profile::at(double x) const {
  const std::size_t n = values.size();
  if (n == 0) throw InternalError("Profile::at on empty profile");
  if (n == 1) return values[0];
  double s = (x - x0) / dx;
  if (periodic) {
    const double nn = static_cast<double>(n);
    s = std::fmod(s, nn);
    if (s < 0) s += nn;
    auto i = static_cast<std::size_t>(std::floor(s));
    if (i >= n) i = 0;
    const double w = s - static_cast<double>(i);
    const std::size_t j = (i + 1) % n;
    return (1.0 - w) * values[i] + w * values[j];
  }
  if (s <= 0) return values.front();
  if (s >= static_cast<double>(n - 1)) return values.back();
  const auto i = static_cast<std::size_t>(std::floor(s));
  const double w = s - static_cast<double>(i);
  return (1.0 - w) * values[i] + w * values[i + 1];
}

double Profile::max() const { return *std::max_element(values.begin(), values.end()); }
double Profile::min() const { return *std::min_element(values.begin(), values.end()); }

bool Profile::finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

Profile Profile::constant(double value, double period, std::size_t n) {
  return Profile{std::vector<double>(n, value), period / static_cast<double>(n), 0.0, true};
}

Profile Profile::sample(const std::function<double(double)>& fn, double x0, double dx,
                        std::size_t n, bool periodic) {
  Profile p{std::vector<double>(n), dx, x0, periodic};
  for (std::size_t i = 0; i < n; ++i) p.values[i] = fn(p.x(i));
  return p;
}

double max_abs_diff(const Profile& a, const Profile& b) {
  if (a.size() != b.size()) throw InternalError("max_abs_diff: grid mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void write_profile_csv(std::ostream& out, const Profile& p) {
  out << "x,value\n";
  for (std::size_t i = 0; i < p.size(); ++i) out << fmt_num(p.x(i)) << ',' << fmt_num(p[i]) << '\n';
}

void write_profile_csv(const std::string& path, const Profile& p) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  write_profile_csv(out, p);
}

Profile read_profile_csv(const std::string& path, bool periodic) {
  const auto table = read_csv(path, {"x", "value"});
  const auto& xs = table.columns[0];
  const auto& vs = table.columns[1];
  if (xs.size() < 2) throw ConfigError(path, "profile needs at least two rows");
  const double dx = xs[1] - xs[0];
  if (!(dx > 0)) throw ConfigError(path, "x must be strictly increasing");
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (std::abs((xs[i] - xs[i - 1]) - dx) > 1e-9 * std::max(1.0, std::abs(dx) * 1e3))
      throw ConfigError(path, "x grid is not uniform at row " + std::to_string(i + 1));
  }
  return Profile{vs, dx, xs[0], periodic};
}

}  // namespace tlab
