#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace tlab {

/// A real function sampled on a uniform grid x_i = x0 + i*dx.
///
/// Periodic profiles store exactly one period (values.size() * dx == L) and
/// wrap on evaluation.
struct Profile {
  std::vector<double> values;
  double dx = 1.0;
  double x0 = 0.0;
  bool periodic = false;

  std::size_t size() const { return values.size(); }
  double x(std::size_t i) const { return x0 + static_cast<double>(i) * dx; }
  double length() const { return static_cast<double>(values.size()) * dx; }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }

  /// Linear interpolation; periodic profiles wrap, others clamp to the ends.
  double at(double x) const;
  double max() const;
  double min() const;
  bool finite() const;

  static Profile constant(double value, double period, std::size_t n);
  static Profile sample(const std::function<double(double)>& fn, double x0, double dx,
                        std::size_t n, bool periodic);
};

/// Max-norm distance between two profiles on the same grid.
double max_abs_diff(const Profile& a, const Profile& b);

void write_profile_csv(std::ostream& out, const Profile& p);
void write_profile_csv(const std::string& path, const Profile& p);

/// Reads `x,value`. Grid spacing is inferred and must be uniform.
Profile read_profile_csv(const std::string& path, bool periodic);

}  // namespace tlab
