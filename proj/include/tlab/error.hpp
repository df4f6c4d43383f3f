#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent user input. `fields` lists every offending field.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), fields_{field} {}
  ConfigError(std::vector<std::string> fields, const std::string& what)
      : Error(what), fields_(std::move(fields)) {}
  const std::vector<std::string>& fields() const { return fields_; }

 private:
  std::vector<std::string> fields_;
};

class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, double last_residual)
      : Error(what + " (last residual " + std::to_string(last_residual) + ")"),
        last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

class IntegrationFailure : public Error {
 public:
  IntegrationFailure(const std::string& what, double last_valid_time)
      : Error(what + " (last valid t = " + std::to_string(last_valid_time) + ")"),
        last_valid_time_(last_valid_time) {}
  double last_valid_time() const { return last_valid_time_; }

 private:
  double last_valid_time_;
};

class UnsupportedModel : public Error {
 public:
  using Error::Error;
};

class NoFrontInBracket : public Error {
 public:
  using Error::Error;
};

/// Newton on the strip problem did not converge: no front between the end states.
class NoWaveFound : public Error {
 public:
  using Error::Error;
};

/// A wave was found but travels leftwards; swap the end states.
class OrientationError : public Error {
 public:
  OrientationError(const std::string& what, double speed) : Error(what), speed_(speed) {}
  double speed() const { return speed_; }

 private:
  double speed_;
};

class MissingCrossing : public Error {
 public:
  MissingCrossing(const std::string& what, double attained_sup)
      : Error(what + " (attained sup " + std::to_string(attained_sup) + ")"),
        attained_sup_(attained_sup) {}
  double attained_sup() const { return attained_sup_; }

 private:
  double attained_sup_;
};

class RunawayTerrace : public Error {
 public:
  using Error::Error;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace tlab
