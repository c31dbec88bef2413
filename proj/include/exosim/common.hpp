#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>
#include <string>

namespace exosim {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// World frame: x fore-aft (forward), y vertical (up), z lateral (right).
inline constexpr double kGravity = 9.81;
inline const Vec3 kGravityVector{0.0, -kGravity, 0.0};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid model parameters; the message names the offending field.
class ModelError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class SynthesisError : public Error {
 public:
  using Error::Error;
};

/// Geometry or mass matrix that cannot be used (coincident endpoints, singular
/// inertia).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class UnsupportedPhaseError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A failure inside the time loop, tagged with the step that raised it.
class SimulationError : public Error {
 public:
  SimulationError(const std::string& what, long step)
      : Error("step " + std::to_string(step) + ": " + what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

inline void require_size(Eigen::Index actual, Eigen::Index expected,
                         const char* what) {
  if (actual != expected) {
    throw DimensionError(std::string(what) + ": expected length " +
                         std::to_string(expected) + ", got " +
                         std::to_string(actual));
  }
}

}  // namespace exosim
