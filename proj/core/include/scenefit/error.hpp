#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scenefit {

/// Base class for every failure raised by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or inconsistent input: files, configs, argument values.
class InputError : public Error {
public:
  explicit InputError(const std::string& what) : Error(what) {}
};

/// A point at or behind the camera near plane during perspective projection.
class PointBehindCamera : public Error {
public:
  PointBehindCamera(std::size_t index, double z, double z_min)
      : Error("point " + std::to_string(index) + " has z=" + std::to_string(z) +
              " <= z_min=" + std::to_string(z_min)),
        index(index),
        z(z) {}

  std::size_t index;
  double z;
};

}  // namespace scenefit
