#pragma once

#include <stdexcept>
#include <string>

namespace lmcf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by frame computation on a curve that cannot carry a frame.
class GeometryError : public Error {
 public:
  enum class Kind { kInvalidMesh, kCusp };

  GeometryError(Kind kind, int vertex, const std::string& what)
      : Error(what), kind_(kind), vertex_(vertex) {}

  Kind kind() const { return kind_; }
  int vertex() const { return vertex_; }

 private:
  Kind kind_;
  int vertex_;
};

class ConfigError : public Error {
 public:
  ConfigError(int line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

}  // namespace lmcf
