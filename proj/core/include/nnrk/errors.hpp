#pragma once

#include <stdexcept>
#include <string>

namespace nnrk {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Mesh construction produced a degenerate cell.
class MeshError : public Error {
 public:
  MeshError(const std::string& what, int node) : Error(what), node_(node) {}
  int node() const { return node_; }

 private:
  int node_;
};

/// The RK moment matrix is singular or badly conditioned at a point.
class SingularMomentError : public Error {
 public:
  SingularMomentError(const std::string& what, double x, double y)
      : Error(what), x_(x), y_(y) {}
  double x() const { return x_; }
  double y() const { return y_; }

 private:
  double x_, y_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value in the loss; carries the first offending cell (or -1).
class NumericError : public Error {
 public:
  NumericError(const std::string& what, int cell) : Error(what), cell_(cell) {}
  int cell() const { return cell_; }

 private:
  int cell_;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration; `path` names the offending key (e.g. "material.E").
class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& msg)
      : Error(path + ": " + msg), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace nnrk
