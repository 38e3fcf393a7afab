#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hyvort {

enum class Errc {
  Dimension,
  Domain,
  Singularity,
  Collision,
  DomainExit,
  IterationFailure,
  Geometry,
  WindingMismatch,
  Solver,
  Resource,
  Parameter,
  Numerical,
  TruncationTooSmall,
  DegenerateObservable,
  Degenerate,
  Configuration,
  Detection,
  DegenerateAlignment,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Iterative solver breakdown or iteration cap; carries the relative residual history.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::vector<double> history);
  const std::vector<double>& history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

class IterationFailure : public Error {
 public:
  IterationFailure(const std::string& what, double last_residual);
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

inline void require(bool ok, Errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace hyvort
