#include "hyvort/error.hpp"

namespace hyvort {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::Dimension: return "dimension";
    case Errc::Domain: return "domain";
    case Errc::Singularity: return "singularity";
    case Errc::Collision: return "collision";
    case Errc::DomainExit: return "domain-exit";
    case Errc::IterationFailure: return "iteration-failure";
    case Errc::Geometry: return "geometry";
    case Errc::WindingMismatch: return "winding-mismatch";
    case Errc::Solver: return "solver";
    case Errc::Resource: return "resource";
    case Errc::Parameter: return "parameter";
    case Errc::Numerical: return "numerical";
    case Errc::TruncationTooSmall: return "truncation-too-small";
    case Errc::DegenerateObservable: return "degenerate-observable";
    case Errc::Degenerate: return "degenerate";
    case Errc::Configuration: return "configuration";
    case Errc::Detection: return "detection";
    case Errc::DegenerateAlignment: return "degenerate-alignment";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + " error: " + what), code_(code) {}

SolverError::SolverError(const std::string& what, std::vector<double> history)
    : Error(Errc::Solver, what), history_(std::move(history)) {}

IterationFailure::IterationFailure(const std::string& what, double last_residual)
    : Error(Errc::IterationFailure, what), last_residual_(last_residual) {}

void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace hyvort
