#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hyvort/harmonic.hpp"
#include "hyvort/vortex.hpp"

namespace hyvort {

enum class FeedbackMode { Direct, Emulator };
enum class Integrator { Explicit, Midpoint };

// All runner parameters. Keys are "section.name" in the INI file, e.g. [reduced] dt = 1e-4.
struct ExperimentConfig {
  // [run]
  std::string experiment = "m1";
  std::string out = "out";
  std::uint64_t seed = 1;
  int threads = 1;

  // [reduced]
  VortexConfig initial{{Vec2(0.35, 0.55), Vec2(0.70, 0.40)}, 0.0};
  double T = 0.05;
  double dt = 1e-4;
  Integrator integrator = Integrator::Explicit;
  int level = 6;
  std::string boundary = "deg2";
  double boundary_amplitude = 0.3;
  SolverKind solver = SolverKind::DirectSparse;
  double solver_tol = 1e-10;
  FeedbackMode feedback = FeedbackMode::Direct;

  // [emulator]
  double emulator_eps = 1e-6;
  std::optional<double> emulator_R;
  std::optional<int> emulator_Np;
  long shots = 0;

  // [nls]
  double eps = 0.05;
  std::optional<double> nls_dt;
  double nls_tol = 1e-10;

  // [sweep]
  std::vector<double> eps_list{0.2, 0.1, 0.05, 0.025};
  double r_mask = 0.1;
  int min_level = 5;
  int max_level = 8;

  // [filament]
  double filament_radius = 0.3;
  int filament_nodes = 128;
  double filament_dt = 1e-5;
  double filament_stop_radius = 0.1;
  int london_level = 4;

  // [checks]
  double bpx_weight_offset = 0.0;  // nonzero only as a negative control

  // Throws Configuration with the offending key.
  void validate() const;
};

// Sets one "section.name" key from its text value; unknown keys and unparsable values throw
// Configuration.
void set_option(ExperimentConfig& config, const std::string& key, const std::string& value);

// INI text ("[section]" headers, "name = value" lines, ';' or '#' comments) applied on top of
// base. The result is validated.
ExperimentConfig parse_config(std::istream& is, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

// Canonical "section.name = value" listing of every key, in a fixed order.
std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& config);

// "0.2,0.1" or "0.2 0.1"
std::vector<double> parse_list(const std::string& text);
// "x1 y1; x2 y2"
std::vector<Vec2> parse_positions(const std::string& text);

// Smallest level with h <= eps / 4, clamped to [min_level, max_level].
int sweep_level(double eps, int min_level, int max_level);

}  // namespace hyvort
