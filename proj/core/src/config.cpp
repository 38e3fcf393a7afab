#include "hyvort/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "hyvort/error.hpp"

namespace hyvort {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& why) {
  fail(Errc::Configuration, key + " = '" + value + "': " + why);
}

double to_double(const std::string& key, const std::string& value) {
  const std::string t = trim(value);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    bad_value(key, value, "not a number");
  }
  if (used != t.size() || !std::isfinite(v)) bad_value(key, value, "not a finite number");
  return v;
}

long to_long(const std::string& key, const std::string& value) {
  const std::string t = trim(value);
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(t, &used);
  } catch (const std::exception&) {
    bad_value(key, value, "not an integer");
  }
  if (used != t.size()) bad_value(key, value, "not an integer");
  return v;
}

std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string solver_name(SolverKind k) {
  switch (k) {
    case SolverKind::DirectDense: return "dense";
    case SolverKind::DirectSparse: return "sparse";
    case SolverKind::BPX_CG: return "bpx";
  }
  return "?";
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto real = [&t](const char* key, double ExperimentConfig::*m) {
      t[key] = [m](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.*m = to_double(k, v);
      };
    };
    auto integer = [&t](const char* key, int ExperimentConfig::*m) {
      t[key] = [m](ExperimentConfig& c, const std::string& k, const std::string& v) {
        c.*m = static_cast<int>(to_long(k, v));
      };
    };
    t["run.experiment"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.experiment = trim(v);
    };
    t["run.out"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.out = trim(v);
    };
    t["run.seed"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      const long s = to_long(k, v);
      if (s < 0) bad_value(k, v, "seed must be non-negative");
      c.seed = static_cast<std::uint64_t>(s);
    };
    integer("run.threads", &ExperimentConfig::threads);

    t["reduced.vortices"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      try {
        c.initial.positions = parse_positions(v);
      } catch (const Error& e) {
        bad_value(k, v, e.what());
      }
    };
    real("reduced.T", &ExperimentConfig::T);
    real("reduced.dt", &ExperimentConfig::dt);
    t["reduced.integrator"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      const std::string s = trim(v);
      if (s == "explicit") c.integrator = Integrator::Explicit;
      else if (s == "midpoint") c.integrator = Integrator::Midpoint;
      else bad_value(k, v, "expected explicit or midpoint");
    };
    integer("reduced.level", &ExperimentConfig::level);
    t["reduced.boundary"] = [](ExperimentConfig& c, const std::string&, const std::string& v) {
      c.boundary = trim(v);
    };
    real("reduced.boundary_amplitude", &ExperimentConfig::boundary_amplitude);
    t["reduced.solver"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      const std::string s = trim(v);
      if (s == "dense") c.solver = SolverKind::DirectDense;
      else if (s == "sparse") c.solver = SolverKind::DirectSparse;
      else if (s == "bpx") c.solver = SolverKind::BPX_CG;
      else bad_value(k, v, "expected dense, sparse or bpx");
    };
    real("reduced.solver_tol", &ExperimentConfig::solver_tol);
    t["reduced.feedback"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      const std::string s = trim(v);
      if (s == "direct") c.feedback = FeedbackMode::Direct;
      else if (s == "emulator") c.feedback = FeedbackMode::Emulator;
      else bad_value(k, v, "expected direct or emulator");
    };

    real("emulator.eps", &ExperimentConfig::emulator_eps);
    t["emulator.R"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      if (trim(v) == "auto") c.emulator_R.reset();
      else c.emulator_R = to_double(k, v);
    };
    t["emulator.Np"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      if (trim(v) == "auto") c.emulator_Np.reset();
      else c.emulator_Np = static_cast<int>(to_long(k, v));
    };
    t["emulator.shots"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      c.shots = to_long(k, v);
    };

    real("nls.eps", &ExperimentConfig::eps);
    t["nls.dt"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      if (trim(v) == "auto") c.nls_dt.reset();
      else c.nls_dt = to_double(k, v);
    };
    real("nls.tol", &ExperimentConfig::nls_tol);

    t["sweep.eps"] = [](ExperimentConfig& c, const std::string& k, const std::string& v) {
      try {
        c.eps_list = parse_list(v);
      } catch (const Error& e) {
        bad_value(k, v, e.what());
      }
    };
    real("sweep.r_mask", &ExperimentConfig::r_mask);
    integer("sweep.min_level", &ExperimentConfig::min_level);
    integer("sweep.max_level", &ExperimentConfig::max_level);

    real("filament.radius", &ExperimentConfig::filament_radius);
    integer("filament.nodes", &ExperimentConfig::filament_nodes);
    real("filament.dt", &ExperimentConfig::filament_dt);
    real("filament.stop_radius", &ExperimentConfig::filament_stop_radius);
    integer("filament.london_level", &ExperimentConfig::london_level);

    real("checks.bpx_weight_offset", &ExperimentConfig::bpx_weight_offset);
    return t;
  }();
  return table;
}

void check(bool ok, const std::string& key, const std::string& what) {
  if (!ok) fail(Errc::Configuration, key + ": " + what);
}

}  // namespace

std::vector<double> parse_list(const std::string& text) {
  std::string s = text;
  for (char& ch : s)
    if (ch == ',') ch = ' ';
  std::istringstream is(s);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) out.push_back(to_double("list", tok));
  require(!out.empty(), Errc::Configuration, "empty list");
  return out;
}

std::vector<Vec2> parse_positions(const std::string& text) {
  std::vector<Vec2> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ';')) {
    if (trim(item).empty()) continue;
    std::string s = item;
    for (char& ch : s)
      if (ch == ',') ch = ' ';
    std::istringstream ps(s);
    std::string x, y, extra;
    if (!(ps >> x >> y) || (ps >> extra))
      fail(Errc::Configuration, "vortex position '" + trim(item) + "' is not 'x y'");
    out.emplace_back(to_double("x", x), to_double("y", y));
  }
  require(!out.empty(), Errc::Configuration, "no vortex positions");
  return out;
}

int sweep_level(double eps, int min_level, int max_level) {
  int level = min_level;
  while (level < max_level && std::ldexp(1.0, -level) > eps / 4) ++level;
  return level;
}

void set_option(ExperimentConfig& config, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) fail(Errc::Configuration, "unknown key '" + key + "'");
  it->second(config, key, value);
}

void ExperimentConfig::validate() const {
  static const std::vector<std::string> names{"m1",       "m2",          "sweep", "schrod-check",
                                              "gl-demo",  "filament-demo", "checks"};
  check(std::find(names.begin(), names.end(), experiment) != names.end(), "run.experiment",
        "unknown experiment '" + experiment + "'");
  check(!out.empty(), "run.out", "empty output directory");
  check(threads >= 1 && threads <= 64, "run.threads", "must be in [1, 64]");
  check(!initial.positions.empty(), "reduced.vortices", "at least one vortex");
  for (const auto& a : initial.positions)
    check(a.x() > 0 && a.x() < 1 && a.y() > 0 && a.y() < 1, "reduced.vortices",
          "positions must lie in (0,1)^2");
  check(min_pair_distance(initial) > collision_tol(), "reduced.vortices", "vortices collide");
  check(T > 0 && T <= 10, "reduced.T", "must be in (0, 10]");
  check(dt > 0 && dt <= T, "reduced.dt", "must be in (0, T]");
  check(level >= 2 && level <= 10, "reduced.level", "must be in [2, 10]");
  check(boundary == "deg2" || boundary.rfind("table:", 0) == 0, "reduced.boundary",
        "expected deg2 or table:<path>");
  check(std::abs(boundary_amplitude) <= 10, "reduced.boundary_amplitude", "|value| <= 10");
  check(solver_tol > 0 && solver_tol < 1, "reduced.solver_tol", "must be in (0, 1)");
  check(solver != SolverKind::DirectDense || level <= HarmonicSolver::kMaxDenseLevel,
        "reduced.solver", "dense solver needs level <= 6");
  check(emulator_eps > 0 && emulator_eps < 1, "emulator.eps", "must be in (0, 1)");
  check(!emulator_R || *emulator_R > 0, "emulator.R", "must be positive");
  check(!emulator_Np || (*emulator_Np >= 4 && *emulator_Np <= (1 << 20)), "emulator.Np",
        "must be in [4, 2^20]");
  check(shots >= 0, "emulator.shots", "must be non-negative");
  check(feedback != FeedbackMode::Emulator || level <= 6, "reduced.feedback",
        "emulator feedback needs level <= 6 (dense spectral solver)");
  check(eps > 0 && eps < 1, "nls.eps", "must be in (0, 1)");
  check(!nls_dt || *nls_dt > 0, "nls.dt", "must be positive");
  check(nls_tol > 0 && nls_tol < 1, "nls.tol", "must be in (0, 1)");
  for (double e : eps_list) check(e > 0 && e < 1, "sweep.eps", "values must be in (0, 1)");
  check(r_mask >= 0 && r_mask < 0.5, "sweep.r_mask", "must be in [0, 0.5)");
  check(min_level >= 3 && min_level <= max_level && max_level <= 10, "sweep.min_level",
        "need 3 <= min_level <= max_level <= 10");
  check(filament_radius > 0 && filament_radius < 0.5, "filament.radius", "must be in (0, 0.5)");
  check(filament_nodes >= 8 && filament_nodes <= 100000, "filament.nodes",
        "must be in [8, 100000]");
  check(filament_dt > 0, "filament.dt", "must be positive");
  check(filament_stop_radius > 0 && filament_stop_radius < filament_radius,
        "filament.stop_radius", "must be in (0, radius)");
  check(london_level >= 2 && london_level <= 5, "filament.london_level", "must be in [2, 5]");
  check(std::abs(bpx_weight_offset) <= 4, "checks.bpx_weight_offset", "|value| <= 4");
}

ExperimentConfig parse_config(std::istream& is, ExperimentConfig base) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    fail(Errc::Configuration, std::string("config syntax: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) fail(Errc::Configuration, "key '" + section + "' outside a section");
    for (const auto& [name, value] : body) set_option(base, section + "." + name, value.data());
  }
  base.validate();
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) fail(Errc::Configuration, "cannot open config file " + path);
  return parse_config(in, std::move(base));
}

std::vector<std::pair<std::string, std::string>> config_entries(const ExperimentConfig& c) {
  std::ostringstream pos;
  for (int j = 0; j < c.initial.size(); ++j)
    pos << (j ? "; " : "") << fmt(c.initial.positions[j].x()) << ' '
        << fmt(c.initial.positions[j].y());
  std::ostringstream eps;
  for (std::size_t j = 0; j < c.eps_list.size(); ++j) eps << (j ? "," : "") << fmt(c.eps_list[j]);
  std::vector<std::pair<std::string, std::string>> e{
      {"run.experiment", c.experiment},
      {"run.out", c.out},
      {"run.seed", std::to_string(c.seed)},
      {"run.threads", std::to_string(c.threads)},
      {"reduced.vortices", pos.str()},
      {"reduced.T", fmt(c.T)},
      {"reduced.dt", fmt(c.dt)},
      {"reduced.integrator", c.integrator == Integrator::Explicit ? "explicit" : "midpoint"},
      {"reduced.level", std::to_string(c.level)},
      {"reduced.boundary", c.boundary},
      {"reduced.boundary_amplitude", fmt(c.boundary_amplitude)},
      {"reduced.solver", solver_name(c.solver)},
      {"reduced.solver_tol", fmt(c.solver_tol)},
      {"reduced.feedback", c.feedback == FeedbackMode::Direct ? "direct" : "emulator"},
      {"emulator.eps", fmt(c.emulator_eps)},
      {"emulator.R", c.emulator_R ? fmt(*c.emulator_R) : "auto"},
      {"emulator.Np", c.emulator_Np ? std::to_string(*c.emulator_Np) : "auto"},
      {"emulator.shots", std::to_string(c.shots)},
      {"nls.eps", fmt(c.eps)},
      {"nls.dt", c.nls_dt ? fmt(*c.nls_dt) : "auto"},
      {"nls.tol", fmt(c.nls_tol)},
      {"sweep.eps", eps.str()},
      {"sweep.r_mask", fmt(c.r_mask)},
      {"sweep.min_level", std::to_string(c.min_level)},
      {"sweep.max_level", std::to_string(c.max_level)},
      {"filament.radius", fmt(c.filament_radius)},
      {"filament.nodes", std::to_string(c.filament_nodes)},
      {"filament.dt", fmt(c.filament_dt)},
      {"filament.stop_radius", fmt(c.filament_stop_radius)},
      {"filament.london_level", std::to_string(c.london_level)},
      {"checks.bpx_weight_offset", fmt(c.bpx_weight_offset)},
  };
  return e;
}

}  // namespace hyvort
