#include "hyvort/field_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace hyvort {

void write_field(std::ostream& os, const Grid2D& grid, const Eigen::VectorXcd& values,
                 const std::string& kind, FieldFormat format) {
  require(values.size() == grid.interior_count(), Errc::Dimension, "field length");
  os << std::setprecision(17);
  const char* sep = format == FieldFormat::Csv ? "," : " ";
  if (format == FieldFormat::Text) {
    os << "# level " << grid.level << "\n# kind " << kind << "\n";
  } else {
    os << "x,y,re,im\n";
  }
  for (int k = 0; k < grid.interior_count(); ++k) {
    const Vec2 p = grid.node(k);
    os << p.x() << sep << p.y() << sep << values[k].real() << sep << values[k].imag() << "\n";
  }
}

void write_field(const std::string& path, const Grid2D& grid, const Eigen::VectorXcd& values,
                 const std::string& kind, FieldFormat format) {
  std::ofstream os(path);
  require(static_cast<bool>(os), Errc::Configuration, "cannot open " + path);
  write_field(os, grid, values, kind, format);
}

void write_field(const std::string& path, const ComplexField2D& field, const std::string& kind,
                 FieldFormat format) {
  write_field(path, field.grid, field.values, kind, format);
}

FieldDump read_field(std::istream& is) {
  FieldDump d;
  std::string line;
  std::vector<cplx> vals;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string key;
      ss >> key;
      if (key == "level") ss >> d.level;
      else if (key == "kind") ss >> d.kind;
      continue;
    }
    std::istringstream ss(line);
    double x, y, re, im;
    require(static_cast<bool>(ss >> x >> y >> re >> im), Errc::Configuration,
            "malformed field row: " + line);
    vals.emplace_back(re, im);
  }
  d.values = Eigen::Map<Eigen::VectorXcd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  if (d.level > 0) {
    require(static_cast<Eigen::Index>(Grid2D(d.level).interior_count()) == d.values.size(),
            Errc::Dimension, "field dump row count does not match its level");
  }
  return d;
}

}  // namespace hyvort
