#pragma once

#include <iosfwd>
#include <string>

#include "hyvort/grid2d.hpp"

namespace hyvort {

enum class FieldFormat { Text, Csv };

// Text: "# level L" and "# kind K" header lines, then "x y re im" rows with x fastest.
// Csv: "x,y,re,im" header then the same rows. 17 significant digits.
void write_field(std::ostream& os, const Grid2D& grid, const Eigen::VectorXcd& values,
                 const std::string& kind, FieldFormat format = FieldFormat::Text);
void write_field(const std::string& path, const Grid2D& grid, const Eigen::VectorXcd& values,
                 const std::string& kind, FieldFormat format = FieldFormat::Text);
void write_field(const std::string& path, const ComplexField2D& field, const std::string& kind,
                 FieldFormat format = FieldFormat::Text);

struct FieldDump {
  int level = 0;
  std::string kind;
  Eigen::VectorXcd values;
};

FieldDump read_field(std::istream& is);

}  // namespace hyvort
