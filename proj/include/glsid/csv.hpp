#pragma once

#include <string>
#include <vector>

#include "glsid/spectral.hpp"

namespace glsid {

/// Headerless CSV of decimal numbers, one matrix row per line. Blank lines
/// and lines starting with '#' are skipped. Parse failures throw
/// ErrorCode::Parse with the 1-based line number; unreadable files throw
/// ErrorCode::Io.
Matrix read_matrix_csv(const std::string& path);
Matrix parse_matrix_csv(const std::string& text, const std::string& source = "<input>");

/// A single column (or a single row) read as a vector.
Vector read_vector_csv(const std::string& path);

/// K coefficient columns followed by the right-hand side. An optional header
/// whose last field is "rhs" is accepted.
struct RestrictionTable {
  Matrix R;
  Vector r;
};
RestrictionTable read_restrictions_csv(const std::string& path);

/// Long panel format with header equation,period,response,x1,...,xK.
/// Equations and periods are 1-based and every (equation, period) pair must
/// appear exactly once.
struct PanelTable {
  std::vector<Matrix> designs;    // n blocks, m x K
  std::vector<Vector> responses;  // n blocks, m
};
PanelTable read_panel_csv(const std::string& path);
PanelTable parse_panel_csv(const std::string& text, const std::string& source = "<input>");

}  // namespace glsid
