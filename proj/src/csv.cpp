#include "glsid/csv.hpp"

#include <charconv>
#include <filesystem>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "glsid/errors.hpp"

namespace glsid {

namespace {

std::string base(const std::string& path) { return std::filesystem::path(path).filename().string(); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + base(path) + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::Io, "cannot read '" + base(path) + "'");
  return buf.str();
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void fail(const std::string& source, size_t line, const std::string& what) {
  throw Error(ErrorCode::Parse, source + ":" + std::to_string(line) + ": " + what);
}

bool parse_double(const std::string& field, double& value) {
  if (field.empty()) return false;
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (*begin == '+') ++begin;
  const auto res = std::from_chars(begin, end, value);
  return res.ec == std::errc() && res.ptr == end && std::isfinite(value);
}

struct Line {
  size_t number;
  std::vector<std::string> fields;
};

std::vector<Line> content_lines(const std::string& text) {
  std::vector<Line> out;
  std::istringstream in(text);
  std::string raw;
  size_t number = 0;
  while (std::getline(in, raw)) {
    ++number;
    const std::string t = trim(raw);
    if (t.empty() || t.front() == '#') continue;
    out.push_back({number, split_fields(t)});
  }
  return out;
}

std::vector<double> numeric_row(const Line& line, const std::string& source) {
  std::vector<double> row;
  for (size_t j = 0; j < line.fields.size(); ++j) {
    double v = 0.0;
    if (!parse_double(line.fields[j], v)) {
      fail(source, line.number, "field " + std::to_string(j + 1) + " ('" + line.fields[j] +
                                    "') is not a finite number");
    }
    row.push_back(v);
  }
  return row;
}

Matrix rows_to_matrix(const std::vector<Line>& lines, const std::string& source) {
  if (lines.empty()) throw Error(ErrorCode::Parse, source + ": no data rows");
  const size_t cols = lines.front().fields.size();
  Matrix out(static_cast<Index>(lines.size()), static_cast<Index>(cols));
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].fields.size() != cols) {
      fail(source, lines[i].number, "expected " + std::to_string(cols) + " fields, found " +
                                        std::to_string(lines[i].fields.size()));
    }
    const auto row = numeric_row(lines[i], source);
    for (size_t j = 0; j < cols; ++j) out(static_cast<Index>(i), static_cast<Index>(j)) = row[j];
  }
  return out;
}

int parse_index(const std::string& field, const std::string& source, size_t line, const char* name) {
  int v = 0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size() || v < 1) {
    fail(source, line, std::string(name) + " must be a positive integer, got '" + field + "'");
  }
  return v;
}

}  // namespace

Matrix parse_matrix_csv(const std::string& text, const std::string& source) {
  return rows_to_matrix(content_lines(text), source);
}

Matrix read_matrix_csv(const std::string& path) { return parse_matrix_csv(read_file(path), base(path)); }

Vector read_vector_csv(const std::string& path) {
  const Matrix m = read_matrix_csv(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw Error(ErrorCode::Parse, base(path) + ": expected a single column, found " + std::to_string(m.cols()));
}

RestrictionTable read_restrictions_csv(const std::string& path) {
  std::vector<Line> lines = content_lines(read_file(path));
  if (!lines.empty() && !lines.front().fields.empty() && lines.front().fields.back() == "rhs") {
    lines.erase(lines.begin());
  }
  const Matrix table = rows_to_matrix(lines, base(path));
  if (table.cols() < 2) {
    throw Error(ErrorCode::Parse, base(path) + ": need at least one coefficient column and the rhs column");
  }
  return {table.leftCols(table.cols() - 1), table.col(table.cols() - 1)};
}

PanelTable parse_panel_csv(const std::string& text, const std::string& source) {
  const std::vector<Line> lines = content_lines(text);
  if (lines.empty()) throw Error(ErrorCode::Parse, source + ": empty panel file");
  const Line& header = lines.front();
  const auto& h = header.fields;
  if (h.size() < 4 || h[0] != "equation" || h[1] != "period" || h[2] != "response") {
    fail(source, header.number, "header must be equation,period,response,x1,...,xK");
  }
  for (size_t j = 3; j < h.size(); ++j) {
    if (h[j] != "x" + std::to_string(j - 2)) {
      fail(source, header.number, "column " + std::to_string(j + 1) + " must be named x" + std::to_string(j - 2));
    }
  }
  const Index k = static_cast<Index>(h.size() - 3);
  std::map<std::pair<int, int>, std::pair<double, std::vector<double>>> cells;
  int n = 0;
  int m = 0;
  for (size_t i = 1; i < lines.size(); ++i) {
    const Line& line = lines[i];
    if (line.fields.size() != h.size()) {
      fail(source, line.number, "expected " + std::to_string(h.size()) + " fields, found " +
                                    std::to_string(line.fields.size()));
    }
    const int eq = parse_index(line.fields[0], source, line.number, "equation");
    const int per = parse_index(line.fields[1], source, line.number, "period");
    Line values{line.number, {line.fields.begin() + 2, line.fields.end()}};
    const auto row = numeric_row(values, source);
    if (!cells.emplace(std::make_pair(eq, per), std::make_pair(row[0], std::vector<double>(row.begin() + 1, row.end())))
             .second) {
      fail(source, line.number, "duplicate (equation, period) pair");
    }
    n = std::max(n, eq);
    m = std::max(m, per);
  }
  if (static_cast<int>(cells.size()) != n * m) {
    throw Error(ErrorCode::Parse, source + ": panel is unbalanced (" + std::to_string(cells.size()) +
                                      " rows for " + std::to_string(n) + " equations x " +
                                      std::to_string(m) + " periods)");
  }
  PanelTable out;
  for (int eq = 1; eq <= n; ++eq) {
    Matrix x(m, k);
    Vector y(m);
    for (int per = 1; per <= m; ++per) {
      const auto& cell = cells.at({eq, per});
      y(per - 1) = cell.first;
      for (Index j = 0; j < k; ++j) x(per - 1, j) = cell.second[static_cast<size_t>(j)];
    }
    out.designs.push_back(std::move(x));
    out.responses.push_back(std::move(y));
  }
  return out;
}

PanelTable read_panel_csv(const std::string& path) { return parse_panel_csv(read_file(path), base(path)); }

}  // namespace glsid
