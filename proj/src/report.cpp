#include "glsid/report.hpp"

#include <cstdio>
#include <sstream>

namespace glsid {

namespace {

std::string scalar(const ReportDocument& v) {
  if (v.is_null()) return "-";
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v.get<double>());
    return buf;
  }
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

bool is_scalar(const ReportDocument& v) { return !v.is_object() && !v.is_array(); }

bool is_flat_array(const ReportDocument& v) {
  if (!v.is_array()) return false;
  for (const auto& e : v) {
    if (!is_scalar(e)) return false;
  }
  return true;
}

std::string inline_array(const ReportDocument& v) {
  std::string out = "[";
  bool first = true;
  for (const auto& e : v) {
    if (!first) out += ", ";
    out += scalar(e);
    first = false;
  }
  return out + "]";
}

void render(std::ostringstream& out, const ReportDocument& v, int indent);

void render_value(std::ostringstream& out, const ReportDocument& v, int indent) {
  if (is_scalar(v)) {
    out << ' ' << scalar(v) << '\n';
  } else if (is_flat_array(v)) {
    out << ' ' << inline_array(v) << '\n';
  } else if (v.empty()) {
    out << (v.is_array() ? " []" : " {}") << '\n';
  } else {
    out << '\n';
    render(out, v, indent + 2);
  }
}

void render(std::ostringstream& out, const ReportDocument& v, int indent) {
  const std::string pad(static_cast<size_t>(indent), ' ');
  if (v.is_object()) {
    for (const auto& [key, value] : v.items()) {
      out << pad << key << ':';
      render_value(out, value, indent);
    }
  } else if (v.is_array()) {
    for (const auto& e : v) {
      if (is_scalar(e)) {
        out << pad << "- " << scalar(e) << '\n';
      } else if (is_flat_array(e)) {
        out << pad << "  " << inline_array(e) << '\n';
      } else {
        out << pad << "-\n";
        render(out, e, indent + 2);
      }
    }
  } else {
    out << pad << scalar(v) << '\n';
  }
}

}  // namespace

ReportDocument to_report(const Vector& v) {
  ReportDocument out = ReportDocument::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

ReportDocument to_report(const Matrix& m) {
  ReportDocument out = ReportDocument::array();
  for (Index i = 0; i < m.rows(); ++i) {
    ReportDocument row = ReportDocument::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

std::string render_machine(const ReportDocument& doc) { return doc.dump(2) + "\n"; }

std::string render_human(const ReportDocument& doc) {
  std::ostringstream out;
  render(out, doc, 0);
  return out.str();
}

}  // namespace glsid
