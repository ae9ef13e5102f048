#pragma once

#include <string>

#include <json.hpp>

#include "glsid/spectral.hpp"

namespace glsid {

/// Insertion-ordered so both renderings list fields in the same order.
using ReportDocument = nlohmann::ordered_json;

ReportDocument to_report(const Vector& v);
/// Row-major nested arrays.
ReportDocument to_report(const Matrix& m);

/// JSON, shortest round-trip doubles, two-space indent, trailing newline.
std::string render_machine(const ReportDocument& doc);

/// Indented key/value text; doubles at 6 significant digits.
std::string render_human(const ReportDocument& doc);

}  // namespace glsid
