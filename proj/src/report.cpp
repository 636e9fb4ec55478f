#include "monoreg/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "monoreg/errors.hpp"

namespace monoreg {

ReportRow& ReportRow::set(std::string key, FieldValue value) {
  for (auto& f : fields_) {
    if (f.key == key) {
      f.value = std::move(value);
      return *this;
    }
  }
  fields_.push_back({std::move(key), std::move(value)});
  return *this;
}

ReportRow& ReportRow::set(std::string key, const std::optional<double>& value) {
  return value ? set(std::move(key), FieldValue(*value)) : set(std::move(key), FieldValue(std::monostate{}));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0) v = 0;  // drop the sign of negative zero
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string format_value(const FieldValue& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>) return "NA";
        else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(x);
        else if constexpr (std::is_same_v<T, double>) return format_double(x);
        else if constexpr (std::is_same_v<T, bool>) return x ? "true" : "false";
        else return quote(x);
      },
      v);
}

std::string render_csv(const std::vector<ReportRow>& rows) {
  if (rows.empty()) throw ArgumentError("emit_report: no rows");
  const auto& head = rows.front().fields();
  std::string out;
  for (std::size_t i = 0; i < head.size(); ++i) out += (i ? "," : "") + quote(head[i].key);
  out += '\n';
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& fields = rows[r].fields();
    if (fields.size() != head.size()) throw ArgumentError("emit_report: row " + std::to_string(r) + " has a different key set");
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (fields[i].key != head[i].key)
        throw ArgumentError("emit_report: row " + std::to_string(r) + " has key '" + fields[i].key + "' where '" +
                            head[i].key + "' was expected");
      out += (i ? "," : "") + format_value(fields[i].value);
    }
    out += '\n';
  }
  return out;
}

void emit_report(const std::vector<ReportRow>& rows, const std::filesystem::path& path) {
  const std::string text = render_csv(rows);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw DataError(path.string() + ": write failed");
}

}  // namespace monoreg
