#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace monoreg {

/// monostate renders as NA.
using FieldValue = std::variant<std::monostate, std::int64_t, double, std::string, bool>;

struct Field {
  std::string key;
  FieldValue value;
};

/// One flat CSV record with ordered keys.
class ReportRow {
 public:
  ReportRow& set(std::string key, FieldValue value);
  ReportRow& set(std::string key, double value) { return set(std::move(key), FieldValue(value)); }
  ReportRow& set(std::string key, bool value) { return set(std::move(key), FieldValue(value)); }
  ReportRow& set(std::string key, std::string value) { return set(std::move(key), FieldValue(std::move(value))); }
  ReportRow& set(std::string key, std::int64_t value) { return set(std::move(key), FieldValue(value)); }
  ReportRow& set(std::string key, int value) { return set(std::move(key), FieldValue(std::int64_t{value})); }
  ReportRow& set(std::string key, std::size_t value) {
    return set(std::move(key), FieldValue(static_cast<std::int64_t>(value)));
  }
  ReportRow& set(std::string key, const char* value) { return set(std::move(key), FieldValue(std::string(value))); }
  ReportRow& set(std::string key, const std::optional<double>& value);

  const std::vector<Field>& fields() const { return fields_; }

 private:
  std::vector<Field> fields_;
};

/// 17 significant digits, so the text round-trips exactly. NaN and infinities
/// print as nan, inf, -inf.
std::string format_double(double v);
std::string format_value(const FieldValue& v);

/// CSV text: header from the first row's keys, one line per row, '\n' endings.
/// Throws ArgumentError on an empty list or rows whose keys differ.
std::string render_csv(const std::vector<ReportRow>& rows);

void emit_report(const std::vector<ReportRow>& rows, const std::filesystem::path& path);

}  // namespace monoreg
