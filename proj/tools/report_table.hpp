#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "frontier_dyn/util.hpp"

namespace frontier_dyn::report {

enum class Format { Csv, Json };

inline std::string_view extension(Format f) { return f == Format::Csv ? ".csv" : ".json"; }

/// Column-ordered table of JSON scalars, written as CSV or as a JSON array
/// of objects.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<nlohmann::ordered_json>> rows;

  void add(std::vector<nlohmann::ordered_json> row) {
    if (row.size() != columns.size()) throw std::logic_error("row width differs from header");
    rows.push_back(std::move(row));
  }
};

inline std::string csv_cell(const nlohmann::ordered_json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "1" : "0";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  return format_number(v.get<double>());
}

inline std::string to_csv(const Table& t) {
  std::string out = join(t.columns, ",") + "\n";
  for (const auto& row : t.rows) {
    std::vector<std::string> cells;
    for (const auto& v : row) cells.push_back(csv_cell(v));
    out += join(cells, ",") + "\n";
  }
  return out;
}

inline nlohmann::ordered_json to_json(const Table& t) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < t.columns.size(); ++i) obj[t.columns[i]] = row[i];
    arr.push_back(std::move(obj));
  }
  return arr;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

/// Writes dir/stem.csv or dir/stem.json; returns the path written.
inline std::filesystem::path write_table(const std::filesystem::path& dir, const std::string& stem, const Table& t,
                                         Format f) {
  const auto path = dir / (stem + std::string(extension(f)));
  write_text(path, f == Format::Csv ? to_csv(t) : to_json(t).dump(2) + "\n");
  return path;
}

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a table written by write_table, as strings keyed by column.
inline std::vector<std::map<std::string, std::string>> read_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ReportError("cannot open " + path.string());
  std::vector<std::map<std::string, std::string>> rows;
  if (path.extension() == ".json") {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ReportError(path.string() + ": " + e.what());
    }
    if (!doc.is_array()) throw ReportError(path.string() + ": expected a JSON array");
    for (const auto& obj : doc) {
      if (!obj.is_object()) throw ReportError(path.string() + ": expected objects");
      std::map<std::string, std::string> row;
      for (const auto& [k, v] : obj.items()) row[k] = v.is_string() ? v.get<std::string>() : v.is_null() ? "" : v.dump();
      rows.push_back(std::move(row));
    }
    return rows;
  }
  std::string line;
  if (!std::getline(in, line)) throw ReportError(path.string() + ": empty file");
  std::vector<std::string> header;
  for (auto f : split(trim(line), ',')) header.emplace_back(trim(f));
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(trim(line), ',');
    if (fields.size() != header.size())
      throw ReportError(path.string() + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(fields.size()) + " fields, expected " + std::to_string(header.size()));
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = std::string(trim(fields[i]));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace frontier_dyn::report
