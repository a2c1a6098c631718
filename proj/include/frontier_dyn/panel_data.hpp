#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "frontier_dyn/util.hpp"

namespace frontier_dyn {

enum class VariableRole { Input, Output, GoodLink, BadLink };

inline std::string_view role_name(VariableRole role) {
  switch (role) {
    case VariableRole::Input: return "input";
    case VariableRole::Output: return "output";
    case VariableRole::GoodLink: return "good_link";
    case VariableRole::BadLink: return "bad_link";
  }
  return "?";
}

inline std::optional<VariableRole> parse_role(std::string_view text) {
  if (text == "input") return VariableRole::Input;
  if (text == "output") return VariableRole::Output;
  if (text == "good_link") return VariableRole::GoodLink;
  if (text == "bad_link") return VariableRole::BadLink;
  return std::nullopt;
}

/// Inputs and bad links improve by decreasing.
inline bool lower_is_better(VariableRole role) {
  return role == VariableRole::Input || role == VariableRole::BadLink;
}

struct Variable {
  std::string name;
  VariableRole role;

  bool operator==(const Variable&) const = default;
};

enum class DataErrorKind {
  Io,
  MalformedRow,
  MalformedSchema,
  UnknownVariable,
  DuplicateVariable,
  DuplicateDmu,
  DuplicateTriple,
  MissingCell,
  NegativeValue,
  NonFiniteValue,
  NoInputOrNoOutput,
  EmptyDataset,
  ShapeMismatch,
};

inline std::string_view error_kind_name(DataErrorKind kind) {
  switch (kind) {
    case DataErrorKind::Io: return "Io";
    case DataErrorKind::MalformedRow: return "MalformedRow";
    case DataErrorKind::MalformedSchema: return "MalformedSchema";
    case DataErrorKind::UnknownVariable: return "UnknownVariable";
    case DataErrorKind::DuplicateVariable: return "DuplicateVariable";
    case DataErrorKind::DuplicateDmu: return "DuplicateDmu";
    case DataErrorKind::DuplicateTriple: return "DuplicateTriple";
    case DataErrorKind::MissingCell: return "MissingCell";
    case DataErrorKind::NegativeValue: return "NegativeValue";
    case DataErrorKind::NonFiniteValue: return "NonFiniteValue";
    case DataErrorKind::NoInputOrNoOutput: return "NoInputOrNoOutput";
    case DataErrorKind::EmptyDataset: return "EmptyDataset";
    case DataErrorKind::ShapeMismatch: return "ShapeMismatch";
  }
  return "?";
}

class DataError : public std::runtime_error {
 public:
  DataError(DataErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + detail), kind_(kind) {}

  DataErrorKind kind() const noexcept { return kind_; }

 private:
  DataErrorKind kind_;
};

/// Immutable DMU x period x variable panel. Values are stored
/// dmu-major, then period, then variable.
class PanelDataset {
 public:
  PanelDataset(std::vector<std::string> dmu_ids, std::vector<std::string> periods,
               std::vector<Variable> variables, std::vector<double> values)
      : dmu_ids_(std::move(dmu_ids)),
        periods_(std::move(periods)),
        variables_(std::move(variables)),
        values_(std::move(values)) {
    validate();
    for (std::size_t j = 0; j < dmu_ids_.size(); ++j) dmu_index_.emplace(dmu_ids_[j], j);
  }

  std::size_t dmu_count() const noexcept { return dmu_ids_.size(); }
  std::size_t period_count() const noexcept { return periods_.size(); }
  std::size_t variable_count() const noexcept { return variables_.size(); }

  const std::vector<std::string>& dmu_ids() const noexcept { return dmu_ids_; }
  const std::vector<std::string>& periods() const noexcept { return periods_; }
  const std::vector<Variable>& variables() const noexcept { return variables_; }
  const std::vector<double>& values() const noexcept { return values_; }

  double value(std::size_t dmu, std::size_t period, std::size_t variable) const {
    return values_[(dmu * periods_.size() + period) * variables_.size() + variable];
  }

  std::optional<std::size_t> find_dmu(std::string_view id) const {
    auto it = dmu_index_.find(std::string(id));
    if (it == dmu_index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t dmu_index(std::string_view id) const {
    auto idx = find_dmu(id);
    if (!idx) throw std::out_of_range("unknown dmu '" + std::string(id) + "'");
    return *idx;
  }

  /// Variable indices holding `role`, in schema order.
  std::vector<std::size_t> variables_with_role(VariableRole role) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < variables_.size(); ++i)
      if (variables_[i].role == role) out.push_back(i);
    return out;
  }

  std::size_t role_count(VariableRole role) const {
    return static_cast<std::size_t>(std::count_if(
        variables_.begin(), variables_.end(), [role](const Variable& v) { return v.role == role; }));
  }

 private:
  void validate() const {
    if (dmu_ids_.empty() || periods_.empty())
      throw DataError(DataErrorKind::EmptyDataset, "dataset needs at least one dmu and one period");
    if (values_.size() != dmu_ids_.size() * periods_.size() * variables_.size())
      throw DataError(DataErrorKind::ShapeMismatch, "value tensor size does not match dimensions");

    std::set<std::string_view> seen;
    for (const auto& id : dmu_ids_)
      if (!seen.insert(id).second) throw DataError(DataErrorKind::DuplicateDmu, id);
    for (std::size_t t = 1; t < periods_.size(); ++t)
      if (!(periods_[t - 1] < periods_[t]))
        throw DataError(DataErrorKind::ShapeMismatch, "periods must be strictly ascending");
    seen.clear();
    for (const auto& v : variables_)
      if (!seen.insert(v.name).second) throw DataError(DataErrorKind::DuplicateVariable, v.name);

    bool has_input = false;
    bool has_output = false;
    for (const auto& v : variables_) {
      has_input |= v.role == VariableRole::Input;
      has_output |= v.role == VariableRole::Output;
    }
    if (!has_input || !has_output)
      throw DataError(DataErrorKind::NoInputOrNoOutput,
                      "schema needs at least one input and one output variable");

    for (std::size_t j = 0; j < dmu_ids_.size(); ++j)
      for (std::size_t t = 0; t < periods_.size(); ++t)
        for (std::size_t i = 0; i < variables_.size(); ++i) {
          const double v = value(j, t, i);
          const std::string where = "(" + dmu_ids_[j] + "," + periods_[t] + "," + variables_[i].name + ")";
          if (!std::isfinite(v)) throw DataError(DataErrorKind::NonFiniteValue, where);
          if (v < 0.0) throw DataError(DataErrorKind::NegativeValue, where);
        }
  }

  std::vector<std::string> dmu_ids_;
  std::vector<std::string> periods_;
  std::vector<Variable> variables_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> dmu_index_;
};

// ---------------------------------------------------------------------------
// Schema and CSV I/O

inline std::vector<Variable> parse_schema(std::istream& in) {
  std::vector<Variable> vars;
  std::set<std::string> names;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw DataError(DataErrorKind::MalformedSchema,
                      "line " + std::to_string(line_no) + ": expected name=role");
    const std::string name(trim(body.substr(0, eq)));
    const auto role = parse_role(trim(body.substr(eq + 1)));
    if (name.empty() || !role)
      throw DataError(DataErrorKind::MalformedSchema,
                      "line " + std::to_string(line_no) + ": bad entry '" + std::string(body) + "'");
    if (!names.insert(name).second)
      throw DataError(DataErrorKind::DuplicateVariable, "line " + std::to_string(line_no) + ": " + name);
    vars.push_back({name, *role});
  }
  return vars;
}

inline std::vector<Variable> load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(DataErrorKind::Io, "cannot open schema '" + path + "'");
  return parse_schema(in);
}

inline void write_schema(std::ostream& out, const std::vector<Variable>& vars) {
  for (const auto& v : vars) out << v.name << '=' << role_name(v.role) << '\n';
}

inline PanelDataset parse_dataset(std::istream& in, const std::vector<Variable>& schema) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != "dmu,period,variable,value")
    throw DataError(DataErrorKind::MalformedRow, "line 1: expected header dmu,period,variable,value");

  std::unordered_map<std::string, std::size_t> var_index;
  for (std::size_t i = 0; i < schema.size(); ++i) var_index.emplace(schema[i].name, i);

  struct Cell {
    std::size_t dmu;
    std::string period;
    std::size_t var;
    double value;
  };
  std::vector<std::string> dmu_order;
  std::unordered_map<std::string, std::size_t> dmu_lookup;
  std::set<std::string> period_set;
  std::vector<Cell> cells;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(trim(line), ',');
    const std::string where = "line " + std::to_string(line_no);
    if (fields.size() != 4) throw DataError(DataErrorKind::MalformedRow, where + ": expected 4 fields");
    const std::string dmu(trim(fields[0]));
    const std::string period(trim(fields[1]));
    const std::string var(trim(fields[2]));
    if (dmu.empty() || period.empty())
      throw DataError(DataErrorKind::MalformedRow, where + ": empty dmu or period");
    auto vit = var_index.find(var);
    if (vit == var_index.end()) throw DataError(DataErrorKind::UnknownVariable, where + ": " + var);
    const auto value = parse_double(trim(fields[3]));
    if (!value) throw DataError(DataErrorKind::MalformedRow, where + ": bad number");
    if (!std::isfinite(*value)) throw DataError(DataErrorKind::NonFiniteValue, where);
    if (*value < 0.0)
      throw DataError(DataErrorKind::NegativeValue, where + ": (" + dmu + "," + period + "," + var + ")");

    auto [dit, inserted] = dmu_lookup.emplace(dmu, dmu_order.size());
    if (inserted) dmu_order.push_back(dmu);
    period_set.insert(period);
    cells.push_back({dit->second, period, vit->second, *value});
  }
  if (dmu_order.empty()) throw DataError(DataErrorKind::EmptyDataset, "no data rows");

  std::vector<std::string> periods(period_set.begin(), period_set.end());
  std::map<std::string, std::size_t> period_index;
  for (std::size_t t = 0; t < periods.size(); ++t) period_index.emplace(periods[t], t);

  const std::size_t n_var = schema.size();
  const std::size_t n_per = periods.size();
  std::vector<double> values(dmu_order.size() * n_per * n_var, 0.0);
  std::vector<char> present(values.size(), 0);
  for (const auto& c : cells) {
    const std::size_t idx = (c.dmu * n_per + period_index[c.period]) * n_var + c.var;
    if (present[idx])
      throw DataError(DataErrorKind::DuplicateTriple,
                      "(" + dmu_order[c.dmu] + "," + c.period + "," + schema[c.var].name + ")");
    present[idx] = 1;
    values[idx] = c.value;
  }
  for (std::size_t j = 0; j < dmu_order.size(); ++j)
    for (std::size_t t = 0; t < n_per; ++t)
      for (std::size_t i = 0; i < n_var; ++i)
        if (!present[(j * n_per + t) * n_var + i])
          throw DataError(DataErrorKind::MissingCell,
                          "(" + dmu_order[j] + "," + periods[t] + "," + schema[i].name + ")");

  return PanelDataset(std::move(dmu_order), std::move(periods), schema, std::move(values));
}

inline PanelDataset load_dataset(const std::string& data_path, const std::string& schema_path) {
  const auto schema = load_schema(schema_path);
  std::ifstream in(data_path);
  if (!in) throw DataError(DataErrorKind::Io, "cannot open data '" + data_path + "'");
  return parse_dataset(in, schema);
}

/// Long-format dump, dmu then period then schema order, 12 significant digits.
inline void dump_csv(std::ostream& out, const PanelDataset& data) {
  out << "dmu,period,variable,value\n";
  for (std::size_t j = 0; j < data.dmu_count(); ++j)
    for (std::size_t t = 0; t < data.period_count(); ++t)
      for (std::size_t i = 0; i < data.variable_count(); ++i)
        out << data.dmu_ids()[j] << ',' << data.periods()[t] << ',' << data.variables()[i].name << ','
            << format_number(data.value(j, t, i)) << '\n';
}

inline std::string dump_csv(const PanelDataset& data) {
  std::ostringstream os;
  dump_csv(os, data);
  return os.str();
}

/// Single-period view. With `links_as_io`, good links become outputs and
/// bad links become inputs.
inline PanelDataset period_slice(const PanelDataset& data, std::size_t period, bool links_as_io) {
  if (period >= data.period_count()) throw std::out_of_range("period index out of range");
  std::vector<Variable> vars = data.variables();
  if (links_as_io)
    for (auto& v : vars) {
      if (v.role == VariableRole::GoodLink) v.role = VariableRole::Output;
      if (v.role == VariableRole::BadLink) v.role = VariableRole::Input;
    }
  std::vector<double> values;
  values.reserve(data.dmu_count() * vars.size());
  for (std::size_t j = 0; j < data.dmu_count(); ++j)
    for (std::size_t i = 0; i < vars.size(); ++i) values.push_back(data.value(j, period, i));
  return PanelDataset(data.dmu_ids(), {data.periods()[period]}, std::move(vars), std::move(values));
}

/// Copy with every value of one variable multiplied by `factor`.
inline PanelDataset scale_variable(const PanelDataset& data, std::size_t variable, double factor) {
  std::vector<double> values = data.values();
  for (std::size_t j = 0; j < data.dmu_count(); ++j)
    for (std::size_t t = 0; t < data.period_count(); ++t)
      values[(j * data.period_count() + t) * data.variable_count() + variable] *= factor;
  return PanelDataset(data.dmu_ids(), data.periods(), data.variables(), std::move(values));
}

// ---------------------------------------------------------------------------
// Synthetic generator

struct GeneratorVariable {
  std::string name;
  VariableRole role;
  double min = 0.0;
  double max = 1.0;
  double variance_target = 0.0;  // advisory only
};

struct GeneratorSpec {
  std::vector<GeneratorVariable> variables;
  std::size_t dmu_count = 1;
  std::size_t period_count = 1;
  std::int64_t first_period = 1;
  std::uint64_t seed = 0;
  /// True when the generator file set seed= explicitly.
  bool seed_given = false;
};

class GeneratorSpecError : public std::runtime_error {
 public:
  GeneratorSpecError(std::size_t line, const std::string& detail)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + detail : detail), line_(line) {}

  /// 1-based line in the generator file, 0 when not tied to a line.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline void validate(const GeneratorSpec& spec) {
  if (spec.dmu_count < 1) throw GeneratorSpecError(0, "dmus must be >= 1");
  if (spec.period_count < 1) throw GeneratorSpecError(0, "periods must be >= 1");
  if (spec.variables.empty()) throw GeneratorSpecError(0, "no variables");
  for (const auto& v : spec.variables) {
    if (!std::isfinite(v.min) || !std::isfinite(v.max) || v.min < 0.0 || v.min > v.max)
      throw GeneratorSpecError(0, "variable " + v.name + ": need 0 <= min <= max");
  }
}

/// Text format, one directive per line, `#` comments:
///   dmus=531
///   periods=3
///   first_period=2017
///   seed=7
///   variable=L1,input,0,0.0520,0.0042
inline GeneratorSpec parse_generator_spec(std::istream& in) {
  GeneratorSpec spec;
  std::string line;
  std::size_t line_no = 0;
  auto parse_uint = [&](std::string_view text) {
    const auto v = parse_integer<std::uint64_t>(text);
    if (!v) throw GeneratorSpecError(line_no, "expected a non-negative integer, got '" + std::string(text) + "'");
    return *v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw GeneratorSpecError(line_no, "expected key=value");
    const auto key = trim(body.substr(0, eq));
    const auto val = trim(body.substr(eq + 1));
    if (key == "dmus") {
      spec.dmu_count = parse_uint(val);
    } else if (key == "periods") {
      spec.period_count = parse_uint(val);
    } else if (key == "first_period") {
      const auto v = parse_integer<std::int64_t>(val);
      if (!v) throw GeneratorSpecError(line_no, "bad first_period");
      spec.first_period = *v;
    } else if (key == "seed") {
      spec.seed = parse_uint(val);
      spec.seed_given = true;
    } else if (key == "variable") {
      const auto f = split(val, ',');
      if (f.size() < 4 || f.size() > 5)
        throw GeneratorSpecError(line_no, "variable needs name,role,min,max[,variance]");
      GeneratorVariable gv;
      gv.name = std::string(trim(f[0]));
      const auto role = parse_role(trim(f[1]));
      if (!role) throw GeneratorSpecError(line_no, "unknown role '" + std::string(trim(f[1])) + "'");
      gv.role = *role;
      const auto lo = parse_double(trim(f[2]));
      const auto hi = parse_double(trim(f[3]));
      if (!lo || !hi) throw GeneratorSpecError(line_no, "bad min/max");
      gv.min = *lo;
      gv.max = *hi;
      if (f.size() == 5) {
        const auto var = parse_double(trim(f[4]));
        if (!var) throw GeneratorSpecError(line_no, "bad variance");
        gv.variance_target = *var;
      }
      if (gv.name.empty()) throw GeneratorSpecError(line_no, "empty variable name");
      if (!(gv.min >= 0.0 && gv.min <= gv.max && std::isfinite(gv.max)))
        throw GeneratorSpecError(line_no, "need 0 <= min <= max");
      spec.variables.push_back(std::move(gv));
    } else {
      throw GeneratorSpecError(line_no, "unknown key '" + std::string(key) + "'");
    }
  }
  validate(spec);
  return spec;
}

/// Bank-branch panel: two cost inputs, a carried-over expense (bad link),
/// a carried-over income (good link) and an income output, 2017 value ranges.
inline GeneratorSpec bank_study_spec(std::size_t dmus = 531, std::size_t periods = 3, std::uint64_t seed = 7) {
  GeneratorSpec spec;
  spec.variables = {
      {"L1", VariableRole::Input, 0.0, 0.0520, 0.0042},
      {"EX1", VariableRole::Input, 0.0, 0.0532, 0.0037},
      {"EX2", VariableRole::BadLink, 0.0, 0.079, 0.0039},
      {"IN1", VariableRole::GoodLink, 0.0, 0.0799, 0.0048},
      {"IN2", VariableRole::Output, 0.0, 0.0724, 0.0038},
  };
  spec.dmu_count = dmus;
  spec.period_count = periods;
  spec.first_period = 2017;
  spec.seed = seed;
  return spec;
}

inline PanelDataset generate_synthetic(const GeneratorSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);

  const std::size_t id_width = std::max<std::size_t>(4, std::to_string(spec.dmu_count).size());
  std::vector<std::string> ids;
  for (std::size_t j = 0; j < spec.dmu_count; ++j) ids.push_back("B" + zero_pad(j + 1, id_width));

  const std::int64_t last = spec.first_period + static_cast<std::int64_t>(spec.period_count) - 1;
  if (spec.first_period < 0) throw GeneratorSpecError(0, "first_period must be >= 0");
  const std::size_t period_width = std::to_string(last).size();
  std::vector<std::string> periods;
  for (std::size_t t = 0; t < spec.period_count; ++t)
    periods.push_back(zero_pad(static_cast<std::uint64_t>(spec.first_period) + t, period_width));

  std::vector<Variable> vars;
  for (const auto& v : spec.variables) vars.push_back({v.name, v.role});

  std::vector<double> values;
  values.reserve(spec.dmu_count * spec.period_count * vars.size());
  for (std::size_t j = 0; j < spec.dmu_count; ++j)
    for (std::size_t t = 0; t < spec.period_count; ++t)
      for (const auto& v : spec.variables) {
        const double u = unit_double(rng);
        values.push_back(std::min(v.max, v.min + u * (v.max - v.min)));
      }
  return PanelDataset(std::move(ids), std::move(periods), std::move(vars), std::move(values));
}

}  // namespace frontier_dyn
