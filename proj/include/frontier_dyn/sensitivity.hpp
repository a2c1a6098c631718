#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "frontier_dyn/clustering.hpp"
#include "frontier_dyn/panel_data.hpp"
#include "frontier_dyn/util.hpp"

namespace frontier_dyn {

/// Change a branch needs on one variable to match a target branch.
struct Delta {
  enum class Kind { NoChange, Increase, Decrease };
  Kind kind = Kind::NoChange;
  double amount = 0.0;

  static Delta no_change() { return {}; }
  static Delta increase(double a) { return {Kind::Increase, a}; }
  static Delta decrease(double a) { return {Kind::Decrease, a}; }

  /// Signed form: negative for decreases, zero for no change.
  double signed_amount() const {
    switch (kind) {
      case Kind::Increase: return amount;
      case Kind::Decrease: return -amount;
      case Kind::NoChange: return 0.0;
    }
    return 0.0;
  }

  bool operator==(const Delta&) const = default;
};

enum class Aggregation { MeanOverPeriods };

inline std::string_view aggregation_name(Aggregation) { return "mean_over_periods"; }

struct BranchScore {
  std::string id;
  double rho = 0.0;
};

class SensitivityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Member with minimum rho; ties go to the smallest id.
inline std::string worst_branch(std::span<const BranchScore> members) {
  if (members.empty()) throw SensitivityError("EmptyCluster: no members");
  const BranchScore* worst = &members[0];
  for (const auto& m : members)
    if (m.rho < worst->rho || (m.rho == worst->rho && m.id < worst->id)) worst = &m;
  return worst->id;
}

/// Per-variable mean over the panel's periods, schema order.
inline std::vector<double> aggregate_profile(const PanelDataset& data, std::size_t dmu,
                                             Aggregation = Aggregation::MeanOverPeriods) {
  std::vector<double> out(data.variable_count(), 0.0);
  for (std::size_t t = 0; t < data.period_count(); ++t)
    for (std::size_t i = 0; i < data.variable_count(); ++i) out[i] += data.value(dmu, t, i);
  for (auto& v : out) v /= static_cast<double>(data.period_count());
  return out;
}

/// Differences within this relative band count as equal, so a profile that
/// already had its deltas applied compares as NoChange despite round-off.
inline constexpr double kDeltaRelTol = 1e-12;

inline std::vector<Delta> compute_deltas(std::span<const double> branch, std::span<const double> target,
                                         std::span<const VariableRole> roles) {
  if (branch.size() != roles.size() || target.size() != roles.size())
    throw SensitivityError("profile sizes differ from role count");
  std::vector<Delta> out;
  for (std::size_t i = 0; i < roles.size(); ++i) {
    const double b = branch[i], w = target[i];
    const double band = kDeltaRelTol * std::max({std::abs(b), std::abs(w), 1.0});
    if (lower_is_better(roles[i]))
      out.push_back(b > w + band ? Delta::decrease(b - w) : Delta::no_change());
    else
      out.push_back(b < w - band ? Delta::increase(w - b) : Delta::no_change());
  }
  return out;
}

inline std::vector<VariableRole> roles_of(const PanelDataset& data) {
  std::vector<VariableRole> roles;
  for (const auto& v : data.variables()) roles.push_back(v.role);
  return roles;
}

inline std::vector<Delta> compute_deltas(const PanelDataset& data, std::string_view branch,
                                         std::string_view target_worst,
                                         Aggregation agg = Aggregation::MeanOverPeriods) {
  const auto b = aggregate_profile(data, data.dmu_index(branch), agg);
  const auto w = aggregate_profile(data, data.dmu_index(target_worst), agg);
  return compute_deltas(b, w, roles_of(data));
}

inline std::vector<double> apply_deltas(std::span<const double> profile, std::span<const Delta> deltas) {
  std::vector<double> out(profile.begin(), profile.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += deltas[i].signed_amount();
  return out;
}

struct SensitivityRow {
  std::string branch;
  std::vector<Delta> deltas;
};

struct SensitivityReport {
  std::size_t source_grade = 0;  // 0-based, 0 = best
  std::size_t target_grade = 0;
  std::string source_label;
  std::string target_label;
  std::string worst_target_branch;
  Aggregation aggregation = Aggregation::MeanOverPeriods;
  std::vector<SensitivityRow> rows;  // ascending branch id
};

struct GradeGroup {
  std::string label;
  std::vector<BranchScore> members;
};

/// One report per grade below the top, each member compared against the
/// worst branch of the grade directly above.
inline std::vector<SensitivityReport> sensitivity_report(const PanelDataset& data,
                                                         std::span<const GradeGroup> grades,
                                                         Aggregation agg = Aggregation::MeanOverPeriods) {
  const auto roles = roles_of(data);
  std::vector<SensitivityReport> out;
  for (std::size_t g = 1; g < grades.size(); ++g) {
    SensitivityReport rep;
    rep.source_grade = g;
    rep.target_grade = g - 1;
    rep.source_label = grades[g].label;
    rep.target_label = grades[g - 1].label;
    rep.worst_target_branch = worst_branch(grades[g - 1].members);
    rep.aggregation = agg;
    const auto target = aggregate_profile(data, data.dmu_index(rep.worst_target_branch), agg);
    for (const auto& m : grades[g].members) {
      const auto b = aggregate_profile(data, data.dmu_index(m.id), agg);
      rep.rows.push_back({m.id, compute_deltas(b, target, roles)});
    }
    std::sort(rep.rows.begin(), rep.rows.end(),
              [](const SensitivityRow& a, const SensitivityRow& b) { return a.branch < b.branch; });
    out.push_back(std::move(rep));
  }
  return out;
}

/// Groups clustered branches by grade. `ids` and `rho` are in point order.
inline std::vector<GradeGroup> group_by_grade(const ClusterModel& model, const Grading& grading,
                                              const std::vector<std::string>& ids, const std::vector<double>& rho) {
  std::vector<GradeGroup> groups(model.k);
  for (std::size_t g = 0; g < model.k; ++g) groups[g].label = grading.labels[g];
  for (std::size_t i = 0; i < ids.size(); ++i)
    groups[grading.grade_of_cluster[model.assignments[i]]].members.push_back({ids[i], rho[i]});
  return groups;
}

inline std::vector<SensitivityReport> sensitivity_report(const PanelDataset& data, const ClusterModel& model,
                                                         const Grading& grading, const std::vector<std::string>& ids,
                                                         const std::vector<double>& rho) {
  const auto groups = group_by_grade(model, grading, ids, rho);
  return sensitivity_report(data, groups);
}

// ---------------------------------------------------------------------------
// Rendering

enum class DeltaStyle {
  /// Decrease(x) / Increase(x) / NoChange, 12 significant digits.
  Tagged,
  /// Signed number at 7 significant digits, or "No Change".
  Signed,
};

inline std::string render_delta(const Delta& d, DeltaStyle style) {
  if (style == DeltaStyle::Signed) {
    if (d.kind == Delta::Kind::NoChange) return "No Change";
    return format_number(d.signed_amount(), 7);
  }
  switch (d.kind) {
    case Delta::Kind::NoChange: return "NoChange";
    case Delta::Kind::Increase: return "Increase(" + format_number(d.amount) + ")";
    case Delta::Kind::Decrease: return "Decrease(" + format_number(d.amount) + ")";
  }
  return "";
}

inline std::vector<std::string> render_row(std::span<const Delta> deltas, DeltaStyle style) {
  std::vector<std::string> cells;
  for (const auto& d : deltas) cells.push_back(render_delta(d, style));
  return cells;
}

}  // namespace frontier_dyn
