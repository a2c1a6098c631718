#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace frontier_dyn;
using namespace testing_support;

namespace {

const std::vector<VariableRole> kBankRoles = {VariableRole::Input, VariableRole::Input, VariableRole::BadLink,
                                              VariableRole::GoodLink, VariableRole::Output};

}  // namespace

TEST(Sensitivity, WorstBranch) {
  const std::vector<BranchScore> a = {{"a", 1.9}, {"b", 1.7}};
  EXPECT_EQ(worst_branch(a), "b");
  const std::vector<BranchScore> tie = {{"b", 1.7}, {"a", 1.7}};
  EXPECT_EQ(worst_branch(tie), "a");
  EXPECT_THROW(worst_branch(std::vector<BranchScore>{}), SensitivityError);
}

TEST(Sensitivity, CostExample) {
  const std::vector<VariableRole> roles = {VariableRole::Input};
  const auto d = compute_deltas(std::vector<double>{15}, std::vector<double>{10}, roles);
  EXPECT_EQ(d[0], Delta::decrease(5));
}

TEST(Sensitivity, DominatingBranchNeedsNothing) {
  const std::vector<double> branch = {1, 1, 1, 5, 5}, target = {2, 2, 2, 4, 4};
  for (const auto& d : compute_deltas(branch, target, kBankRoles)) EXPECT_EQ(d.kind, Delta::Kind::NoChange);
}

TEST(Sensitivity, MeanAggregation) {
  const auto data = bank_like(4, 3, 1);
  const auto prof = aggregate_profile(data, 2);
  for (std::size_t i = 0; i < data.variable_count(); ++i)
    EXPECT_NEAR(prof[i], (data.value(2, 0, i) + data.value(2, 1, i) + data.value(2, 2, i)) / 3.0, 1e-15);
}

TEST(Sensitivity, SignedFixtureRendersExactly) {
  // Columns: non-operating costs, common income, separate income, operating costs, facilities.
  const std::vector<VariableRole> roles = {VariableRole::BadLink, VariableRole::GoodLink, VariableRole::Output,
                                           VariableRole::Input, VariableRole::Input};
  const std::vector<double> branch = {13332.33, 900, 1000, 50, 20};
  const std::vector<double> target = {10000, 800, 7265.667, 60, 30};
  const auto deltas = compute_deltas(branch, target, roles);
  EXPECT_EQ(join(render_row(deltas, DeltaStyle::Signed), ", "), "-3332.33, No Change, 6265.667, No Change, No Change");
  EXPECT_EQ(join(render_row(deltas, DeltaStyle::Tagged), ", ").substr(0, 9), "Decrease(");
}

TEST(Sensitivity, DominanceAndIdempotenceOnRandomPairs) {
  const auto data = bank_like(60, 3, 13);
  const auto roles = roles_of(data);
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const auto b = uniform_index(rng, data.dmu_count()), w = uniform_index(rng, data.dmu_count());
    const auto branch = aggregate_profile(data, b), target = aggregate_profile(data, w);
    const auto deltas = compute_deltas(branch, target, roles);
    const auto moved = apply_deltas(branch, deltas);
    for (std::size_t i = 0; i < roles.size(); ++i) {
      if (lower_is_better(roles[i])) {
        EXPECT_LE(moved[i], target[i] + 1e-9);
        EXPECT_NE(deltas[i].kind, Delta::Kind::Increase);
      } else {
        EXPECT_GE(moved[i], target[i] - 1e-9);
        EXPECT_NE(deltas[i].kind, Delta::Kind::Decrease);
      }
    }
    for (const auto& d : compute_deltas(moved, target, roles)) EXPECT_EQ(d.kind, Delta::Kind::NoChange);
  }
}

TEST(Sensitivity, ReportPerLowerGrade) {
  const auto data = bank_like(40, 3, 2);
  std::vector<std::string> ids;
  std::vector<double> rho;
  std::vector<Point> pts;
  for (const auto& r : evaluate_all(data, SbmConfig{}, 1)) {
    ids.push_back(r.dmu);
    rho.push_back(r.result.rho);
    pts.push_back({r.result.rho});
  }
  const auto model = kmeans_restarts(pts, 7, 1, 10);
  const auto grading = grade_clusters(model, rho);
  const auto reports = sensitivity_report(data, model, grading, ids, rho);
  ASSERT_EQ(reports.size(), 6u);
  const auto groups = group_by_grade(model, grading, ids, rho);
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const auto& rep = reports[k];
    EXPECT_EQ(rep.source_grade, k + 1);
    EXPECT_EQ(rep.target_grade, k);
    EXPECT_EQ(rep.source_label, grade_labels(7)[k + 1]);
    EXPECT_EQ(rep.rows.size(), groups[k + 1].members.size());
    EXPECT_EQ(rep.worst_target_branch, worst_branch(groups[k].members));
    double lowest = 1e9;
    for (const auto& m : groups[k].members) lowest = std::min(lowest, m.rho);
    EXPECT_EQ(rho[std::find(ids.begin(), ids.end(), rep.worst_target_branch) - ids.begin()], lowest);
    EXPECT_TRUE(std::is_sorted(rep.rows.begin(), rep.rows.end(),
                               [](const auto& a, const auto& b) { return a.branch < b.branch; }));
  }
}
