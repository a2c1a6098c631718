#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace frontier_dyn;
using lp::LinearProgram;
using lp::Sense;
using lp::Status;

using oracle::random_bounded_lp;

TEST(LpSolver, SingleEquality) {
  LinearProgram p(1);
  p.set_objective(0, 1.0);
  p.add_row(std::vector<double>{1.0}, Sense::Equal, 1.0);
  const auto s = lp::solve(p);
  ASSERT_EQ(s.status, Status::Optimal);
  EXPECT_NEAR(s.objective, 1.0, 1e-12);
  EXPECT_NEAR(s.primal[0], 1.0, 1e-12);
}

TEST(LpSolver, SegmentPicksFirstVertex) {
  LinearProgram p(2);
  p.set_objective(0, -1.0);
  p.set_objective(1, -1.0);
  p.add_row(std::vector<double>{1.0, 1.0}, Sense::LessEqual, 1.0);
  const auto s = lp::solve(p);
  ASSERT_EQ(s.status, Status::Optimal);
  EXPECT_NEAR(s.objective, -1.0, 1e-12);
  EXPECT_EQ(s.primal[0], 1.0);
  EXPECT_EQ(s.primal[1], 0.0);
}

TEST(LpSolver, Infeasible) {
  LinearProgram p(1);
  p.set_objective(0, 1.0);
  p.add_row(std::vector<double>{1.0}, Sense::LessEqual, -1.0);
  const auto s = lp::solve(p);
  EXPECT_EQ(s.status, Status::Infeasible);
  EXPECT_TRUE(s.primal.empty());
}

TEST(LpSolver, Unbounded) {
  LinearProgram p(2);
  p.set_objective(0, -1.0);
  p.add_row(std::vector<double>{1.0, -1.0}, Sense::LessEqual, 1.0);
  EXPECT_EQ(lp::solve(p).status, Status::Unbounded);
}

TEST(LpSolver, IterationLimit) {
  LinearProgram p(3);
  for (std::size_t j = 0; j < 3; ++j) p.set_objective(j, -1.0 - static_cast<double>(j));
  p.add_row(std::vector<double>{1, 1, 1}, Sense::LessEqual, 5.0);
  p.add_row(std::vector<double>{1, 2, 3}, Sense::LessEqual, 9.0);
  lp::SolverOptions opt;
  opt.max_iter = 1;
  EXPECT_EQ(lp::solve(p, opt).status, Status::IterationLimit);
}

TEST(LpSolver, BoundsAndFreeVariables) {
  // min x - y, -2 <= x <= 3, y free, x + y = 1, y <= 4
  LinearProgram p(2);
  p.set_objective(0, 1.0);
  p.set_objective(1, -1.0);
  p.set_bounds(0, -2.0, 3.0);
  p.set_bounds(1, -lp::kInfinity, lp::kInfinity);
  p.add_row(std::vector<double>{1, 1}, Sense::Equal, 1.0);
  p.add_row(std::vector<double>{0, 1}, Sense::LessEqual, 4.0);
  const auto s = lp::solve(p);
  ASSERT_EQ(s.status, Status::Optimal);
  EXPECT_NEAR(s.primal[0], -2.0, 1e-12);
  EXPECT_NEAR(s.primal[1], 3.0, 1e-12);
  EXPECT_NEAR(s.objective, -5.0, 1e-12);
}

TEST(LpSolver, RejectsMalformedPrograms) {
  LinearProgram p(1);
  p.set_objective(0, std::nan(""));
  EXPECT_THROW(lp::solve(p), lp::InvalidProgram);
  LinearProgram q(1);
  q.set_bounds(0, 2.0, 1.0);
  EXPECT_THROW(lp::solve(q), lp::InvalidProgram);
  EXPECT_THROW(q.add_row(std::vector<double>{1.0, 2.0}, Sense::Equal, 0.0), lp::InvalidProgram);
}

TEST(LpSolver, MatchesVertexEnumeration) {
  std::mt19937_64 rng(20240601);
  int optimal = 0, infeasible = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = random_bounded_lp(rng);
    const auto expected = oracle::vertex_enumeration(p);
    const auto s = lp::solve(p);
    if (!expected) {
      EXPECT_EQ(s.status, Status::Infeasible) << "trial " << trial;
      ++infeasible;
      continue;
    }
    ASSERT_EQ(s.status, Status::Optimal) << "trial " << trial;
    EXPECT_NEAR(s.objective, *expected, 1e-7) << "trial " << trial;
    EXPECT_LE(lp::max_violation(p, s.primal), 1e-9) << "trial " << trial;
    ++optimal;
  }
  EXPECT_GE(optimal, 50);
  EXPECT_GT(infeasible, 0);
}

TEST(LpSolver, Deterministic) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = random_bounded_lp(rng);
    const auto a = lp::solve(p), b = lp::solve(p);
    EXPECT_EQ(a.status, b.status);
    EXPECT_EQ(a.primal, b.primal);
    EXPECT_EQ(a.iterations, b.iterations);
  }
}

TEST(LpSolver, DegenerateCycleExampleTerminates) {
  // Beale's cycling example.
  LinearProgram p(4);
  const double c[] = {-0.75, 150, -0.02, 6};
  for (std::size_t j = 0; j < 4; ++j) p.set_objective(j, c[j]);
  p.add_row(std::vector<double>{0.25, -60, -0.04, 9}, Sense::LessEqual, 0);
  p.add_row(std::vector<double>{0.5, -90, -0.02, 3}, Sense::LessEqual, 0);
  p.add_row(std::vector<double>{0, 0, 1, 0}, Sense::LessEqual, 1);
  const auto s = lp::solve(p);
  ASSERT_EQ(s.status, Status::Optimal);
  EXPECT_NEAR(s.objective, -0.05, 1e-9);
}
