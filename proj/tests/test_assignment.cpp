#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "crsense/assignment.hpp"
#include "crsense/rng.hpp"

namespace lap = crsense::lap;
using crsense::Matrix;
using crsense::RandomStream;

namespace {

Matrix make(std::size_t rows, std::size_t cols, std::vector<double> values) {
  Matrix m(rows, cols);
  m.data = std::move(values);
  return m;
}

// Brute force over all injective row->col maps of size min(rows, cols).
double brute_force_min(const Matrix& costs) {
  const int rows = static_cast<int>(costs.rows);
  const int cols = static_cast<int>(costs.cols);
  double best = std::numeric_limits<double>::infinity();
  if (rows <= cols) {
    std::vector<int> perm(cols);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      double total = 0.0;
      for (int r = 0; r < rows; ++r) total += costs.at(r, perm[r]);
      best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    std::vector<int> perm(rows);
    std::iota(perm.begin(), perm.end(), 0);
    do {
      double total = 0.0;
      for (int c = 0; c < cols; ++c) total += costs.at(perm[c], c);
      best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  return best;
}

void expect_valid(const lap::Assignment& a, const Matrix& costs) {
  EXPECT_EQ(a.pairs.size(), std::min(costs.rows, costs.cols));
  std::vector<int> row_seen(costs.rows, 0), col_seen(costs.cols, 0);
  for (const auto& [r, c] : a.pairs) {
    ASSERT_GE(r, 0);
    ASSERT_GE(c, 0);
    ASSERT_LT(static_cast<std::size_t>(r), costs.rows);
    ASSERT_LT(static_cast<std::size_t>(c), costs.cols);
    EXPECT_EQ(row_seen[r]++, 0);
    EXPECT_EQ(col_seen[c]++, 0);
  }
}

}  // namespace

TEST(Solve, TwoByTwo) {
  const auto a = lap::solve(make(2, 2, {1, 2, 3, 1}));
  EXPECT_EQ(a.pairs, (std::vector<std::pair<int, int>>{{0, 0}, {1, 1}}));
  EXPECT_DOUBLE_EQ(a.total, 2.0);
}

TEST(Solve, DiagonalFriendlyCosts) {
  const auto a = lap::solve(make(3, 3, {0, 1, 1, 1, 0, 1, 1, 1, 0}));
  EXPECT_EQ(a.pairs, (std::vector<std::pair<int, int>>{{0, 0}, {1, 1}, {2, 2}}));
  EXPECT_DOUBLE_EQ(a.total, 0.0);
}

TEST(Solve, RectangularThreeAgentsTwoTasks) {
  const auto a = lap::solve(make(3, 2, {1, 9, 2, 1, 0, 5}));
  EXPECT_EQ(a.pairs, (std::vector<std::pair<int, int>>{{1, 1}, {2, 0}}));
  EXPECT_DOUBLE_EQ(a.total, 1.0);
}

TEST(Solve, RejectsNonFiniteCosts) {
  EXPECT_THROW(lap::solve(make(2, 2, {1, std::nan(""), 3, 1})),
               std::invalid_argument);
  EXPECT_THROW(
      lap::solve(make(1, 2, {1, std::numeric_limits<double>::infinity()})),
      std::invalid_argument);
}

TEST(Solve, MatchesBruteForceOnRandomMatrices) {
  RandomStream rng(424242);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t rows = 1 + rng.below(6);
    const std::size_t cols = 1 + rng.below(6);
    Matrix costs(rows, cols);
    // Integer-valued entries keep every partial sum exact, so "matches the
    // brute-force minimum exactly" is well defined in floating point.
    for (auto& v : costs.data) v = static_cast<double>(rng.below(100));
    const auto a = lap::solve(costs);
    expect_valid(a, costs);
    EXPECT_DOUBLE_EQ(a.total, brute_force_min(costs));
  }
}

TEST(Solve, MatchesBruteForceOnContinuousMatrices) {
  RandomStream rng(171717);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t rows = 1 + rng.below(5);
    const std::size_t cols = 1 + rng.below(5);
    Matrix costs(rows, cols);
    for (auto& v : costs.data) v = 2.0 * rng.uniform() - 1.0;
    const auto a = lap::solve(costs);
    expect_valid(a, costs);
    EXPECT_NEAR(a.total, brute_force_min(costs), 1e-9);
  }
}

TEST(Solve, DeterministicOnRepeatedCalls) {
  RandomStream rng(5150);
  Matrix costs(5, 5);
  for (auto& v : costs.data) v = static_cast<double>(rng.below(3));  // many ties
  const auto a = lap::solve(costs);
  const auto b = lap::solve(costs);
  EXPECT_EQ(a.pairs, b.pairs);
  EXPECT_EQ(a.total, b.total);
}

TEST(IteratedAssignment, DominantDiagonal) {
  const Matrix x = lap::iterated_sensing_assignment(make(2, 2, {5, 1, 1, 5}));
  EXPECT_EQ(x.at(0, 0), 1.0);
  EXPECT_EQ(x.at(1, 1), 1.0);
  EXPECT_EQ(x.at(0, 1), 0.0);
  EXPECT_EQ(x.at(1, 0), 0.0);
}

TEST(IteratedAssignment, EqualValuesSpreadEvenly) {
  const Matrix x = lap::iterated_sensing_assignment(Matrix(4, 2, 1.0));
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(x.at(i, 0) + x.at(i, 1), 1.0) << "SU " << i;
  }
  EXPECT_EQ(x.at(0, 0) + x.at(1, 0) + x.at(2, 0) + x.at(3, 0), 2.0);
  EXPECT_EQ(x.at(0, 1) + x.at(1, 1) + x.at(2, 1) + x.at(3, 1), 2.0);
}

TEST(IteratedAssignment, TwoRoundExample) {
  // Round 1 pairs SU0 with band 0 and SU2 with band 1 (total 18, the
  // brute-force max over one-per-band matchings); round 2 assigns the
  // leftover SU1 to its better band 0.
  const Matrix x =
      lap::iterated_sensing_assignment(make(3, 2, {9, 1, 8, 2, 1, 9}));
  EXPECT_EQ(x.at(0, 0), 1.0);
  EXPECT_EQ(x.at(1, 0), 1.0);
  EXPECT_EQ(x.at(2, 1), 1.0);
  EXPECT_EQ(x.at(0, 1), 0.0);
  EXPECT_EQ(x.at(1, 1), 0.0);
  EXPECT_EQ(x.at(2, 0), 0.0);
}

TEST(IteratedAssignment, CoversEveryAgentWhenCapacityAllows) {
  RandomStream rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(7);
    const std::size_t bands = 1 + rng.below(4);
    Matrix values(n, bands);
    for (auto& v : values.data) v = rng.uniform();
    const Matrix x = lap::iterated_sensing_assignment(values, 1);
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t k = 0; k < bands; ++k) row += x.at(i, k);
      EXPECT_EQ(row, 1.0) << "agent " << i << " must sense exactly one band";
    }
  }
}

TEST(IteratedAssignment, CapacityBoundsRowSums) {
  RandomStream rng(100);
  Matrix values(3, 4);
  for (auto& v : values.data) v = rng.uniform();
  const Matrix x = lap::iterated_sensing_assignment(values, 2);
  for (std::size_t i = 0; i < 3; ++i) {
    double row = 0.0;
    for (std::size_t k = 0; k < 4; ++k) row += x.at(i, k);
    EXPECT_LE(row, 2.0);
    EXPECT_GE(row, 2.0);  // capacity * bands >= agents, so all capacity is used
  }
}
