#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "crsense/matrix.hpp"

// Min-cost linear assignment (Hungarian method, shortest augmenting path
// formulation) and the round-based sensing assignment built on top of it.

namespace crsense::lap {

struct Assignment {
  std::vector<std::pair<int, int>> pairs;  // (row, col), sorted by row
  double total = 0.0;
};

// Solves the rectangular min-cost assignment problem over min(rows, cols)
// pairs. Rectangular inputs are implicitly zero-padded to square, which
// forces all agents (or all tasks, whichever side is smaller) to be matched.
// The scan order is fixed, so identical inputs give identical outputs.
inline Assignment solve(const Matrix& costs) {
  if (costs.rows == 0 || costs.cols == 0) {
    throw std::invalid_argument("assignment: empty cost matrix");
  }
  for (double v : costs.data) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("assignment: non-finite cost entry");
    }
  }

  const int nr = static_cast<int>(costs.rows);
  const int nc = static_cast<int>(costs.cols);
  const int n = std::max(nr, nc);
  const double inf = std::numeric_limits<double>::infinity();

  auto cell = [&](int r, int c) -> double {
    return (r < nr && c < nc) ? costs.at(r, c) : 0.0;
  };

  // Potentials u, v; p[j] = row matched to column j (1-based, 0 = free).
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cell(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  Assignment out;
  for (int j = 1; j <= n; ++j) {
    const int r = p[j] - 1;
    const int c = j - 1;
    if (r < nr && c < nc) out.pairs.emplace_back(r, c);
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  for (const auto& [r, c] : out.pairs) out.total += costs.at(r, c);
  return out;
}

// Round-based sensing assignment: each round matches the still-unassigned
// agents to the bands (at most one agent per band per round), maximizing
// `values`, until every agent is assigned or out of capacity. Returns a
// binary rows x cols matrix. With capacity * cols >= rows no agent is left
// unassigned.
inline Matrix iterated_sensing_assignment(const Matrix& values, int capacity = 1) {
  if (values.rows == 0 || values.cols == 0) {
    throw std::invalid_argument("iterated assignment: empty value matrix");
  }
  if (capacity < 1) {
    throw std::invalid_argument("iterated assignment: capacity must be >= 1");
  }
  for (double v : values.data) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("iterated assignment: non-finite value entry");
    }
  }

  const std::size_t n = values.rows;
  const std::size_t bands = values.cols;
  double max_abs = 0.0;
  for (double v : values.data) max_abs = std::max(max_abs, std::abs(v));
  // Large enough to never win unless forced, small enough to keep the dual
  // arithmetic accurate.
  const double forbidden = (max_abs + 1.0) * static_cast<double>(n + bands + 1);

  Matrix x(n, bands, 0.0);
  std::vector<int> cap(n, capacity);

  for (;;) {
    std::vector<int> pool;
    for (std::size_t i = 0; i < n; ++i) {
      if (cap[i] <= 0) continue;
      bool open = false;
      for (std::size_t k = 0; k < bands; ++k) {
        if (x.at(i, k) == 0.0) {
          open = true;
          break;
        }
      }
      if (open) pool.push_back(static_cast<int>(i));
    }
    if (pool.empty()) break;

    Matrix costs(pool.size(), bands);
    for (std::size_t r = 0; r < pool.size(); ++r) {
      for (std::size_t k = 0; k < bands; ++k) {
        costs.at(r, k) =
            x.at(pool[r], k) != 0.0 ? forbidden : -values.at(pool[r], k);
      }
    }

    const Assignment round = solve(costs);
    bool assigned_any = false;
    for (const auto& [r, k] : round.pairs) {
      if (costs.at(r, k) >= forbidden) continue;  // only blocked cells left
      x.at(pool[r], k) = 1.0;
      --cap[pool[r]];
      assigned_any = true;
    }
    if (!assigned_any) break;
  }
  return x;
}

}  // namespace crsense::lap
