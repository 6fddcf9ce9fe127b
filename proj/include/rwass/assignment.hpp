#pragma once

// Exact minimum-cost perfect matching on a dense square matrix
// (shortest augmenting paths with dual potentials, O(n^3)).

#include <rwass/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace rwass {

struct Assignment {
  std::vector<std::size_t> col_of_row;
  double total = 0.0;
};

inline Assignment solve_assignment(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (cost[i].size() != n)
      throw InputError("cost matrix is not square (row " + std::to_string(i) + ")");
    for (std::size_t j = 0; j < n; ++j) {
      const double c = cost[i][j];
      if (!std::isfinite(c))
        throw InputError("non-finite cost at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      if (c < 0.0)
        throw InputError("negative cost at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    }
  }
  Assignment out;
  out.col_of_row.assign(n, 0);
  if (n == 0) return out;

  // 1-based internals; column 0 is the virtual start of each augmenting path
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> row_of(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    row_of[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = row_of[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      row_of[j0] = row_of[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  for (std::size_t j = 1; j <= n; ++j) out.col_of_row[row_of[j] - 1] = j - 1;
  // ascending order makes the total independent of how rows and columns are labeled
  std::vector<double> chosen(n);
  for (std::size_t i = 0; i < n; ++i) chosen[i] = cost[i][out.col_of_row[i]];
  std::sort(chosen.begin(), chosen.end());
  for (double c : chosen) out.total += c;
  return out;
}

}  // namespace rwass
