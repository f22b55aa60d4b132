// Copyright (C) 2026 ava-forge contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "ava_forge/core_model.hpp"

namespace ava {

struct AssignmentResult {
    std::vector<std::pair<int, int>> matches;  // (row, col), ascending by row
    std::vector<int> unmatched_rows;
    std::vector<int> unmatched_cols;
};

namespace detail {

// Shortest augmenting path Kuhn-Munkres for rows <= cols. Returns the column
// assigned to each row. Columns are scanned in ascending order and only a
// strictly smaller reduced cost replaces the current pick, which makes the
// result a deterministic function of the matrix.
template <typename Derived>
std::vector<int> solve_rows_le_cols(const Eigen::MatrixBase<Derived>& cost) {
    using Scalar = typename Derived::Scalar;
    const int n = static_cast<int>(cost.rows());
    const int m = static_cast<int>(cost.cols());
    const Scalar inf = std::numeric_limits<Scalar>::infinity();
    std::vector<Scalar> u(n + 1, 0), v(m + 1, 0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<Scalar> minv(m + 1, inf);
        std::vector<char> used(m + 1, false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            Scalar delta = inf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const Scalar cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
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
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= m; ++j)
        if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

}  // namespace detail

/// Minimum-total-cost matching on a rectangular matrix. Every row (or every
/// column, whichever side is smaller) is matched first; pairs costing more
/// than max_cost are then demoted to unmatched on both sides.
template <typename Derived>
AssignmentResult hungarian_assign(const Eigen::MatrixBase<Derived>& cost, double max_cost) {
    const int rows = static_cast<int>(cost.rows());
    const int cols = static_cast<int>(cost.cols());
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            if (!std::isfinite(static_cast<double>(cost(i, j))))
                throw Error(ErrorKind::InvalidArgument, "hungarian_assign: non-finite cost");

    std::vector<int> row_to_col(rows, -1);
    if (rows > 0 && cols > 0) {
        if (rows <= cols) {
            row_to_col = detail::solve_rows_le_cols(cost);
        } else {
            const auto col_to_row = detail::solve_rows_le_cols(cost.transpose());
            for (int j = 0; j < cols; ++j)
                if (col_to_row[j] >= 0) row_to_col[col_to_row[j]] = j;
        }
    }

    AssignmentResult result;
    std::vector<char> col_used(cols, false);
    for (int i = 0; i < rows; ++i) {
        const int j = row_to_col[i];
        if (j >= 0 && static_cast<double>(cost(i, j)) <= max_cost) {
            result.matches.emplace_back(i, j);
            col_used[j] = true;
        } else {
            result.unmatched_rows.push_back(i);
        }
    }
    for (int j = 0; j < cols; ++j)
        if (!col_used[j]) result.unmatched_cols.push_back(j);
    return result;
}

}  // namespace ava
