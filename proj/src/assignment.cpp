#include "framot/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "framot/error.hpp"

namespace framot {

namespace {

bool is_forbidden(double v, double forbid) { return v == forbid || (std::isnan(forbid) && std::isnan(v)); }

/// O(n^3) shortest augmenting path Hungarian method on a square matrix.
/// Returns the column of every row together with the dual potentials.
struct HungarianResult {
    std::vector<int> row_to_col;
    std::vector<double> u, v;  // 1-based, as in the classic formulation
};

HungarianResult hungarian(const std::vector<double>& a, int n) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    auto at = [&](int i, int j) { return a[static_cast<std::size_t>(i - 1) * n + (j - 1)]; };

    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = at(i0, j) - u[i0] - v[j];
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
        } while (j0 != 0);
    }

    HungarianResult r;
    r.row_to_col.assign(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j) r.row_to_col[static_cast<std::size_t>(p[j] - 1)] = j - 1;
    r.u = std::move(u);
    r.v = std::move(v);
    return r;
}

}  // namespace

Matching solve_assignment(const Eigen::MatrixXd& cost, double forbid_value) {
    const int rows = static_cast<int>(cost.rows());
    const int cols = static_cast<int>(cost.cols());
    Matching out;
    if (rows == 0 || cols == 0) return out;

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            const double c = cost(i, j);
            if (is_forbidden(c, forbid_value)) continue;
            if (!std::isfinite(c)) throw ValidationError("cost matrix has a non-finite entry");
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
    }
    if (lo > hi) return out;  // everything forbidden

    const int n = std::max(rows, cols);
    const double big = (hi - lo + 1.0) * (n + 1);
    std::vector<double> a(static_cast<std::size_t>(n) * n, big);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            const double c = cost(i, j);
            if (!is_forbidden(c, forbid_value)) a[static_cast<std::size_t>(i) * n + j] = c - lo;
        }
    }

    HungarianResult h = hungarian(a, n);
    std::vector<int>& assign = h.row_to_col;
    std::vector<int> owner(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) owner[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])] = i;

    // Every optimal assignment lives in the equality subgraph of the optimal
    // duals; walk it row by row to pick the smallest feasible column.
    const double tol = 1e-10 * big;
    auto tight = [&](int i, int j) {
        return a[static_cast<std::size_t>(i) * n + j] - h.u[static_cast<std::size_t>(i + 1)] -
                   h.v[static_cast<std::size_t>(j + 1)] <=
               tol;
    };

    std::vector<int> parent_row(static_cast<std::size_t>(n));
    std::vector<char> seen(static_cast<std::size_t>(n));
    for (int i = 0; i < rows; ++i) {
        const int target = assign[static_cast<std::size_t>(i)];
        for (int j = 0; j < target; ++j) {
            const int r0 = owner[static_cast<std::size_t>(j)];
            if (r0 < i || !tight(i, j)) continue;

            // Alternating path r0 -> ... -> target through unfixed rows.
            std::fill(seen.begin(), seen.end(), 0);
            seen[static_cast<std::size_t>(j)] = 1;
            std::deque<int> queue{r0};
            int last_row = -1;
            while (!queue.empty() && last_row < 0) {
                const int x = queue.front();
                queue.pop_front();
                for (int y = 0; y < n; ++y) {
                    if (seen[static_cast<std::size_t>(y)] || !tight(x, y)) continue;
                    seen[static_cast<std::size_t>(y)] = 1;
                    parent_row[static_cast<std::size_t>(y)] = x;
                    if (y == target) {
                        last_row = x;
                        break;
                    }
                    const int z = owner[static_cast<std::size_t>(y)];
                    if (z > i) queue.push_back(z);
                }
            }
            if (last_row < 0) continue;

            int cur_row = last_row;
            int new_col = target;
            while (true) {
                const int old = assign[static_cast<std::size_t>(cur_row)];
                assign[static_cast<std::size_t>(cur_row)] = new_col;
                owner[static_cast<std::size_t>(new_col)] = cur_row;
                if (old == j) break;
                cur_row = parent_row[static_cast<std::size_t>(old)];
                new_col = old;
            }
            assign[static_cast<std::size_t>(i)] = j;
            owner[static_cast<std::size_t>(j)] = i;
            break;
        }
    }

    for (int i = 0; i < rows; ++i) {
        const int j = assign[static_cast<std::size_t>(i)];
        if (j >= cols || is_forbidden(cost(i, j), forbid_value)) continue;
        out.pairs.emplace_back(i, j);
        out.total_cost += cost(i, j);
    }
    return out;
}

}  // namespace framot
