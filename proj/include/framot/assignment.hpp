#pragma once

#include <Eigen/Core>
#include <limits>
#include <utility>
#include <vector>

namespace framot {

/// Default sentinel marking a disallowed pair.
inline constexpr double kForbidden = std::numeric_limits<double>::infinity();

struct Matching {
    std::vector<std::pair<int, int>> pairs;  // (row, col), ascending by row
    double total_cost = 0.0;
};

/// Rectangular linear assignment.
///
/// Finds a matching of maximum cardinality over the allowed pairs (entries not
/// equal to `forbid_value`) and, among those, one of minimum total cost. Ties
/// between optimal matchings are broken towards the row-major smallest column
/// choice, so the result is fully deterministic.
///
/// Internally the matrix is padded to a square one whose padding and
/// forbidden entries carry a finite cost larger than any achievable saving;
/// such matches are reported as unmatched. Throws ValidationError for
/// non-finite entries other than the sentinel.
Matching solve_assignment(const Eigen::MatrixXd& cost, double forbid_value = kForbidden);

}  // namespace framot
