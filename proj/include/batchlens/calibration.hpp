#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace batchlens::calibration {

inline constexpr int kNoise = -1;

struct DbscanParams {
    double eps = 0.05;
    int min_pts = 3;

    /// eps = 0.05 on normalized values, min_pts = max(3, ceil(0.01 * n)).
    static DbscanParams defaults_for(size_t n);
    void validate() const;
};

/// Density clustering on the real line. A point is core when at least
/// `min_pts` values (itself included) lie within eps, inclusive. Chains of
/// core points no further than eps apart form a cluster; a non-core point
/// within eps of a core point joins the cluster of its nearest core point
/// (the lower one on ties). Everything else is kNoise. Cluster ids are
/// numbered in ascending value order, so labels depend only on the values.
std::vector<int> dbscan_1d(std::span<const double> values, const DbscanParams& params);

struct CalibrationResult {
    std::vector<int> labels;
    int largest_cluster = kNoise;  // kNoise when every point is noise
    double pivot = 0.0;
    DbscanParams params;
    bool median_fallback = false;
};

/// Pivot constant for the selection denominator: the minimum value inside
/// the most populous cluster (ties go to the cluster with the smaller
/// minimum). Falls back to the median when clustering finds nothing.
CalibrationResult estimate_pivot(std::span<const double> values,
                                 std::optional<DbscanParams> params = std::nullopt);

}  // namespace batchlens::calibration
