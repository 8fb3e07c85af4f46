#include "batchlens/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace batchlens::calibration {

DbscanParams DbscanParams::defaults_for(size_t n) {
    const int scaled = static_cast<int>(std::ceil(0.01 * static_cast<double>(n)));
    return {0.05, std::max(3, scaled)};
}

void DbscanParams::validate() const {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("DBSCAN eps must be positive");
    if (min_pts < 1) throw std::invalid_argument("DBSCAN min_pts must be at least 1");
}

std::vector<int> dbscan_1d(std::span<const double> values, const DbscanParams& params) {
    params.validate();
    const size_t n = values.size();
    std::vector<int> labels(n, kNoise);
    if (n == 0) return labels;
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("DBSCAN values must be finite");

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return values[a] < values[b]; });
    auto val = [&](size_t rank) { return values[order[rank]]; };

    // Neighbor counts via a sliding window over the sorted values.
    std::vector<bool> core(n, false);
    size_t lo = 0;
    size_t hi = 0;
    for (size_t r = 0; r < n; ++r) {
        while (val(r) - val(lo) > params.eps) ++lo;
        if (hi < r) hi = r;
        while (hi + 1 < n && val(hi + 1) - val(r) <= params.eps) ++hi;
        core[r] = static_cast<int>(hi - lo + 1) >= params.min_pts;
    }

    // Link consecutive core points into clusters.
    std::vector<int> sorted_label(n, kNoise);
    int next_id = -1;
    std::optional<size_t> prev_core;
    for (size_t r = 0; r < n; ++r) {
        if (!core[r]) continue;
        if (!prev_core || val(r) - val(*prev_core) > params.eps) ++next_id;
        sorted_label[r] = next_id;
        prev_core = r;
    }

    // Border points take the cluster of the nearest core point.
    std::vector<std::optional<size_t>> left_core(n), right_core(n);
    for (size_t r = 0, last = n; r < n; ++r) {
        if (core[r]) last = r;
        if (last != n) left_core[r] = last;
    }
    for (size_t r = n, last = n; r-- > 0;) {
        if (core[r]) last = r;
        if (last != n) right_core[r] = last;
    }
    for (size_t r = 0; r < n; ++r) {
        if (core[r]) continue;
        const double dl = left_core[r] ? val(r) - val(*left_core[r]) : INFINITY;
        const double dr = right_core[r] ? val(*right_core[r]) - val(r) : INFINITY;
        if (dl <= params.eps && dl <= dr) {
            sorted_label[r] = sorted_label[*left_core[r]];
        } else if (dr <= params.eps) {
            sorted_label[r] = sorted_label[*right_core[r]];
        }
    }

    for (size_t r = 0; r < n; ++r) labels[order[r]] = sorted_label[r];
    return labels;
}

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

CalibrationResult estimate_pivot(std::span<const double> values, std::optional<DbscanParams> params) {
    if (values.empty()) throw std::invalid_argument("calibration needs at least one complexity value");
    CalibrationResult res;
    res.params = params.value_or(DbscanParams::defaults_for(values.size()));
    res.labels = dbscan_1d(values, res.params);

    const int clusters = 1 + *std::max_element(res.labels.begin(), res.labels.end());
    if (clusters == 0) {
        res.pivot = median({values.begin(), values.end()});
        res.median_fallback = true;
        return res;
    }

    std::vector<size_t> count(clusters, 0);
    std::vector<double> minimum(clusters, INFINITY);
    for (size_t i = 0; i < values.size(); ++i) {
        const int c = res.labels[i];
        if (c == kNoise) continue;
        ++count[c];
        minimum[c] = std::min(minimum[c], values[i]);
    }
    int best = 0;
    for (int c = 1; c < clusters; ++c) {
        if (count[c] > count[best] || (count[c] == count[best] && minimum[c] < minimum[best])) best = c;
    }
    res.largest_cluster = best;
    res.pivot = minimum[best];
    return res;
}

}  // namespace batchlens::calibration
