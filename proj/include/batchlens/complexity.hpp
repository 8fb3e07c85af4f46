#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "batchlens/imaging.hpp"

namespace batchlens::complexity {

using imaging::GrayPlane;
using imaging::Mask;

/// One value per missingness metric: spatial information, GLCM entropy and
/// total variation.
struct MetricValues {
    double si = 0.0;
    double eg = 0.0;
    double tv = 0.0;

    bool operator==(const MetricValues&) const = default;
};

/// Non-negative mixing weights summing to one.
struct Weights {
    double si = 0.0;
    double eg = 0.0;
    double tv = 1.0;

    /// Throws std::invalid_argument on negative weights or a sum that
    /// differs from 1 by more than 1e-9.
    void validate() const;
};

struct ComplexityProfile {
    MetricValues raw;
    MetricValues norm;
    double combined = 0.0;
    Weights weights;
};

/// Normalized gray-level co-occurrence matrix over 256 levels. Only
/// non-zero cells are stored.
class Glcm {
public:
    struct Cell {
        uint8_t i;
        uint8_t j;
        double p;
    };
    enum class Offset { horizontal, vertical };

    Glcm(std::vector<Cell> cells, Offset offset, uint64_t pair_count);

    double at(int i, int j) const;
    const std::vector<Cell>& cells() const { return cells_; }
    Offset offset() const { return offset_; }
    uint64_t pair_count() const { return pair_count_; }

private:
    std::vector<Cell> cells_;  // sorted by (i, j)
    Offset offset_;
    uint64_t pair_count_;
};

/// RMS of Sobel gradient magnitude over missing pixels. The Sobel response
/// is taken on the full image with replicated borders.
double spatial_information(const GrayPlane& gray, const Mask& mask);

/// Ordered pairs at offset (0,+1) with both pixels missing. Falls back to
/// (+1,0) when the hole has no horizontal pair; throws if neither exists.
Glcm glcm(const GrayPlane& gray, const Mask& mask);

/// -sum G ln G with 0 ln 0 = 0.
double glcm_entropy(const Glcm& g);

/// Horizontal plus vertical absolute differences, each gated by
/// (1 - m) at the left/top pixel of the pair.
double total_variation(const GrayPlane& gray, const Mask& mask);

/// All three raw metrics for one image/mask pair.
MetricValues raw_metrics(const GrayPlane& gray, const Mask& mask);

/// Raw metrics for many samples. `jobs` > 1 spreads samples over threads;
/// results are identical to the sequential path.
std::vector<MetricValues> raw_metrics(std::span<const GrayPlane> grays, std::span<const Mask> masks,
                                      int jobs = 1);

/// Per-metric [min, max] over a population.
struct MetricRanges {
    MetricValues lo;
    MetricValues hi;

    static MetricRanges of(std::span<const MetricValues> population);

    /// Min-max map into [0,1], clamped; a degenerate range maps to 0.
    MetricValues normalize(const MetricValues& raw) const;
};

/// Min-max normalize a single list; all-equal inputs map to 0.
std::vector<double> normalize_values(std::span<const double> raw);

/// Min-max normalize every metric over the given population.
std::vector<MetricValues> normalize_profiles(std::span<const MetricValues> raw);

double combine(const MetricValues& norm, const Weights& w);

/// Normalize over `raw` and combine; the common path for a scoring batch.
std::vector<ComplexityProfile> profile_population(std::span<const MetricValues> raw, const Weights& w);

}  // namespace batchlens::complexity
