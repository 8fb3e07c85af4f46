#pragma once

#include <cstdint>
#include <vector>

namespace batchlens::imaging {

/// H x W x C pixel grid, row-major with interleaved channels, values in [0,1].
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    Image() = default;
    Image(int h, int w, int c, double fill = 0.0);

    double& at(int y, int x, int c = 0) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    double at(int y, int x, int c = 0) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    size_t pixel_count() const { return static_cast<size_t>(height) * width; }

    /// Throws std::invalid_argument unless dimensions are >= 3, channels is
    /// 1 or 3 and every value lies in [0,1].
    void validate() const;
};

/// Single gray channel in [0,1]. Also exposes the 256-level quantization
/// used by the co-occurrence matrix.
struct GrayPlane {
    int height = 0;
    int width = 0;
    std::vector<double> values;

    GrayPlane() = default;
    GrayPlane(int h, int w, double fill = 0.0);

    double at(int y, int x) const { return values[static_cast<size_t>(y) * width + x]; }
    double& at(int y, int x) { return values[static_cast<size_t>(y) * width + x]; }

    /// floor(255 * v + 0.5) clamped to [0,255].
    int level(int y, int x) const { return quantize(at(y, x)); }
    static int quantize(double v);
};

/// Binary grid; 1 = observed, 0 = missing.
struct Mask {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> bits;

    Mask() = default;
    Mask(int h, int w, uint8_t fill = 1);

    bool observed(int y, int x) const { return bits[static_cast<size_t>(y) * width + x] != 0; }
    bool missing(int y, int x) const { return !observed(y, x); }
    void set(int y, int x, uint8_t v) { bits[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }

    size_t missing_count() const;
    double missing_fraction() const;

    bool operator==(const Mask&) const = default;
};

/// BT.601 luma for 3 channels; identity for 1 channel.
GrayPlane to_grayscale(const Image& img);

/// Centered h/2 x w/2 hole. Both dimensions must be even and >= 4.
Mask regular_mask(int h, int w);

/// Union of random axis-aligned rectangles and ellipses with sides in
/// [dim/16, dim/4] until the missing fraction is within +/-0.02 of the
/// target. Deterministic for a given seed.
Mask irregular_mask(int h, int w, double target_ratio, uint64_t seed);

inline constexpr double kIrregularTolerance = 0.02;

/// Bilinear resampling with pixel-center alignment and edge clamping.
Image resize_bilinear(const Image& img, int h, int w);

/// Throws std::invalid_argument when the image and mask grids differ.
void require_same_grid(const Image& img, const Mask& mask);

}  // namespace batchlens::imaging
