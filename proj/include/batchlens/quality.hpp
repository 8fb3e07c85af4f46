#pragma once

#include <array>
#include <limits>

#include "batchlens/imaging.hpp"

namespace batchlens::quality {

using imaging::Image;

inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

struct QualityReport {
    double psnr = 0.0;  // dB; kPsnrIdentical when the images are equal
    double ssim = 0.0;
};

/// 10 log10(1 / MSE) over every pixel and channel, peak 1.0.
double psnr(const Image& a, const Image& b);

/// Mean local SSIM over all fully contained 11x11 windows, Gaussian
/// weighting with sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range 1.
/// Channels are scored separately and averaged.
double ssim(const Image& a, const Image& b);

QualityReport evaluate(const Image& a, const Image& b);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
std::array<double, kSsimWindow> ssim_gaussian_taps();

}  // namespace batchlens::quality
