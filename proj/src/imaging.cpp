#include "batchlens/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace batchlens::imaging {

Image::Image(int h, int w, int c, double fill)
    : height(h), width(w), channels(c) {
    if (h <= 0 || w <= 0 || c <= 0) throw std::invalid_argument("image dimensions must be positive");
    data.assign(static_cast<size_t>(h) * w * c, fill);
}

void Image::validate() const {
    if (height < 3 || width < 3)
        throw std::invalid_argument("image must be at least 3x3, got " + std::to_string(height) + "x" +
                                    std::to_string(width));
    if (channels != 1 && channels != 3)
        throw std::invalid_argument("unsupported channel count " + std::to_string(channels));
    if (data.size() != static_cast<size_t>(height) * width * channels)
        throw std::invalid_argument("image buffer size does not match dimensions");
    for (double v : data) {
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("image values must lie in [0,1]");
    }
}

GrayPlane::GrayPlane(int h, int w, double fill) : height(h), width(w) {
    if (h <= 0 || w <= 0) throw std::invalid_argument("plane dimensions must be positive");
    values.assign(static_cast<size_t>(h) * w, fill);
}

int GrayPlane::quantize(double v) {
    const double q = std::floor(255.0 * v + 0.5);
    return static_cast<int>(std::clamp(q, 0.0, 255.0));
}

Mask::Mask(int h, int w, uint8_t fill) : height(h), width(w) {
    if (h <= 0 || w <= 0) throw std::invalid_argument("mask dimensions must be positive");
    bits.assign(static_cast<size_t>(h) * w, fill ? 1 : 0);
}

size_t Mask::missing_count() const {
    return static_cast<size_t>(std::count(bits.begin(), bits.end(), uint8_t{0}));
}

double Mask::missing_fraction() const {
    return static_cast<double>(missing_count()) / static_cast<double>(bits.size());
}

GrayPlane to_grayscale(const Image& img) {
    if (img.channels != 1 && img.channels != 3)
        throw std::invalid_argument("unsupported channel count " + std::to_string(img.channels));
    GrayPlane out(img.height, img.width);
    const size_t n = img.pixel_count();
    if (img.channels == 1) {
        out.values.assign(img.data.begin(), img.data.end());
        return out;
    }
    for (size_t i = 0; i < n; ++i) {
        const double* p = &img.data[i * 3];
        const double g = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        out.values[i] = std::clamp(g, 0.0, 1.0);
    }
    return out;
}

Mask regular_mask(int h, int w) {
    if (h < 4 || w < 4 || h % 2 != 0 || w % 2 != 0)
        throw std::invalid_argument("regular mask needs even dimensions >= 4, got " + std::to_string(h) + "x" +
                                    std::to_string(w));
    Mask m(h, w, 1);
    const int y0 = h / 4;
    const int x0 = w / 4;
    for (int y = y0; y < y0 + h / 2; ++y)
        for (int x = x0; x < x0 + w / 2; ++x) m.set(y, x, 0);
    return m;
}

namespace {

void paint_hole(Mask& m, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> hside(std::max(1, m.height / 16), std::max(1, m.height / 4));
    std::uniform_int_distribution<int> wside(std::max(1, m.width / 16), std::max(1, m.width / 4));
    std::bernoulli_distribution ellipse(0.5);
    const int hh = hside(rng);
    const int ww = wside(rng);
    std::uniform_int_distribution<int> top(0, m.height - hh);
    std::uniform_int_distribution<int> left(0, m.width - ww);
    const bool is_ellipse = ellipse(rng);
    const int y0 = top(rng);
    const int x0 = left(rng);

    const double cy = y0 + (hh - 1) / 2.0;
    const double cx = x0 + (ww - 1) / 2.0;
    const double ry = hh / 2.0;
    const double rx = ww / 2.0;
    for (int y = y0; y < y0 + hh; ++y) {
        for (int x = x0; x < x0 + ww; ++x) {
            if (is_ellipse) {
                const double dy = (y - cy) / ry;
                const double dx = (x - cx) / rx;
                if (dy * dy + dx * dx > 1.0) continue;
            }
            m.set(y, x, 0);
        }
    }
}

}  // namespace

Mask irregular_mask(int h, int w, double target_ratio, uint64_t seed) {
    if (!(target_ratio > 0.0 && target_ratio < 1.0))
        throw std::invalid_argument("irregular mask target ratio must lie in (0,1)");
    const double lo = target_ratio - kIrregularTolerance;
    const double hi = target_ratio + kIrregularTolerance;
    constexpr int kMaxAttempts = 20000;

    std::mt19937_64 rng(seed);
    Mask m(h, w, 1);
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        Mask trial = m;
        paint_hole(trial, rng);
        const double frac = trial.missing_fraction();
        if (frac > hi) continue;  // overshoot; try a different hole
        m = std::move(trial);
        if (frac >= lo) return m;
    }
    throw std::runtime_error("irregular mask could not reach missing ratio " + std::to_string(target_ratio) +
                             " within " + std::to_string(kMaxAttempts) + " attempts");
}

Image resize_bilinear(const Image& img, int h, int w) {
    if (h <= 0 || w <= 0) throw std::invalid_argument("resize target must be positive");
    if (img.height == h && img.width == w) return img;
    Image out(h, w, img.channels);
    const double sy = static_cast<double>(img.height) / h;
    const double sx = static_cast<double>(img.width) / w;
    for (int y = 0; y < h; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(img.height - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, img.height - 1);
        const double ty = fy - y0;
        for (int x = 0; x < w; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(img.width - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const double tx = fx - x0;
            for (int c = 0; c < img.channels; ++c) {
                const double top = img.at(y0, x0, c) * (1 - tx) + img.at(y0, x1, c) * tx;
                const double bot = img.at(y1, x0, c) * (1 - tx) + img.at(y1, x1, c) * tx;
                out.at(y, x, c) = std::clamp(top * (1 - ty) + bot * ty, 0.0, 1.0);
            }
        }
    }
    return out;
}

void require_same_grid(const Image& img, const Mask& mask) {
    if (img.height != mask.height || img.width != mask.width)
        throw std::invalid_argument("image and mask dimensions differ");
}

}  // namespace batchlens::imaging
