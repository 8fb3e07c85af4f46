#include "batchlens/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace batchlens::harness {

std::vector<imaging::Image> synthetic_images(const SyntheticSpec& spec, uint64_t seed) {
    if (spec.count < 1 || spec.size < 4) throw std::invalid_argument("synthetic dataset needs count >= 1 and size >= 4");
    if (spec.channels != 1 && spec.channels != 3) throw std::invalid_argument("synthetic channels must be 1 or 3");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    const int s = spec.size;
    std::vector<imaging::Image> out;
    out.reserve(spec.count);
    for (int n = 0; n < spec.count; ++n) {
        imaging::Image img(s, s, spec.channels);
        const bool textured = unit(rng) < spec.textured_fraction;
        for (int c = 0; c < spec.channels; ++c) {
            const double base = uni(0.2, 0.8);
            const double gx = uni(-0.4, 0.4);
            const double gy = uni(-0.4, 0.4);
            const double ripple = uni(0.0, 0.1);
            const double freq = uni(0.5, 2.0);
            const double phase = uni(0.0, 2 * std::numbers::pi);
            for (int y = 0; y < s; ++y)
                for (int x = 0; x < s; ++x) {
                    const double u = static_cast<double>(x) / s - 0.5;
                    const double v = static_cast<double>(y) / s - 0.5;
                    const double r = ripple * std::sin(2 * std::numbers::pi * freq * (u + v) + phase);
                    img.at(y, x, c) = base + gx * u + gy * v + r;
                }
        }
        if (textured) {
            const double amp = uni(spec.min_noise, spec.max_noise);
            const int half = static_cast<int>(uni(0.3, 0.5) * s);
            const int y0 = std::max(0, s / 2 - half), y1 = std::min(s, s / 2 + half);
            const int x0 = std::max(0, s / 2 - half), x1 = std::min(s, s / 2 + half);
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x)
                    for (int c = 0; c < spec.channels; ++c) img.at(y, x, c) += amp * (unit(rng) - 0.5);
        }
        for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
        out.push_back(std::move(img));
    }
    return out;
}

}  // namespace batchlens::harness
