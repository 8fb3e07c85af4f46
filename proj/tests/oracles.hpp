#pragma once

// Slow, straightforward reference implementations used only by the tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "batchlens/imaging.hpp"

namespace oracle {

using batchlens::imaging::GrayPlane;
using batchlens::imaging::Image;
using batchlens::imaging::Mask;

inline double clamped(const GrayPlane& g, int y, int x) {
    y = std::clamp(y, 0, g.height - 1);
    x = std::clamp(x, 0, g.width - 1);
    return g.values[static_cast<size_t>(y) * g.width + x];
}

// Sobel by explicit 3x3 correlation with replicated borders.
inline double spatial_information(const GrayPlane& g, const Mask& m) {
    const int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
    const int ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
    double sum = 0;
    int n = 0;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            if (m.observed(y, x)) continue;
            double gx = 0, gy = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const double v = clamped(g, y + dy, x + dx);
                    gx += kx[dy + 1][dx + 1] * v;
                    gy += ky[dy + 1][dx + 1] * v;
                }
            sum += gx * gx + gy * gy;
            ++n;
        }
    return std::sqrt(sum / n);
}

inline int level(double v) { return std::clamp(static_cast<int>(std::floor(255.0 * v + 0.5)), 0, 255); }

// Dense 256x256 co-occurrence counts, horizontal first, vertical fallback.
inline std::vector<double> glcm_dense(const GrayPlane& g, const Mask& m) {
    std::vector<double> counts(256 * 256, 0.0);
    double total = 0;
    for (int pass = 0; pass < 2 && total == 0; ++pass) {
        const int dy = pass == 0 ? 0 : 1;
        const int dx = pass == 0 ? 1 : 0;
        for (int y = 0; y + dy < g.height; ++y)
            for (int x = 0; x + dx < g.width; ++x)
                if (m.missing(y, x) && m.missing(y + dy, x + dx)) {
                    counts[level(g.at(y, x)) * 256 + level(g.at(y + dy, x + dx))] += 1;
                    total += 1;
                }
    }
    for (double& c : counts) c /= total;
    return counts;
}

inline double glcm_entropy(const GrayPlane& g, const Mask& m) {
    double e = 0;
    for (double p : glcm_dense(g, m))
        if (p > 0) e -= p * std::log(p);
    return e;
}

inline double total_variation(const GrayPlane& g, const Mask& m) {
    double tv = 0;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            const double gate = m.observed(y, x) ? 0.0 : 1.0;
            if (x + 1 < g.width) tv += std::abs(g.at(y, x + 1) - g.at(y, x)) * gate;
            if (y + 1 < g.height) tv += std::abs(g.at(y + 1, x) - g.at(y, x)) * gate;
        }
    return tv;
}

// Sort, merge neighbors with gap <= eps into intervals, then keep only the
// parts held together by core points. Border points go to the nearest core.
inline std::vector<int> dbscan_1d(const std::vector<double>& v, double eps, int min_pts) {
    const size_t n = v.size();
    std::vector<bool> core(n);
    for (size_t i = 0; i < n; ++i) {
        int c = 0;
        for (size_t j = 0; j < n; ++j) c += std::abs(v[i] - v[j]) <= eps;
        core[i] = c >= min_pts;
    }
    std::vector<size_t> cores;
    for (size_t i = 0; i < n; ++i)
        if (core[i]) cores.push_back(i);
    std::sort(cores.begin(), cores.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    // Intervals of chained cores.
    std::vector<std::pair<double, double>> runs;
    for (size_t k = 0; k < cores.size(); ++k) {
        const double x = v[cores[k]];
        if (runs.empty() || x - runs.back().second > eps)
            runs.push_back({x, x});
        else
            runs.back().second = x;
    }
    std::vector<int> labels(n, -1);
    for (size_t i = 0; i < n; ++i) {
        if (core[i]) {
            for (size_t r = 0; r < runs.size(); ++r)
                if (v[i] >= runs[r].first && v[i] <= runs[r].second) labels[i] = static_cast<int>(r);
            continue;
        }
        double best = eps;
        double best_value = 0;
        bool found = false;
        for (size_t c : cores) {
            const double d = std::abs(v[i] - v[c]);
            if (d < best || (d == best && (!found || v[c] < best_value))) {
                if (d > eps) continue;
                best = d;
                best_value = v[c];
                found = true;
            }
        }
        if (found)
            for (size_t r = 0; r < runs.size(); ++r)
                if (best_value >= runs[r].first && best_value <= runs[r].second) labels[i] = static_cast<int>(r);
    }
    return labels;
}

// Full stable sort by descending score, ties to the lower index.
inline std::vector<size_t> topk(const std::vector<double>& s, size_t b) {
    std::vector<size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t c) { return s[a] > s[c]; });
    idx.resize(b);
    return idx;
}

// SSIM evaluated window by window with a full 2-D Gaussian.
inline double ssim(const Image& a, const Image& b) {
    const int w = 11;
    const double sigma = 1.5;
    std::array<std::array<double, 11>, 11> g{};
    double total = 0;
    for (int y = 0; y < w; ++y)
        for (int x = 0; x < w; ++x) {
            g[y][x] = std::exp(-((y - 5) * (y - 5) + (x - 5) * (x - 5)) / (2 * sigma * sigma));
            total += g[y][x];
        }
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    double sum = 0;
    for (int c = 0; c < a.channels; ++c) {
        double chan = 0;
        int windows = 0;
        for (int y0 = 0; y0 + w <= a.height; ++y0)
            for (int x0 = 0; x0 + w <= a.width; ++x0) {
                double ma = 0, mb = 0;
                for (int y = 0; y < w; ++y)
                    for (int x = 0; x < w; ++x) {
                        const double k = g[y][x] / total;
                        ma += k * a.at(y0 + y, x0 + x, c);
                        mb += k * b.at(y0 + y, x0 + x, c);
                    }
                double va = 0, vb = 0, cov = 0;
                for (int y = 0; y < w; ++y)
                    for (int x = 0; x < w; ++x) {
                        const double k = g[y][x] / total;
                        const double da = a.at(y0 + y, x0 + x, c) - ma;
                        const double db = b.at(y0 + y, x0 + x, c) - mb;
                        va += k * da * da;
                        vb += k * db * db;
                        cov += k * da * db;
                    }
                chan += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
                ++windows;
            }
        sum += chan / windows;
    }
    return sum / a.channels;
}

inline double relative_error(double got, double want) {
    if (want == 0.0) return std::abs(got);
    return std::abs(got - want) / std::abs(want);
}

// Random image: a smooth ramp, sometimes with noise, sometimes flat.
inline Image random_image(int h, int w, int channels, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Image img(h, w, channels);
    const double a = u(rng), b = u(rng), amp = u(rng) < 0.3 ? 0.0 : u(rng);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c) {
                const double base = 0.5 * (a * y / h + b * x / w);
                img.at(y, x, c) = std::clamp(base + amp * (u(rng) - 0.5), 0.0, 1.0);
            }
    return img;
}

}  // namespace oracle
