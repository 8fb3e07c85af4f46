#include "batchlens/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>

namespace batchlens::complexity {

namespace {

void require_grid(const GrayPlane& gray, const Mask& mask) {
    if (gray.height != mask.height || gray.width != mask.width)
        throw std::invalid_argument("gray plane and mask dimensions differ");
}

// Counts ordered (a, b) level pairs where both pixels are missing.
std::vector<uint32_t> pair_keys(const GrayPlane& gray, const Mask& mask, int dy, int dx) {
    std::vector<uint32_t> keys;
    for (int y = 0; y + dy < gray.height; ++y) {
        for (int x = 0; x + dx < gray.width; ++x) {
            if (mask.observed(y, x) || mask.observed(y + dy, x + dx)) continue;
            keys.push_back(static_cast<uint32_t>(gray.level(y, x) * 256 + gray.level(y + dy, x + dx)));
        }
    }
    return keys;
}

}  // namespace

void Weights::validate() const {
    if (si < 0 || eg < 0 || tv < 0) throw std::invalid_argument("complexity weights must be non-negative");
    if (!std::isfinite(si + eg + tv) || std::abs(si + eg + tv - 1.0) > 1e-9)
        throw std::invalid_argument("complexity weights must sum to 1, got " + std::to_string(si + eg + tv));
}

Glcm::Glcm(std::vector<Cell> cells, Offset offset, uint64_t pair_count)
    : cells_(std::move(cells)), offset_(offset), pair_count_(pair_count) {}

double Glcm::at(int i, int j) const {
    auto it = std::lower_bound(cells_.begin(), cells_.end(), std::pair{i, j}, [](const Cell& c, const auto& key) {
        return std::pair<int, int>{c.i, c.j} < key;
    });
    if (it != cells_.end() && it->i == i && it->j == j) return it->p;
    return 0.0;
}

double spatial_information(const GrayPlane& gray, const Mask& mask) {
    require_grid(gray, mask);
    const int h = gray.height;
    const int w = gray.width;
    auto px = [&](int y, int x) { return gray.at(std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1)); };

    double sum_sq = 0.0;
    size_t n = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (mask.observed(y, x)) continue;
            const double sh = (px(y - 1, x + 1) + 2 * px(y, x + 1) + px(y + 1, x + 1)) -
                              (px(y - 1, x - 1) + 2 * px(y, x - 1) + px(y + 1, x - 1));
            const double sv = (px(y + 1, x - 1) + 2 * px(y + 1, x) + px(y + 1, x + 1)) -
                              (px(y - 1, x - 1) + 2 * px(y - 1, x) + px(y - 1, x + 1));
            sum_sq += sh * sh + sv * sv;
            ++n;
        }
    }
    if (n == 0) throw std::invalid_argument("spatial information needs at least one missing pixel");
    return std::sqrt(sum_sq / static_cast<double>(n));
}

Glcm glcm(const GrayPlane& gray, const Mask& mask) {
    require_grid(gray, mask);
    Glcm::Offset offset = Glcm::Offset::horizontal;
    std::vector<uint32_t> keys = pair_keys(gray, mask, 0, 1);
    if (keys.empty()) {
        offset = Glcm::Offset::vertical;
        keys = pair_keys(gray, mask, 1, 0);
    }
    if (keys.empty()) throw std::invalid_argument("missing region has no adjacent pixel pairs for the GLCM");

    std::sort(keys.begin(), keys.end());
    const double total = static_cast<double>(keys.size());
    std::vector<Glcm::Cell> cells;
    for (size_t i = 0; i < keys.size();) {
        size_t j = i;
        while (j < keys.size() && keys[j] == keys[i]) ++j;
        cells.push_back({static_cast<uint8_t>(keys[i] / 256), static_cast<uint8_t>(keys[i] % 256),
                         static_cast<double>(j - i) / total});
        i = j;
    }
    return Glcm(std::move(cells), offset, keys.size());
}

double glcm_entropy(const Glcm& g) {
    double h = 0.0;
    for (const auto& c : g.cells()) {
        if (c.p > 0) h -= c.p * std::log(c.p);
    }
    return std::max(0.0, h);
}

double total_variation(const GrayPlane& gray, const Mask& mask) {
    require_grid(gray, mask);
    if (gray.height < 2 || gray.width < 2) throw std::invalid_argument("total variation needs at least 2x2 pixels");
    double tv = 0.0;
    for (int y = 0; y < gray.height; ++y) {
        for (int x = 0; x < gray.width; ++x) {
            if (mask.observed(y, x)) continue;
            if (x + 1 < gray.width) tv += std::abs(gray.at(y, x + 1) - gray.at(y, x));
            if (y + 1 < gray.height) tv += std::abs(gray.at(y + 1, x) - gray.at(y, x));
        }
    }
    return tv;
}

MetricValues raw_metrics(const GrayPlane& gray, const Mask& mask) {
    return {spatial_information(gray, mask), glcm_entropy(glcm(gray, mask)), total_variation(gray, mask)};
}

std::vector<MetricValues> raw_metrics(std::span<const GrayPlane> grays, std::span<const Mask> masks, int jobs) {
    if (grays.size() != masks.size()) throw std::invalid_argument("need one mask per image");
    std::vector<MetricValues> out(grays.size());
    const size_t workers = std::clamp<size_t>(jobs < 1 ? 1 : static_cast<size_t>(jobs), 1, std::max<size_t>(1, grays.size()));
    if (workers == 1) {
        for (size_t i = 0; i < grays.size(); ++i) out[i] = raw_metrics(grays[i], masks[i]);
        return out;
    }

    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (size_t i = t; i < grays.size(); i += workers) out[i] = raw_metrics(grays[i], masks[i]);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

MetricRanges MetricRanges::of(std::span<const MetricValues> population) {
    if (population.empty()) throw std::invalid_argument("cannot take ranges of an empty population");
    MetricRanges r{population.front(), population.front()};
    for (const auto& v : population) {
        r.lo.si = std::min(r.lo.si, v.si);
        r.lo.eg = std::min(r.lo.eg, v.eg);
        r.lo.tv = std::min(r.lo.tv, v.tv);
        r.hi.si = std::max(r.hi.si, v.si);
        r.hi.eg = std::max(r.hi.eg, v.eg);
        r.hi.tv = std::max(r.hi.tv, v.tv);
    }
    return r;
}

namespace {

double minmax(double v, double lo, double hi) {
    if (!(hi > lo)) return 0.0;
    return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
}

}  // namespace

MetricValues MetricRanges::normalize(const MetricValues& raw) const {
    return {minmax(raw.si, lo.si, hi.si), minmax(raw.eg, lo.eg, hi.eg), minmax(raw.tv, lo.tv, hi.tv)};
}

std::vector<double> normalize_values(std::span<const double> raw) {
    if (raw.empty()) return {};
    const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
    std::vector<double> out;
    out.reserve(raw.size());
    for (double v : raw) out.push_back(minmax(v, *lo, *hi));
    return out;
}

std::vector<MetricValues> normalize_profiles(std::span<const MetricValues> raw) {
    if (raw.empty()) return {};
    const MetricRanges r = MetricRanges::of(raw);
    std::vector<MetricValues> out;
    out.reserve(raw.size());
    for (const auto& v : raw) out.push_back(r.normalize(v));
    return out;
}

double combine(const MetricValues& norm, const Weights& w) {
    w.validate();
    return std::clamp(w.si * norm.si + w.eg * norm.eg + w.tv * norm.tv, 0.0, 1.0);
}

std::vector<ComplexityProfile> profile_population(std::span<const MetricValues> raw, const Weights& w) {
    w.validate();
    const auto norm = normalize_profiles(raw);
    std::vector<ComplexityProfile> out;
    out.reserve(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) out.push_back({raw[i], norm[i], combine(norm[i], w), w});
    return out;
}

}  // namespace batchlens::complexity
