#include "batchlens/quality.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace batchlens::quality {

namespace {

void require_same_shape(const Image& a, const Image& b) {
    if (a.height != b.height || a.width != b.width || a.channels != b.channels)
        throw std::invalid_argument("images must have the same shape");
}

// Separable 'valid' filtering of one channel.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w,
                                 const std::array<double, kSsimWindow>& taps) {
    const int ow = w - kSsimWindow + 1;
    const int oh = h - kSsimWindow + 1;
    std::vector<double> rows(static_cast<size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0;
            for (int k = 0; k < kSsimWindow; ++k) s += taps[k] * src[static_cast<size_t>(y) * w + x + k];
            rows[static_cast<size_t>(y) * ow + x] = s;
        }
    std::vector<double> out(static_cast<size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0;
            for (int k = 0; k < kSsimWindow; ++k) s += taps[k] * rows[static_cast<size_t>(y + k) * ow + x];
            out[static_cast<size_t>(y) * ow + x] = s;
        }
    return out;
}

}  // namespace

std::array<double, kSsimWindow> ssim_gaussian_taps() {
    std::array<double, kSsimWindow> taps{};
    double sum = 0;
    for (int k = 0; k < kSsimWindow; ++k) {
        const double d = k - kSsimWindow / 2;
        taps[k] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma));
        sum += taps[k];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

double psnr(const Image& a, const Image& b) {
    require_same_shape(a, b);
    if (a.data.empty()) throw std::invalid_argument("empty image");
    double se = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(a.data.size());
    if (mse == 0.0) return kPsnrIdentical;
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Image& a, const Image& b) {
    require_same_shape(a, b);
    if (a.height < kSsimWindow || a.width < kSsimWindow)
        throw std::invalid_argument("SSIM needs images of at least 11x11 pixels");
    const auto taps = ssim_gaussian_taps();
    const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0);
    const double c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
    const size_t n = a.pixel_count();

    double total = 0;
    for (int c = 0; c < a.channels; ++c) {
        std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
        for (size_t i = 0; i < n; ++i) {
            x[i] = a.data[i * a.channels + c];
            y[i] = b.data[i * b.channels + c];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        const auto mx = filter_valid(x, a.height, a.width, taps);
        const auto my = filter_valid(y, a.height, a.width, taps);
        const auto sxx = filter_valid(xx, a.height, a.width, taps);
        const auto syy = filter_valid(yy, a.height, a.width, taps);
        const auto sxy = filter_valid(xy, a.height, a.width, taps);
        double acc = 0;
        for (size_t i = 0; i < mx.size(); ++i) {
            const double vx = sxx[i] - mx[i] * mx[i];
            const double vy = syy[i] - my[i] * my[i];
            const double cov = sxy[i] - mx[i] * my[i];
            acc += ((2 * mx[i] * my[i] + c1) * (2 * cov + c2)) /
                   ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
        }
        total += acc / static_cast<double>(mx.size());
    }
    return total / a.channels;
}

QualityReport evaluate(const Image& a, const Image& b) { return {psnr(a, b), ssim(a, b)}; }

}  // namespace batchlens::quality
