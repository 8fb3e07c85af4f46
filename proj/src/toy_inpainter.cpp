#include "batchlens/toy_inpainter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace batchlens::harness {

double masked_l1_loss(const Image& pred, const Image& truth, const Mask& mask) {
    if (pred.height != truth.height || pred.width != truth.width || pred.channels != truth.channels)
        throw std::invalid_argument("prediction and truth shapes differ");
    imaging::require_same_grid(truth, mask);
    double sum = 0;
    size_t n = 0;
    for (int y = 0; y < truth.height; ++y)
        for (int x = 0; x < truth.width; ++x) {
            if (mask.observed(y, x)) continue;
            ++n;
            for (int c = 0; c < truth.channels; ++c) sum += std::abs(pred.at(y, x, c) - truth.at(y, x, c));
        }
    if (n == 0) throw std::invalid_argument("masked L1 needs at least one missing pixel");
    return sum / static_cast<double>(n) / truth.channels;
}

Image coarse_fill(const Image& img, const Mask& mask) {
    imaging::require_same_grid(img, mask);
    const int h = img.height;
    const int w = img.width;
    const int ch = img.channels;
    Image out = img;

    std::vector<double> observed_mean(ch, 0.0);
    size_t n_obs = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (mask.observed(y, x)) {
                ++n_obs;
                for (int c = 0; c < ch; ++c) observed_mean[c] += img.at(y, x, c);
            }
    for (double& m : observed_mean) m = n_obs ? m / static_cast<double>(n_obs) : 0.5;

    // Nearest observed neighbor in each direction, -1 when none.
    auto scan = [&](int y, int x, int dy, int dx) {
        for (y += dy, x += dx; y >= 0 && y < h && x >= 0 && x < w; y += dy, x += dx)
            if (mask.observed(y, x)) return dy ? y : x;
        return -1;
    };
    auto interp = [&](int a, int b, int pos, auto value) {
        if (a >= 0 && b >= 0) return value(a) + (value(b) - value(a)) * (pos - a) / static_cast<double>(b - a);
        return value(a >= 0 ? a : b);
    };

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (mask.observed(y, x)) continue;
            const int left = scan(y, x, 0, -1), right = scan(y, x, 0, 1);
            const int up = scan(y, x, -1, 0), down = scan(y, x, 1, 0);
            for (int c = 0; c < ch; ++c) {
                double sum = 0;
                int n = 0;
                if (left >= 0 || right >= 0) {
                    sum += interp(left, right, x, [&](int xx) { return img.at(y, xx, c); });
                    ++n;
                }
                if (up >= 0 || down >= 0) {
                    sum += interp(up, down, y, [&](int yy) { return img.at(yy, x, c); });
                    ++n;
                }
                out.at(y, x, c) = n ? sum / n : observed_mean[c];
            }
        }
    }
    return out;
}

PreparedSample::PreparedSample(const Image& truth_img, Mask m, int kernel)
    : truth(&truth_img), mask(std::move(m)), pad(kernel / 2) {
    imaging::require_same_grid(truth_img, mask);
    if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("stencil size must be odd and positive");
    const Image ctx = coarse_fill(truth_img, mask);
    const int h = ctx.height, w = ctx.width, ch = ctx.channels;
    padded_width = w + 2 * pad;
    padded.resize(static_cast<size_t>(h + 2 * pad) * padded_width * ch);
    for (int y = -pad; y < h + pad; ++y)
        for (int x = -pad; x < w + pad; ++x)
            for (int c = 0; c < ch; ++c)
                padded[(static_cast<size_t>(y + pad) * padded_width + (x + pad)) * ch + c] =
                    ctx.at(std::clamp(y, 0, h - 1), std::clamp(x, 0, w - 1), c);

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (mask.missing(y, x)) {
                missing.push_back(static_cast<size_t>(y) * w + x);
                anchor.push_back(static_cast<size_t>(y) * padded_width + x);  // window top-left in padded coords
            }
    if (missing.empty()) throw std::invalid_argument("training sample has no missing pixels");
}

ToyInpainter::ToyInpainter(int channels, int kernel, double learning_rate)
    : channels_(channels), kernel_(kernel), learning_rate_(learning_rate) {
    if (channels < 1) throw std::invalid_argument("channel count must be positive");
    if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("stencil size must be odd and positive");
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be non-negative");
    params_.assign(static_cast<size_t>(channels) * kernel * kernel + channels, 0.0);
}

std::vector<double> ToyInpainter::predict_missing(const PreparedSample& s) const {
    if (s.truth->channels != channels_ || s.pad != kernel_ / 2)
        throw std::invalid_argument("sample was prepared for a different model shape");
    const size_t n = s.missing.size();
    const int ch = channels_;
    const size_t row_stride = static_cast<size_t>(s.padded_width) * ch;
    std::vector<double> pred(n * ch);
    for (int c = 0; c < ch; ++c) {
        const double* w = &params_[weight_index(c, 0, 0)];
        const double bias = params_[bias_index(c)];
        for (size_t p = 0; p < n; ++p) {
            const double* window = s.padded.data() + s.anchor[p] * ch + c;
            double acc = bias;
            for (int ky = 0; ky < kernel_; ++ky, window += row_stride)
                for (int kx = 0; kx < kernel_; ++kx) acc += w[ky * kernel_ + kx] * window[kx * ch];
            pred[p * ch + c] = acc;
        }
    }
    return pred;
}

Image ToyInpainter::inpaint(const PreparedSample& s) const {
    Image out = *s.truth;
    const auto pred = predict_missing(s);
    for (size_t p = 0; p < s.missing.size(); ++p)
        for (int c = 0; c < channels_; ++c)
            out.data[s.missing[p] * channels_ + c] = std::clamp(pred[p * channels_ + c], 0.0, 1.0);
    return out;
}

double ToyInpainter::loss(const PreparedSample& s, std::vector<double>* predictions) const {
    auto pred = predict_missing(s);
    double sum = 0;
    for (size_t p = 0; p < s.missing.size(); ++p)
        for (int c = 0; c < channels_; ++c)
            sum += std::abs(pred[p * channels_ + c] - s.truth->data[s.missing[p] * channels_ + c]);
    if (predictions) *predictions = std::move(pred);
    return sum / static_cast<double>(s.missing.size()) / channels_;
}

double ToyInpainter::loss_and_gradient(std::span<const PreparedSample* const> batch, std::vector<double>& grad,
                                       std::span<const std::vector<double>* const> cached) const {
    if (batch.empty()) throw std::invalid_argument("empty training batch");
    if (!cached.empty() && cached.size() != batch.size())
        throw std::invalid_argument("cached forward passes must align with the batch");
    grad.assign(params_.size(), 0.0);
    const int ch = channels_;
    double total = 0;
    std::vector<double> sign;
    std::vector<double> fresh;
    for (size_t bi = 0; bi < batch.size(); ++bi) {
        const PreparedSample* s = batch[bi];
        const std::vector<double>* cached_pred = cached.empty() ? nullptr : cached[bi];
        if (!cached_pred) fresh = predict_missing(*s);
        const std::vector<double>& pred = cached_pred ? *cached_pred : fresh;
        if (pred.size() != s->missing.size() * static_cast<size_t>(ch))
            throw std::invalid_argument("cached forward pass has the wrong size");
        const size_t n = s->missing.size();
        const double scale = 1.0 / (static_cast<double>(n) * ch * static_cast<double>(batch.size()));
        sign.resize(n * ch);
        double sum = 0;
        for (size_t p = 0; p < n; ++p)
            for (int c = 0; c < ch; ++c) {
                const double r = pred[p * ch + c] - s->truth->data[s->missing[p] * ch + c];
                sum += std::abs(r);
                sign[p * ch + c] = r > 0 ? scale : r < 0 ? -scale : 0.0;
            }
        total += sum / static_cast<double>(n) / ch;

        for (int c = 0; c < ch; ++c) {
            double gb = 0;
            for (size_t p = 0; p < n; ++p) gb += sign[p * ch + c];
            grad[bias_index(c)] += gb;
            for (int ky = 0; ky < kernel_; ++ky)
                for (int kx = 0; kx < kernel_; ++kx) {
                    const size_t tap = static_cast<size_t>(ky) * s->padded_width + kx;
                    double g = 0;
                    for (size_t p = 0; p < n; ++p) g += sign[p * ch + c] * s->padded[(s->anchor[p] + tap) * ch + c];
                    grad[weight_index(c, ky, kx)] += g;
                }
        }
    }
    return total / static_cast<double>(batch.size());
}

void ToyInpainter::step(std::span<const double> grad) {
    if (grad.size() != params_.size()) throw std::invalid_argument("gradient size mismatch");
    for (size_t i = 0; i < params_.size(); ++i) params_[i] -= learning_rate_ * grad[i];
}

}  // namespace batchlens::harness
