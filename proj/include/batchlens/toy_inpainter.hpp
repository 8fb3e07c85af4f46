#pragma once

#include <span>
#include <vector>

#include "batchlens/imaging.hpp"

namespace batchlens::harness {

using imaging::Image;
using imaging::Mask;

/// (1/N_m) * sum over missing pixels and channels of |pred - truth| / C.
/// Throws when shapes disagree or nothing is missing.
double masked_l1_loss(const Image& pred, const Image& truth, const Mask& mask);

/// Missing pixels pre-filled by averaging row and column linear
/// interpolation between the nearest observed neighbors. Observed pixels
/// keep their value; a pixel with no observed neighbor in its row or column
/// takes the mean of all observed pixels (0.5 if none).
Image coarse_fill(const Image& img, const Mask& mask);

/// A training sample with everything the model needs precomputed: the
/// coarse-filled context with a replicated border and the padded offsets of
/// the missing pixels.
struct PreparedSample {
    PreparedSample(const Image& truth, Mask mask, int kernel);

    const Image* truth;
    Mask mask;
    int pad;
    int padded_width;
    std::vector<double> padded;       // (H + 2 pad) x (W + 2 pad) x C
    std::vector<size_t> missing;      // pixel index y * W + x
    std::vector<size_t> anchor;       // padded pixel index of each missing pixel's window origin
};

/// Single linear convolution stencil: each output channel c is
/// sum_k w[c][k] * context_c(p + k) + bias[c].
class ToyInpainter {
public:
    ToyInpainter(int channels, int kernel, double learning_rate);

    int channels() const { return channels_; }
    int kernel() const { return kernel_; }
    double learning_rate() const { return learning_rate_; }
    size_t parameter_count() const { return params_.size(); }
    std::span<const double> parameters() const { return params_; }
    std::span<double> parameters() { return params_; }

    /// Unclamped predictions for the missing pixels, [pixel][channel].
    std::vector<double> predict_missing(const PreparedSample& s) const;

    /// Observed pixels copied from the truth, missing pixels predicted and
    /// clamped to [0,1].
    Image inpaint(const PreparedSample& s) const;

    /// Masked L1 on unclamped predictions. When `predictions` is given it
    /// receives the forward pass so a later gradient can reuse it.
    double loss(const PreparedSample& s, std::vector<double>* predictions = nullptr) const;

    /// Mean masked L1 over the batch and its analytic gradient. `cached`,
    /// when non-empty, holds one entry per batch sample; a non-null entry is
    /// that sample's forward pass under the current parameters.
    double loss_and_gradient(std::span<const PreparedSample* const> batch, std::vector<double>& grad,
                             std::span<const std::vector<double>* const> cached = {}) const;

    void step(std::span<const double> grad);

private:
    size_t weight_index(int c, int ky, int kx) const {
        return (static_cast<size_t>(c) * kernel_ + ky) * kernel_ + kx;
    }
    size_t bias_index(int c) const { return static_cast<size_t>(channels_) * kernel_ * kernel_ + c; }

    int channels_;
    int kernel_;
    double learning_rate_;
    std::vector<double> params_;
};

}  // namespace batchlens::harness
