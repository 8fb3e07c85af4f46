#pragma once

#include <cstdint>
#include <vector>

#include "batchlens/imaging.hpp"

namespace batchlens::harness {

struct SyntheticSpec {
    int count = 512;
    int size = 32;
    int channels = 1;
    double textured_fraction = 0.4;
    double min_noise = 0.05;  // amplitude range of the high-frequency patches
    double max_noise = 0.45;
};

/// Smooth gradients with low-frequency ripples; a `textured_fraction` of
/// the images also carry a uniform-noise patch over the image center.
/// Deterministic for a given seed.
std::vector<imaging::Image> synthetic_images(const SyntheticSpec& spec, uint64_t seed);

}  // namespace batchlens::harness
