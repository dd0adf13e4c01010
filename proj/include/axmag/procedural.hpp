#pragma once

#include <random>
#include <vector>

#include "axmag/frame.hpp"

namespace axmag {

/// Binary mask stored as 0/1 floats, row-major.
struct Mask {
    int height = 0;
    int width = 0;
    std::vector<float> values;

    float at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
    float& at(int y, int x) { return values[static_cast<std::size_t>(y) * width + x]; }
    static Mask filled(int height, int width, float v);
};

/// Random-phase noise with a 1/f^beta amplitude spectrum, per channel
/// rescaled to a random sub-range of [0,1].
Frame fractal_texture(int height, int width, int channels, double beta, std::mt19937_64& rng);

/// Smooth linear colour gradient across the canvas.
Frame gradient_texture(int height, int width, int channels, std::mt19937_64& rng);

/// Star-shaped blob: radius modulated by a few random harmonics.
Mask random_blob(int height, int width, double cx, double cy, double radius, std::mt19937_64& rng);

/// Random convex-ish polygon with 3..8 vertices.
Mask random_polygon(int height, int width, double cx, double cy, double radius, std::mt19937_64& rng);

/// Natural-looking test image: fractal background with a few hard-edged
/// shaded blobs composited on top.
Frame natural_image(int height, int width, int channels, std::mt19937_64& rng);

}  // namespace axmag
