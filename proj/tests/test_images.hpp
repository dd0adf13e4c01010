#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "axmag/fft.hpp"
#include "axmag/procedural.hpp"

// Deterministic synthetic inputs shared by the test binaries.
namespace axmag::test_images {

inline Frame pink_noise(int h, int w, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return fractal_texture(h, w, 1, 1.0, rng);
}

inline Frame natural(int h, int w, std::uint64_t seed, int channels = 1) {
    std::mt19937_64 rng(seed * 7919 + 1);
    return natural_image(h, w, channels, rng);
}

// Exact periodic shift of a grayscale frame by (dx, dy), with an optional
// Gaussian lowpass of std `sigma` pixels.
inline Frame spectral_shift(const Frame& f, double dx, double dy, double sigma = 0.0) {
    const int h = f.height(), w = f.width();
    std::vector<cplx> s(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) s[y * w + x] = f.at(y, x);
    fft2d(s, h, w, false);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double wy = 2.0 * std::numbers::pi * signed_bin(y, h) / h;
            const double wx = 2.0 * std::numbers::pi * signed_bin(x, w) / w;
            const double g = std::exp(-0.5 * sigma * sigma * (wx * wx + wy * wy));
            s[y * w + x] *= g * std::polar(1.0, -(wx * dx + wy * dy));
        }
    fft2d(s, h, w, true);
    Frame out(h, w, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(y, x) = static_cast<float>(s[y * w + x].real() / (h * w));
    return out;
}

}  // namespace axmag::test_images
