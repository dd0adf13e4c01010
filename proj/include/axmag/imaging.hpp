#pragma once

#include <cstdint>
#include <vector>

#include "axmag/frame.hpp"

namespace axmag {

enum class Boundary { Replicate, Reflect };

/// Shifts the frame content by (dx, dy): output(x,y) samples input at
/// (x-dx, y-dy) with bilinear interpolation. Integer shifts are exact copies.
Frame translate_bilinear(const Frame& frame, double dx, double dy, Boundary boundary = Boundary::Replicate);

/// Bilinear sample of channel `c` at a real-valued position.
float sample_bilinear(const Frame& frame, double x, double y, int c, Boundary boundary = Boundary::Replicate);

/// Normalised 1D Gaussian taps with radius ceil(3 sigma) unless given.
std::vector<double> gaussian_kernel(double sigma, int radius = -1);

/// Separable Gaussian blur, replicate borders, applied per channel.
Frame gaussian_blur(const Frame& frame, double sigma);

/// Mean SSIM over valid 11x11 windows (Gaussian sigma 1.5, C1=0.01^2,
/// C2=0.03^2). Colour input is reduced to the mean of its channels.
double ssim(const Frame& a, const Frame& b);

struct NoiseSpec {
    double factor = 0.0;
    std::uint64_t seed = 0;
};

/// Additive Gaussian noise with std factor*sqrt(max(v,1/255))/255, clamped.
Frame add_noise(const Frame& frame, const NoiseSpec& spec);

/// Uniform dither in [-0.5/255, 0.5/255] followed by rounding to the
/// 8-bit grid {k/255}.
Frame quantize_with_dither(const Frame& frame, std::uint64_t seed);

/// Rounds a value in [0,1] to the 8-bit grid without dither.
float quantize8(float v);

}  // namespace axmag
