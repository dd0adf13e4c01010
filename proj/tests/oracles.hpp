#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "axmag/datagen.hpp"
#include "axmag/fft.hpp"

// Independent reference constructions shared by the unit and acceptance tests.
namespace axmag::test_oracles {

// Random-phase texture whose spectrum is flat on lo <= |w| <= hi rad/px,
// optionally restricted to within `spread_deg` of the direction `axis_deg`.
inline Frame annulus_texture(int n, double lo, double hi, std::uint64_t seed, double axis_deg = 0.0, double spread_deg = 90.0) {
    const double axis = axis_deg * std::numbers::pi / 180.0, min_cos = std::cos(spread_deg * std::numbers::pi / 180.0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(-std::numbers::pi, std::numbers::pi);
    std::vector<cplx> s(static_cast<std::size_t>(n) * n, 0.0);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double fx = signed_bin(x, n), fy = signed_bin(y, n);
            const double r = 2.0 * std::numbers::pi * std::hypot(fx, fy) / n;
            const double c = r > 0.0 ? std::abs(std::cos(std::atan2(fy, fx) - axis)) : 1.0;
            if (r >= lo && r <= hi && c >= min_cos - 1e-12) s[y * n + x] = std::polar(1.0, phase(rng));
        }
    fft2d(s, n, n, true);
    double sq = 0.0;
    for (const auto& v : s) sq += v.real() * v.real();
    const double scale = 0.15 / std::sqrt(sq / s.size());
    Frame f(n, n, 1);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) f.at(y, x) = static_cast<float>(0.5 + scale * s[y * n + x].real());
    return f;
}

inline Frame grating(int n, double lambda, double delta) {
    Frame f(n, n, 1);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) f.at(y, x) = static_cast<float>(0.5 + 0.25 * std::cos(2.0 * std::numbers::pi * (x - delta) / lambda));
    return f;
}

// Displacement of a grating along x from the phase of its fundamental.
inline double grating_shift(const Frame& a, const Frame& b, double lambda) {
    auto phase = [&](const Frame& f) {
        std::complex<double> acc = 0.0;
        for (int y = 0; y < f.height(); ++y)
            for (int x = 0; x < f.width(); ++x) acc += static_cast<double>(f.at(y, x)) * std::polar(1.0, -2.0 * std::numbers::pi * x / lambda);
        return std::arg(acc);
    };
    return -std::remainder(phase(b) - phase(a), 2.0 * std::numbers::pi) * lambda / (2.0 * std::numbers::pi);
}

// Scalar-loop compositor for integer translations, written independently of
// translate_bilinear / compose: clamp-to-edge source lookup, then
// back-to-front blending per pixel.
inline Frame oracle_compose(const LayerStack& stack, const std::vector<std::array<int, 2>>& shifts) {
    const Frame& bg = stack.layers[0].image;
    const int h = bg.height(), w = bg.width(), ch = bg.channels();
    Frame out(h, w, ch);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < ch; ++c) {
                float v = 0.0f;
                for (std::size_t k = 0; k < stack.layers.size(); ++k) {
                    const int sy = std::clamp(y - shifts[k][1], 0, h - 1);
                    const int sx = std::clamp(x - shifts[k][0], 0, w - 1);
                    const float m = k == 0 ? 1.0f : stack.layers[k].mask.at(sy, sx);
                    const float l = stack.layers[k].image.at(sy, sx, c);
                    if (m == 1.0f) v = l;
                    else if (m != 0.0f) v = m * l + (1.0f - m) * v;
                }
                out.at(y, x, c) = v;
            }
        }
    }
    return out;
}

}  // namespace axmag::test_oracles
