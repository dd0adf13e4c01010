#include "axmag/procedural.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "axmag/fft.hpp"

namespace axmag {
namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> fractal_plane(int h, int w, double beta, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    std::vector<cplx> spec(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y) {
        const int ky = signed_bin(y, h);
        for (int x = 0; x < w; ++x) {
            const int kx = signed_bin(x, w);
            const double r = std::hypot(static_cast<double>(kx), static_cast<double>(ky));
            const double amp = r == 0.0 ? 0.0 : std::pow(r, -beta);
            spec[static_cast<std::size_t>(y) * w + x] = std::polar(amp, phase(rng));
        }
    }
    fft2d(spec, h, w, true);
    std::vector<double> plane(spec.size());
    double peak = 0.0;
    for (std::size_t i = 0; i < plane.size(); ++i) {
        plane[i] = spec[i].real();
        peak = std::max(peak, std::abs(plane[i]));
    }
    if (peak > 0.0)
        for (double& v : plane) v /= peak;
    return plane;
}

}  // namespace

Mask Mask::filled(int height, int width, float v) {
    Mask m;
    m.height = height;
    m.width = width;
    m.values.assign(static_cast<std::size_t>(height) * width, v);
    return m;
}

Frame fractal_texture(int height, int width, int channels, double beta, std::mt19937_64& rng) {
    const auto base = fractal_plane(height, width, beta, rng);
    std::uniform_real_distribution<double> mean(0.25, 0.75);
    std::uniform_real_distribution<double> amp(0.15, 0.45);
    Frame out(height, width, channels);
    for (int c = 0; c < channels; ++c) {
        const double m = mean(rng);
        const double a = std::min(amp(rng), std::min(m, 1.0 - m));
        for (std::size_t i = 0; i < base.size(); ++i) {
            out.data()[i * channels + c] = static_cast<float>(std::clamp(m + a * base[i], 0.0, 1.0));
        }
    }
    return out;
}

Frame gradient_texture(int height, int width, int channels, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * kPi);
    const double a = ang(rng);
    const double ca = std::cos(a), sa = std::sin(a);
    const double span = std::abs(ca) * width + std::abs(sa) * height;
    Frame out(height, width, channels);
    for (int c = 0; c < channels; ++c) {
        const double lo = u(rng), hi = u(rng);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                double t = ((x - width / 2.0) * ca + (y - height / 2.0) * sa) / span + 0.5;
                t = std::clamp(t, 0.0, 1.0);
                out.at(y, x, c) = static_cast<float>(lo + (hi - lo) * t);
            }
        }
    }
    return out;
}

Mask random_blob(int height, int width, double cx, double cy, double radius, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    constexpr int kHarmonics = 4;
    double amp[kHarmonics], ph[kHarmonics];
    for (int k = 0; k < kHarmonics; ++k) {
        amp[k] = 0.25 * u(rng) / (k + 1);
        ph[k] = 2.0 * kPi * u(rng);
    }
    const double aspect = 0.6 + 0.8 * u(rng);
    Mask m = Mask::filled(height, width, 0.0f);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double dx = (x - cx) / aspect;
            const double dy = (y - cy) * aspect;
            const double th = std::atan2(dy, dx);
            double r = 1.0;
            for (int k = 0; k < kHarmonics; ++k) r += amp[k] * std::cos((k + 2) * th + ph[k]);
            if (std::hypot(dx, dy) <= radius * r) m.at(y, x) = 1.0f;
        }
    }
    return m;
}

Mask random_polygon(int height, int width, double cx, double cy, double radius, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> count(3, 8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = count(rng);
    std::vector<double> angles(n);
    for (double& a : angles) a = 2.0 * kPi * u(rng);
    std::sort(angles.begin(), angles.end());
    std::vector<std::pair<double, double>> pts;
    for (double a : angles) {
        const double r = radius * (0.6 + 0.4 * u(rng));
        pts.emplace_back(cx + r * std::cos(a), cy + r * std::sin(a));
    }
    Mask m = Mask::filled(height, width, 0.0f);
    // even-odd rule at pixel centres
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            bool inside = false;
            for (int i = 0, j = n - 1; i < n; j = i++) {
                const auto [xi, yi] = pts[i];
                const auto [xj, yj] = pts[j];
                if ((yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi) inside = !inside;
            }
            if (inside) m.at(y, x) = 1.0f;
        }
    }
    return m;
}

Frame natural_image(int height, int width, int channels, std::mt19937_64& rng) {
    Frame img = fractal_texture(height, width, channels, 1.0, rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int shapes = 3 + static_cast<int>(u(rng) * 4);
    for (int s = 0; s < shapes; ++s) {
        const double r = (0.08 + 0.15 * u(rng)) * std::min(height, width);
        const Mask m = random_blob(height, width, u(rng) * width, u(rng) * height, r, rng);
        const Frame tex = fractal_texture(height, width, channels, 1.5, rng);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x)
                if (m.at(y, x) > 0.5f)
                    for (int c = 0; c < channels; ++c) img.at(y, x, c) = tex.at(y, x, c);
    }
    return img;
}

}  // namespace axmag
