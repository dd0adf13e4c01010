#include "axmag/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace axmag {
namespace {

int wrap_index(int i, int n, Boundary boundary) {
    if (i >= 0 && i < n) return i;
    if (boundary == Boundary::Replicate || n == 1) return std::clamp(i, 0, n - 1);
    // Half-sample symmetric reflection: -1 -> 0, n -> n-1.
    const int period = 2 * n;
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - 1 - m;
}

// Valid-mode separable filtering of a double plane.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w, const std::vector<double>& taps) {
    const int k = static_cast<int>(taps.size());
    const int ow = w - k + 1;
    const int oh = h - k + 1;
    std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int t = 0; t < k; ++t) s += taps[t] * src[static_cast<std::size_t>(y) * w + x + t];
            tmp[static_cast<std::size_t>(y) * ow + x] = s;
        }
    }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int t = 0; t < k; ++t) s += taps[t] * tmp[static_cast<std::size_t>(y + t) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    }
    return out;
}

}  // namespace

float sample_bilinear(const Frame& frame, double x, double y, int c, Boundary boundary) {
    const double fx0 = std::floor(x);
    const double fy0 = std::floor(y);
    const double fx = x - fx0;
    const double fy = y - fy0;
    const int x0 = static_cast<int>(fx0);
    const int y0 = static_cast<int>(fy0);
    const int h = frame.height();
    const int w = frame.width();
    const int xa = wrap_index(x0, w, boundary);
    const int xb = wrap_index(x0 + 1, w, boundary);
    const int ya = wrap_index(y0, h, boundary);
    const int yb = wrap_index(y0 + 1, h, boundary);
    const double top = (1.0 - fx) * frame.at(ya, xa, c) + fx * frame.at(ya, xb, c);
    const double bottom = (1.0 - fx) * frame.at(yb, xa, c) + fx * frame.at(yb, xb, c);
    return static_cast<float>((1.0 - fy) * top + fy * bottom);
}

Frame translate_bilinear(const Frame& frame, double dx, double dy, Boundary boundary) {
    if (!std::isfinite(dx) || !std::isfinite(dy)) throw std::invalid_argument("translation must be finite");
    const int h = frame.height();
    const int w = frame.width();
    const int ch = frame.channels();
    Frame out(h, w, ch);

    // Source column/row indices and weights are shared by all pixels.
    const double ix = std::floor(-dx);
    const double iy = std::floor(-dy);
    const double fx = -dx - ix;
    const double fy = -dy - iy;
    std::vector<int> xa(w), xb(w);
    for (int x = 0; x < w; ++x) {
        xa[x] = wrap_index(x + static_cast<int>(ix), w, boundary);
        xb[x] = wrap_index(x + static_cast<int>(ix) + 1, w, boundary);
    }
    for (int y = 0; y < h; ++y) {
        const int ya = wrap_index(y + static_cast<int>(iy), h, boundary);
        const int yb = wrap_index(y + static_cast<int>(iy) + 1, h, boundary);
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < ch; ++c) {
                const double top = (1.0 - fx) * frame.at(ya, xa[x], c) + fx * frame.at(ya, xb[x], c);
                const double bottom = (1.0 - fx) * frame.at(yb, xa[x], c) + fx * frame.at(yb, xb[x], c);
                out.at(y, x, c) = static_cast<float>((1.0 - fy) * top + fy * bottom);
            }
        }
    }
    return out;
}

std::vector<double> gaussian_kernel(double sigma, int radius) {
    if (sigma <= 0.0) throw std::invalid_argument("sigma must be positive");
    if (radius < 0) radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> taps(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        taps[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += taps[i + radius];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

Frame gaussian_blur(const Frame& frame, double sigma) {
    const auto taps = gaussian_kernel(sigma);
    const int r = static_cast<int>(taps.size() / 2);
    const int h = frame.height();
    const int w = frame.width();
    const int ch = frame.channels();
    Frame tmp(h, w, ch);
    Frame out(h, w, ch);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < ch; ++c) {
                double s = 0.0;
                for (int t = -r; t <= r; ++t) s += taps[t + r] * frame.at(y, std::clamp(x + t, 0, w - 1), c);
                tmp.at(y, x, c) = static_cast<float>(s);
            }
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < ch; ++c) {
                double s = 0.0;
                for (int t = -r; t <= r; ++t) s += taps[t + r] * tmp.at(std::clamp(y + t, 0, h - 1), x, c);
                out.at(y, x, c) = static_cast<float>(s);
            }
        }
    }
    return out;
}

double ssim(const Frame& a, const Frame& b) {
    if (!a.same_shape(b)) throw ShapeError("ssim: frame shapes differ");
    constexpr int kWindow = 11;
    constexpr double kC1 = 0.01 * 0.01;
    constexpr double kC2 = 0.03 * 0.03;
    const Frame ga = a.to_gray();
    const Frame gb = b.to_gray();
    const int h = ga.height();
    const int w = ga.width();
    if (h < kWindow || w < kWindow) throw ShapeError("ssim: frames smaller than the 11x11 window");

    const std::size_t n = static_cast<std::size_t>(h) * w;
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = ga.data()[i];
        y[i] = gb.data()[i];
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    const auto taps = gaussian_kernel(1.5, kWindow / 2);
    const auto mx = filter_valid(x, h, w, taps);
    const auto my = filter_valid(y, h, w, taps);
    const auto mxx = filter_valid(xx, h, w, taps);
    const auto myy = filter_valid(yy, h, w, taps);
    const auto mxy = filter_valid(xy, h, w, taps);

    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = mxx[i] - mx[i] * mx[i];
        const double vy = myy[i] - my[i] * my[i];
        const double cxy = mxy[i] - mx[i] * my[i];
        const double num = (2.0 * mx[i] * my[i] + kC1) * (2.0 * cxy + kC2);
        const double den = (mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2);
        total += num / den;
    }
    return total / static_cast<double>(mx.size());
}

Frame add_noise(const Frame& frame, const NoiseSpec& spec) {
    if (spec.factor < 0.0) throw std::invalid_argument("noise factor must be non-negative");
    if (spec.factor == 0.0) return frame;
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Frame out = frame;
    for (float& v : out.storage()) {
        const double stddev = spec.factor * std::sqrt(std::max(static_cast<double>(v), 1.0 / 255.0)) / 255.0;
        v = static_cast<float>(std::clamp(v + stddev * normal(rng), 0.0, 1.0));
    }
    return out;
}

float quantize8(float v) {
    const double level = std::clamp(std::floor(static_cast<double>(v) * 255.0 + 0.5), 0.0, 255.0);
    return static_cast<float>(level / 255.0);
}

Frame quantize_with_dither(const Frame& frame, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dither(-0.5, 0.5);
    Frame out = frame;
    for (float& v : out.storage()) {
        const double level = std::floor(static_cast<double>(v) * 255.0 + dither(rng) + 0.5);
        v = static_cast<float>(std::clamp(level, 0.0, 255.0) / 255.0);
    }
    return out;
}

}  // namespace axmag
