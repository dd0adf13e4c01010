#include "axmag/frame.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace axmag {

Frame::Frame(int height, int width, int channels, float fill)
    : height_(height), width_(width), channels_(channels) {
    if (height <= 0 || width <= 0 || channels <= 0) {
        throw ShapeError("frame dimensions must be positive");
    }
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

Frame::Frame(int height, int width, int channels, std::vector<float> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
    if (height <= 0 || width <= 0 || channels <= 0) {
        throw ShapeError("frame dimensions must be positive");
    }
    if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
        throw ShapeError("frame payload does not match dimensions");
    }
}

Frame Frame::channel(int c) const {
    if (c < 0 || c >= channels_) throw ShapeError("channel index out of range");
    Frame out(height_, width_, 1);
    const std::size_t n = static_cast<std::size_t>(height_) * width_;
    for (std::size_t i = 0; i < n; ++i) out.data_[i] = data_[i * channels_ + c];
    return out;
}

void Frame::set_channel(int c, const Frame& plane) {
    if (c < 0 || c >= channels_) throw ShapeError("channel index out of range");
    if (plane.height_ != height_ || plane.width_ != width_ || plane.channels_ != 1) {
        throw ShapeError("plane does not match frame");
    }
    const std::size_t n = static_cast<std::size_t>(height_) * width_;
    for (std::size_t i = 0; i < n; ++i) data_[i * channels_ + c] = plane.data_[i];
}

Frame Frame::to_gray() const {
    if (channels_ == 1) return *this;
    Frame out(height_, width_, 1);
    const std::size_t n = static_cast<std::size_t>(height_) * width_;
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (int c = 0; c < channels_; ++c) s += data_[i * channels_ + c];
        out.data_[i] = static_cast<float>(s / channels_);
    }
    return out;
}

Frame Frame::clamped() const {
    Frame out = *this;
    for (float& v : out.data_) v = std::clamp(v, 0.0f, 1.0f);
    return out;
}

double max_abs_diff(const Frame& a, const Frame& b) {
    if (!a.same_shape(b)) throw ShapeError("frame shapes differ");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(static_cast<double>(a.data()[i]) - b.data()[i]));
    }
    return m;
}

double mean_abs_diff(const Frame& a, const Frame& b) {
    if (!a.same_shape(b)) throw ShapeError("frame shapes differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += std::abs(static_cast<double>(a.data()[i]) - b.data()[i]);
    }
    return s / static_cast<double>(a.size());
}

double psnr(const Frame& a, const Frame& b) {
    if (!a.same_shape(b)) throw ShapeError("frame shapes differ");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a.data()[i]) - b.data()[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

}  // namespace axmag
