#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace axmag {

/// Thrown when a file cannot be read, written or parsed.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when array dimensions do not agree with what an operation needs.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Image with `channels` interleaved samples per pixel, stored row-major.
///
/// Values are nominally in [0,1]; intermediate results (e.g. magnified
/// frames before export) may leave that range and are clamped on save.
class Frame {
public:
    Frame() = default;
    Frame(int height, int width, int channels, float fill = 0.0f);
    Frame(int height, int width, int channels, std::vector<float> data);

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float& at(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
    float at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }

    std::span<float> data() { return data_; }
    std::span<const float> data() const { return data_; }
    std::vector<float>& storage() { return data_; }

    bool same_shape(const Frame& other) const {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }

    /// Single channel `c` as a new grayscale frame.
    Frame channel(int c) const;
    /// Writes a grayscale frame into channel `c`.
    void set_channel(int c, const Frame& plane);
    /// Mean of channels; identity for grayscale input.
    Frame to_gray() const;
    /// Clamped copy with every value in [0,1].
    Frame clamped() const;

    friend bool operator==(const Frame& a, const Frame& b) {
        return a.same_shape(b) && a.data_ == b.data_;
    }

private:
    std::size_t index(int y, int x, int c) const {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

/// Maximum absolute elementwise difference; throws ShapeError on mismatch.
double max_abs_diff(const Frame& a, const Frame& b);
/// Mean absolute elementwise difference; throws ShapeError on mismatch.
double mean_abs_diff(const Frame& a, const Frame& b);
/// Peak signal-to-noise ratio in dB for a peak value of 1.
double psnr(const Frame& a, const Frame& b);

}  // namespace axmag
